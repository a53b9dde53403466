//! Parametric immersions `phi: U -> N` into a model space, evaluated with
//! second-order jets, and their pointwise fundamental forms.

mod catalog;
mod forms;

pub use catalog::{builtin, describe, BuiltinParams, BUILTIN_NAMES};
pub use forms::FundamentalForms;

use serde::{Deserialize, Serialize};

use crate::comparison::AmbientModel;
use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};

/// Hyperboloid charts must satisfy `|kappa <phi, phi>_L - 1|` below this,
/// plus a rounding allowance growing with `|kappa| |phi|^2`.
pub const CHART_SHEET_TOL: f64 = 1e-8;

/// The set the intrinsic distance is measured from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// The single base point `x0`.
    Point(Vec<f64>),
    /// The coordinate slice `u_axis = value`, e.g. the neck circle of a catenoid.
    Slice { axis: usize, value: f64 },
}

/// Serialisable description of an inline chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub vars: Vec<String>,
    /// `[lo, hi]` per variable.
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub periodic: Vec<bool>,
    /// Ambient coordinates: `n` for Euclidean targets, `n + 1` on the hyperboloid.
    pub components: Vec<String>,
    #[serde(default)]
    pub kappa: f64,
    /// Defaults to the centre of the domain.
    #[serde(default)]
    pub base_param: Option<Vec<f64>>,
    /// Defaults to the base point.
    #[serde(default)]
    pub anchor: Option<Anchor>,
    /// Ambient pole `y0`; defaults to `phi(x0)`.
    #[serde(default)]
    pub pole: Option<Vec<f64>>,
}

fn default_name() -> String {
    "inline".into()
}

/// Value and coordinate derivatives of `phi` at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    pub value: Vec<f64>,
    /// `d1[i] = d phi / du_i`
    pub d1: Vec<Vec<f64>>,
    /// `d2[i * m + j] = d^2 phi / du_i du_j`
    pub d2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ImmersionChart {
    name: String,
    vars: Vec<String>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    periodic: Vec<bool>,
    sources: Vec<String>,
    components: Vec<Expr>,
    ambient: AmbientModel,
    base: Vec<f64>,
    anchor: Anchor,
    pole: Vec<f64>,
}

impl ImmersionChart {
    pub fn from_spec(spec: &ChartSpec) -> Result<Self> {
        let m = spec.vars.len();
        if m == 0 {
            return Err(Error::InvalidParams("a chart needs at least one variable".into()));
        }
        if spec.domain.len() != m {
            return Err(Error::InvalidParams(format!(
                "domain has {} intervals for {m} variables",
                spec.domain.len()
            )));
        }
        for (name, [lo, hi]) in spec.vars.iter().zip(&spec.domain) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParams(format!("empty or infinite domain for {name}")));
            }
        }
        for (i, name) in spec.vars.iter().enumerate() {
            if spec.vars[..i].contains(name) {
                return Err(Error::InvalidParams(format!("variable {name} declared twice")));
            }
        }
        let periodic = match spec.periodic.len() {
            0 => vec![false; m],
            k if k == m => spec.periodic.clone(),
            k => {
                return Err(Error::InvalidParams(format!(
                    "periodic has {k} flags for {m} variables"
                )))
            }
        };
        let flat = spec.kappa == 0.0;
        let n = if flat { spec.components.len() } else { spec.components.len().saturating_sub(1) };
        let ambient = AmbientModel::new(spec.kappa, n)?;
        if n < m {
            return Err(Error::InvalidParams(format!(
                "ambient dimension {n} is below the chart dimension {m}"
            )));
        }
        let components = spec
            .components
            .iter()
            .map(|s| parse_expression(s, &spec.vars))
            .collect::<Result<Vec<_>>>()?;
        let lo: Vec<f64> = spec.domain.iter().map(|d| d[0]).collect();
        let hi: Vec<f64> = spec.domain.iter().map(|d| d[1]).collect();
        let base = match &spec.base_param {
            Some(b) => b.clone(),
            None => lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        };
        let mut chart = Self {
            name: spec.name.clone(),
            vars: spec.vars.clone(),
            lo,
            hi,
            periodic,
            sources: spec.components.clone(),
            components,
            ambient,
            base: base.clone(),
            anchor: spec.anchor.clone().unwrap_or(Anchor::Point(base.clone())),
            pole: Vec::new(),
        };
        if !chart.contains(&base) {
            return Err(Error::InvalidParams(format!("base point {base:?} outside the domain")));
        }
        match &chart.anchor {
            Anchor::Point(p) if !chart.contains(p) => {
                return Err(Error::InvalidParams(format!("anchor {p:?} outside the domain")))
            }
            Anchor::Slice { axis, value } => {
                if *axis >= m || !(chart.lo[*axis] <= *value && *value <= chart.hi[*axis]) {
                    return Err(Error::InvalidParams(format!(
                        "anchor slice u{} = {value} outside the domain",
                        axis + 1
                    )));
                }
                if chart.periodic[*axis] {
                    return Err(Error::InvalidParams("anchor slice along a periodic axis".into()));
                }
            }
            _ => {}
        }
        let value = chart.point(&base)?;
        chart.check_sheet(&value, &base)?;
        chart.pole = match &spec.pole {
            Some(p) => ambient.point(p.clone())?.into_coords(),
            None => value,
        };
        Ok(chart)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn ambient(&self) -> &AmbientModel {
        &self.ambient
    }

    /// The base parameter `x0`.
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn anchor(&self) -> &Anchor {
        &self.anchor
    }

    /// Ambient coordinates of the pole `y0` of `rho_N`.
    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    pub fn with_pole(mut self, pole: Vec<f64>) -> Result<Self> {
        self.pole = self.ambient.point(pole)?.into_coords();
        Ok(self)
    }

    pub fn with_anchor(mut self, anchor: Anchor) -> Self {
        self.anchor = anchor;
        self
    }

    /// Whether `u` lies in the closed domain box (periodic axes always do).
    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && (0..self.dim()).all(|i| self.periodic[i] || (self.lo[i] <= u[i] && u[i] <= self.hi[i]))
    }

    /// Maps periodic coordinates back into `[lo, hi)`.
    pub fn wrap(&self, u: &mut [f64]) {
        for i in 0..self.dim() {
            if self.periodic[i] {
                let period = self.hi[i] - self.lo[i];
                u[i] = self.lo[i] + (u[i] - self.lo[i]).rem_euclid(period);
            }
        }
    }

    fn check_domain(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::InvalidParams(format!(
                "expected {} chart coordinates, got {}",
                self.dim(),
                u.len()
            )));
        }
        if !self.contains(u) {
            return Err(Error::Domain(format!("{u:?} is outside the chart domain")));
        }
        Ok(())
    }

    fn check_sheet(&self, value: &[f64], u: &[f64]) -> Result<()> {
        let defect = self.ambient.sheet_defect(value);
        let size: f64 = value.iter().map(|x| x * x).sum::<f64>() * -self.ambient.kappa();
        if defect.abs() > CHART_SHEET_TOL + 16.0 * f64::EPSILON * size || (!self.ambient.is_flat() && value[0] <= 0.0) {
            return Err(Error::Domain(format!(
                "chart leaves the hyperboloid at {u:?}: kappa <phi, phi>_L - 1 = {defect:e}"
            )));
        }
        Ok(())
    }

    /// `phi(u)` in ambient coordinates.
    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(u)?;
        self.components.iter().map(|c| c.eval(u, &self.vars)).collect()
    }

    /// Value, first and second derivatives of `phi` at `u`.
    pub fn eval_jet2(&self, u: &[f64]) -> Result<ChartJet> {
        self.check_domain(u)?;
        let m = self.dim();
        let k = self.components.len();
        let mut jet = ChartJet {
            value: vec![0.0; k],
            d1: vec![vec![0.0; k]; m],
            d2: vec![vec![0.0; k]; m * m],
        };
        for (c, expr) in self.components.iter().enumerate() {
            let j = expr.eval_jet(u, &self.vars)?;
            jet.value[c] = j.value;
            for i in 0..m {
                jet.d1[i][c] = j.grad[i];
            }
            for ij in 0..m * m {
                jet.d2[ij][c] = j.hess[ij];
            }
        }
        self.check_sheet(&jet.value, u)?;
        Ok(jet)
    }

    /// Induced metric, second fundamental form and derived norms at `u`.
    pub fn fundamental_forms(&self, u: &[f64]) -> Result<FundamentalForms> {
        let jet = self.eval_jet2(u)?;
        FundamentalForms::from_jet(&self.ambient, &jet, u)
    }

    /// Extrinsic distance `rho_N(phi(u))` to the pole.
    pub fn rho_n(&self, u: &[f64]) -> Result<f64> {
        let y = self.point(u)?;
        self.ambient.distance_coords(&self.pole, &y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        let spec = ChartSpec {
            name: "t".into(),
            vars: vec!["u".into(), "v".into()],
            domain: vec![[0.0, 1.0], [0.0, 1.0]],
            periodic: vec![],
            components: vec!["u".into(), "v".into(), "w".into()],
            kappa: 0.0,
            base_param: None,
            anchor: None,
            pole: None,
        };
        assert!(matches!(ImmersionChart::from_spec(&spec), Err(Error::Parse { .. })));
        let mut ok = spec.clone();
        ok.components[2] = "0".into();
        let chart = ImmersionChart::from_spec(&ok).unwrap();
        assert_eq!(chart.base(), &[0.5, 0.5]);
        assert_eq!(chart.pole(), &[0.5, 0.5, 0.0]);
        let mut bad = ok.clone();
        bad.domain[1] = [1.0, 1.0];
        assert!(matches!(ImmersionChart::from_spec(&bad), Err(Error::InvalidParams(_))));
        let mut off_sheet = ok;
        off_sheet.kappa = -1.0;
        off_sheet.components = vec!["2".into(), "u".into(), "v".into()];
        assert!(matches!(ImmersionChart::from_spec(&off_sheet), Err(Error::Domain(_))));
    }

    #[test]
    fn periodic_wrap() {
        let chart = builtin("cylinder", &BuiltinParams::default()).unwrap();
        let mut u = vec![-0.5, 1.0];
        chart.wrap(&mut u);
        assert!((u[0] - (2.0 * std::f64::consts::PI - 0.5)).abs() < 1e-15);
        assert!(chart.contains(&[7.0, 0.0]));
        assert!(!chart.contains(&[0.0, 100.0]));
    }
}
