use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Anchor, ChartSpec, ImmersionChart};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 7] = [
    "plane",
    "cylinder",
    "catenoid",
    "helicoid",
    "paraboloid",
    "euclidean_graph",
    "geodesic_plane_hyperbolic",
];

/// Optional knobs for the catalog. Each entry accepts only the ones it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinParams {
    /// Half-width of the parameter box along the non-periodic axes.
    pub extent: Option<f64>,
    /// Cylinder radius.
    pub radius: Option<f64>,
    /// Ambient curvature of the hyperbolic entry.
    pub kappa: Option<f64>,
    /// Height function `f(u, v)` of `euclidean_graph`.
    pub f: Option<String>,
    /// Ambient pole `y0`.
    pub pole: Option<Vec<f64>>,
}

/// One-line description of each builtin, for listings.
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "plane" => "(u, v) -> (u, v, 0) in R^3, box [-L, L]^2, L = 5",
        "cylinder" => "(u, v) -> (r cos u, r sin u, v), u periodic, |v| <= L = 10, r = 1",
        "catenoid" => "(u, v) -> (cosh u cos v, cosh u sin v, u), |u| <= asinh 25, v periodic; distances from the neck",
        "helicoid" => "(u, v) -> (v cos u, v sin u, u), box [-L, L]^2, L = 10",
        "paraboloid" => "(u, v) -> (u, v, u^2 + v^2), box [-L, L]^2, L = 3",
        "euclidean_graph" => "(u, v) -> (u, v, f(u, v)), f = exp(-(u^2 + v^2)), box [-L, L]^2, L = 5",
        "geodesic_plane_hyperbolic" => "totally geodesic plane in the hyperboloid model of curvature kappa = -1, box [-L, L]^2, L = 5",
        _ => return None,
    })
}

fn num(x: f64) -> String {
    format!("({x:?})")
}

fn positive(name: &str, value: Option<f64>, default: f64) -> Result<f64> {
    let v = value.unwrap_or(default);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(v)
}

pub fn builtin(name: &str, params: &BuiltinParams) -> Result<ImmersionChart> {
    let allowed: &[&str] = match name {
        "plane" | "helicoid" | "paraboloid" => &["extent", "pole"],
        "cylinder" => &["extent", "radius", "pole"],
        "catenoid" => &["extent", "pole"],
        "euclidean_graph" => &["extent", "f", "pole"],
        "geodesic_plane_hyperbolic" => &["extent", "kappa", "pole"],
        _ => return Err(Error::UnknownBuiltin(name.to_string())),
    };
    let given = [
        ("extent", params.extent.is_some()),
        ("radius", params.radius.is_some()),
        ("kappa", params.kappa.is_some()),
        ("f", params.f.is_some()),
        ("pole", params.pole.is_some()),
    ];
    for (key, present) in given {
        if present && !allowed.contains(&key) {
            return Err(Error::InvalidParams(format!("{name} does not take parameter {key}")));
        }
    }

    let uv = vec!["u".to_string(), "v".to_string()];
    let sq = |l: f64| vec![[-l, l], [-l, l]];
    let mut spec = ChartSpec {
        name: name.to_string(),
        vars: uv,
        domain: Vec::new(),
        periodic: vec![],
        components: Vec::new(),
        kappa: 0.0,
        base_param: Some(vec![0.0, 0.0]),
        anchor: None,
        pole: None,
    };
    match name {
        "plane" => {
            spec.domain = sq(positive("extent", params.extent, 5.0)?);
            spec.components = vec!["u".into(), "v".into(), "0".into()];
        }
        "cylinder" => {
            let l = positive("extent", params.extent, 10.0)?;
            let r = num(positive("radius", params.radius, 1.0)?);
            spec.domain = vec![[0.0, 2.0 * PI], [-l, l]];
            spec.periodic = vec![true, false];
            spec.components = vec![format!("{r}*cos(u)"), format!("{r}*sin(u)"), "v".into()];
        }
        "catenoid" => {
            let l = positive("extent", params.extent, 25f64.asinh())?;
            spec.domain = vec![[-l, l], [0.0, 2.0 * PI]];
            spec.periodic = vec![false, true];
            spec.components = vec!["cosh(u)*cos(v)".into(), "cosh(u)*sin(v)".into(), "u".into()];
            spec.anchor = Some(Anchor::Slice { axis: 0, value: 0.0 });
            spec.pole = Some(vec![0.0; 3]);
        }
        "helicoid" => {
            spec.domain = sq(positive("extent", params.extent, 10.0)?);
            spec.components = vec!["v*cos(u)".into(), "v*sin(u)".into(), "u".into()];
        }
        "paraboloid" => {
            spec.domain = sq(positive("extent", params.extent, 3.0)?);
            spec.components = vec!["u".into(), "v".into(), "u^2 + v^2".into()];
        }
        "euclidean_graph" => {
            spec.domain = sq(positive("extent", params.extent, 5.0)?);
            let f = params.f.clone().unwrap_or_else(|| "exp(-(u^2 + v^2))".into());
            spec.components = vec!["u".into(), "v".into(), format!("({f})")];
        }
        "geodesic_plane_hyperbolic" => {
            let kappa = params.kappa.unwrap_or(-1.0);
            if !(kappa < 0.0) || !kappa.is_finite() {
                return Err(Error::InvalidParams(format!("kappa must be negative, got {kappa}")));
            }
            spec.domain = sq(positive("extent", params.extent, 5.0)?);
            spec.kappa = kappa;
            let s = num((-kappa).sqrt());
            spec.components = vec![
                format!("cosh({s}*u)*cosh({s}*v)/{s}"),
                format!("sinh({s}*u)*cosh({s}*v)/{s}"),
                format!("sinh({s}*v)/{s}"),
                "0".into(),
            ];
        }
        _ => unreachable!(),
    }
    if let Some(p) = &params.pole {
        spec.pole = Some(p.clone());
    }
    ImmersionChart::from_spec(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_constructs() {
        for name in BUILTIN_NAMES {
            let chart = builtin(name, &BuiltinParams::default()).unwrap();
            assert_eq!(chart.dim(), 2);
            assert!(describe(name).is_some());
        }
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(builtin("torus", &BuiltinParams::default()), Err(Error::UnknownBuiltin(_))));
        let p = BuiltinParams { kappa: Some(-1.0), ..Default::default() };
        assert!(matches!(builtin("plane", &p), Err(Error::InvalidParams(_))));
        let p = BuiltinParams { extent: Some(-1.0), ..Default::default() };
        assert!(matches!(builtin("catenoid", &p), Err(Error::InvalidParams(_))));
        let p = BuiltinParams { kappa: Some(0.0), ..Default::default() };
        assert!(builtin("geodesic_plane_hyperbolic", &p).is_err());
    }

    #[test]
    fn catenoid_anchor_and_pole() {
        let chart = builtin("catenoid", &BuiltinParams::default()).unwrap();
        assert_eq!(chart.pole(), &[0.0, 0.0, 0.0]);
        assert_eq!(chart.anchor(), &Anchor::Slice { axis: 0, value: 0.0 });
        assert!((chart.hi()[0].sinh() - 25.0).abs() < 1e-12);
        assert!((chart.rho_n(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
