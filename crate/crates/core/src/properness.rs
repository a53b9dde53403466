//! Properness of tamed immersions through `f = h(rho_N)`, with `h(t) = t^2`
//! in flat ambients and `h(t) = cosh(sqrt(-kappa) t)` in hyperbolic ones.

use serde::Serialize;

use crate::comparison::{ct_over_st, AmbientModel};
use crate::error::{Error, Result};
use crate::immersion::{FundamentalForms, ImmersionChart};
use crate::linalg::sym_eigen;
use crate::sampled::SampledSubmanifold;
use crate::tamedness::{level_radius, TamednessReport};

/// Mesh tolerances are this many local edge lengths.
pub const TOL_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `kappa = 0`, `h(t) = t^2`.
    Flat,
    /// `kappa < 0`, `h(t) = cosh(sqrt(-kappa) t)`.
    Hyperbolic,
}

/// The profile `h` for a given ambient curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Profile {
    pub branch: Branch,
    pub kappa: f64,
}

impl Profile {
    pub fn for_model(model: &AmbientModel) -> Self {
        let branch = if model.is_flat() { Branch::Flat } else { Branch::Hyperbolic };
        Self { branch, kappa: model.kappa() }
    }

    fn root(&self) -> f64 {
        (-self.kappa).sqrt()
    }

    pub fn h(&self, t: f64) -> f64 {
        match self.branch {
            Branch::Flat => t * t,
            Branch::Hyperbolic => (self.root() * t).cosh(),
        }
    }

    pub fn h1(&self, t: f64) -> f64 {
        match self.branch {
            Branch::Flat => 2.0 * t,
            Branch::Hyperbolic => self.root() * (self.root() * t).sinh(),
        }
    }

    pub fn h2(&self, t: f64) -> f64 {
        match self.branch {
            Branch::Flat => 2.0,
            Branch::Hyperbolic => -self.kappa * (self.root() * t).cosh(),
        }
    }

    /// Lower bound of `Hess f` on unit vectors where the ratio is at most `c`.
    pub fn outer_bound(&self, c: f64) -> f64 {
        match self.branch {
            Branch::Flat => 2.0 * (1.0 - c),
            Branch::Hyperbolic => -self.kappa * (1.0 - c),
        }
    }

    /// Right-hand side of the growth bound in its original single-formula form.
    pub fn literal_bound(&self, c: f64, r0: f64, b: f64, rho: f64) -> f64 {
        match self.branch {
            Branch::Flat => (1.0 - c) * rho * rho + (b - 2.0 * (1.0 - c)) * r0 * rho,
            Branch::Hyperbolic => {
                let s = self.root();
                s * (1.0 - c) * rho * rho + (b / s - s * (1.0 - c)) * r0 * rho + 1.0
            }
        }
    }
}

/// Coordinate matrix of `Hess f` at `y = phi(u)`, given the tangents `d phi / d u_i`
/// and the fundamental forms there. At the pole the limit `h''(0) g` is used.
pub fn hessian_matrix(
    model: &AmbientModel,
    pole: &[f64],
    y: &[f64],
    tangents: &[Vec<f64>],
    forms: &FundamentalForms,
) -> Result<Vec<f64>> {
    let m = forms.m;
    let profile = Profile::for_model(model);
    let rho = model.distance_coords(pole, y)?;
    if rho == 0.0 {
        return Ok(forms.g.iter().map(|g| profile.h2(0.0) * g).collect());
    }
    let grad = model.grad_coords(pole, y)?;
    let cs = ct_over_st(model.kappa(), rho)?;
    let (h1, h2) = (profile.h1(rho), profile.h2(rho));
    let dot: Vec<f64> = tangents.iter().map(|x| model.inner(&grad, x)).collect();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let hess_rho = cs * (forms.g[i * m + j] - dot[i] * dot[j]);
            out[i * m + j] = h2 * dot[i] * dot[j] + h1 * (hess_rho + model.inner(&grad, &forms.alpha[i * m + j]));
        }
    }
    Ok(out)
}

fn chart_hessian(chart: &ImmersionChart, u: &[f64]) -> Result<(Vec<f64>, FundamentalForms)> {
    let model = chart.ambient();
    let jet = chart.eval_jet2(u)?;
    if model.distance_coords(chart.pole(), &jet.value)? == 0.0 {
        return Err(Error::Domain(format!("phi({u:?}) is the pole of the distance function")));
    }
    let forms = FundamentalForms::from_jet(model, &jet, u)?;
    let h = hessian_matrix(model, chart.pole(), &jet.value, &jet.d1, &forms)?;
    Ok((h, forms))
}

/// `Hess f (X, Y)` for coordinate vectors at `u`.
pub fn hessian_bilinear(chart: &ImmersionChart, u: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let (h, forms) = chart_hessian(chart, u)?;
    let m = forms.m;
    Ok((0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| h[i * m + j] * x[i] * y[j]).sum())
}

/// `Hess f (X, X)`.
pub fn hessian_composed(chart: &ImmersionChart, u: &[f64], x: &[f64]) -> Result<f64> {
    hessian_bilinear(chart, u, x, x)
}

/// Smallest eigenvalue of `Hess f` with respect to `g`.
pub fn min_eigenvalue(forms: &FundamentalForms, hess: &[f64]) -> f64 {
    let m = forms.m;
    let mut frame_h = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            let mut sum = 0.0;
            for i in 0..m {
                for j in 0..m {
                    sum += forms.frame[i * m + a] * hess[i * m + j] * forms.frame[j * m + b];
                }
            }
            frame_h[a * m + b] = sum;
        }
    }
    sym_eigen(&frame_h, m).0[0]
}

/// `Delta f` as the `g`-trace of the Hessian.
pub fn laplacian_from_hessian(forms: &FundamentalForms, hess: &[f64]) -> f64 {
    forms.g_inv.iter().zip(hess).map(|(a, b)| a * b).sum()
}

/// `Delta f` at a chart point.
pub fn laplacian(chart: &ImmersionChart, u: &[f64]) -> Result<f64> {
    let (h, forms) = chart_hessian(chart, u)?;
    Ok(laplacian_from_hessian(&forms, &h))
}

/// `Hess f` at a sampled vertex.
pub fn vertex_hessian(s: &SampledSubmanifold, v: usize) -> Result<Vec<f64>> {
    hessian_matrix(s.chart().ambient(), s.chart().pole(), s.point(v), s.tangents(v), s.forms(v))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessViolation {
    pub vertex: usize,
    pub rho_m: f64,
    pub min_eigenvalue: f64,
    pub bound: f64,
}

/// Vertices outside `B_M(r0)` where the smallest Hessian eigenvalue falls
/// below the outer bound by more than the mesh tolerance.
pub fn hess_lower_bound_check(s: &SampledSubmanifold, c: f64, r0: f64) -> Result<Vec<HessViolation>> {
    let bound = Profile::for_model(s.chart().ambient()).outer_bound(c);
    let mut out = Vec::new();
    for v in 0..s.len() {
        let rho = s.rho_m()[v];
        if !(rho > r0) || !rho.is_finite() {
            continue;
        }
        let lambda = min_eigenvalue(s.forms(v), &vertex_hessian(s, v)?);
        if lambda < bound - TOL_FACTOR * s.local_scale(v) {
            out.push(HessViolation { vertex: v, rho_m: rho, min_eigenvalue: lambda, bound });
        }
    }
    Ok(out)
}

/// `b`: smallest Hessian eigenvalue over the sampled ball `B_M(r0)`.
pub fn compute_b(s: &SampledSubmanifold, r0: f64) -> Result<f64> {
    let mut b = f64::INFINITY;
    for v in 0..s.len() {
        if s.rho_m()[v] <= r0 {
            b = b.min(min_eigenvalue(s.forms(v), &vertex_hessian(s, v)?));
        }
    }
    if b.is_finite() {
        Ok(b)
    } else {
        Err(Error::Precondition(format!("no sampled vertex within rho_M <= {r0}")))
    }
}

/// Piecewise quadratic lower bound for `f` along unit-speed minimal geodesics
/// leaving the anchor: `(f o sigma)'' >= b` up to `r0` and `>= q` beyond,
/// starting from value `f0` and slope `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub f0: f64,
    pub s0: f64,
    pub b: f64,
    pub q: f64,
    pub r0: f64,
}

impl Envelope {
    pub fn value(&self, rho: f64) -> f64 {
        if rho <= self.r0 {
            self.f0 + self.s0 * rho + 0.5 * self.b * rho * rho
        } else {
            let d = rho - self.r0;
            self.f0 + self.s0 * rho + 0.5 * self.b * self.r0 * self.r0 + self.b * self.r0 * d + 0.5 * self.q * d * d
        }
    }

    pub fn slope(&self, rho: f64) -> f64 {
        if rho <= self.r0 {
            self.s0 + self.b * rho
        } else {
            self.s0 + self.b * self.r0 + self.q * (rho - self.r0)
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.q > 0.0 || (self.q == 0.0 && self.slope(self.r0) > 0.0)
    }

    /// Smallest radius beyond which the envelope is nondecreasing.
    pub fn increasing_beyond(&self) -> Option<f64> {
        let at = self.slope(self.r0);
        if self.q < 0.0 || (self.q == 0.0 && at < 0.0) {
            return None;
        }
        if at < 0.0 {
            return Some(self.r0 - at / self.q);
        }
        if self.s0 >= 0.0 {
            Some(0.0)
        } else {
            Some(-self.s0 / self.b)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthViolation {
    pub vertex: usize,
    pub rho_m: f64,
    pub slack: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropernessCertificate {
    pub branch: Branch,
    pub c: f64,
    pub r0: f64,
    pub b: f64,
    pub envelope: Envelope,
    /// `f - G(rho_M)` per vertex; `None` outside the covered ball.
    #[serde(skip)]
    pub slack: Vec<Option<f64>>,
    pub min_slack: f64,
    pub violations: Vec<GrowthViolation>,
    pub hess_violations: Vec<HessViolation>,
    /// Vertices beyond the cover radius, where sampled distances may run along
    /// the boundary of the parameter box.
    pub exempt: usize,
    pub literal_min_slack: f64,
    /// Largest sampled `rho_M` at which the single-formula bound fails.
    pub literal_holds_beyond: f64,
    /// `min rho_N` over `{r <= rho_M <= r + 1}` for `r = 0, 1, ...`.
    pub witness: Vec<f64>,
    pub witness_increasing: bool,
    pub proper: bool,
}

/// Value and steepest descent of `f` over the anchor.
fn anchor_data(s: &SampledSubmanifold, profile: &Profile) -> Result<(f64, f64)> {
    let chart = s.chart();
    let model = chart.ambient();
    let (mut f0, mut s0) = (f64::INFINITY, 0.0f64);
    for u in s.anchor_params() {
        let jet = chart.eval_jet2(&u)?;
        let rho = model.distance_coords(chart.pole(), &jet.value)?;
        f0 = f0.min(profile.h(rho));
        if rho > 0.0 {
            let forms = FundamentalForms::from_jet(model, &jet, &u)?;
            let grad = model.grad_coords(chart.pole(), &jet.value)?;
            let m = forms.m;
            let dot: Vec<f64> = jet.d1.iter().map(|x| model.inner(&grad, x)).collect();
            let tangential: f64 =
                (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| forms.g_inv[i * m + j] * dot[i] * dot[j]).sum();
            s0 = s0.min(-profile.h1(rho) * tangential.max(0.0).sqrt());
        }
    }
    Ok((f0, s0))
}

/// Checks `f >= G(rho_M)` at every covered vertex, the Hessian bound outside
/// `B_M(r0)`, the single-formula bound and the monotone witness.
pub fn verify_growth(s: &SampledSubmanifold, c: f64, r0: f64, b: f64) -> Result<PropernessCertificate> {
    if !(c > 0.0 && c < 1.0) || !(r0 >= 0.0) || !b.is_finite() {
        return Err(Error::InvalidParams(format!("need 0 < c < 1, r0 >= 0 and finite b; got c = {c}, r0 = {r0}, b = {b}")));
    }
    let profile = Profile::for_model(s.chart().ambient());
    let (f0, s0) = anchor_data(s, &profile)?;
    let envelope = Envelope { f0, s0, b, q: profile.outer_bound(c), r0 };
    let cover = s.cover_radius();

    let mut slack = Vec::with_capacity(s.len());
    let mut violations = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut literal = vec![0.0; s.len()];
    let mut literal_min = f64::INFINITY;
    let mut exempt = 0;
    for v in 0..s.len() {
        let rho = s.rho_m()[v];
        if !(rho <= cover) {
            exempt += 1;
            slack.push(None);
            continue;
        }
        let f = profile.h(s.rho_n()[v]);
        let value = f - envelope.value(rho);
        let tol = TOL_FACTOR * s.local_scale(v) * envelope.slope(rho).abs() + 1e-9 * (1.0 + f.abs());
        if value < -tol {
            violations.push(GrowthViolation { vertex: v, rho_m: rho, slack: value, tol });
        }
        min_slack = min_slack.min(value);
        slack.push(Some(value));
        let lit = f - profile.literal_bound(c, r0, b, rho);
        literal_min = literal_min.min(lit);
        if lit < -1e-9 * (1.0 + f.abs()) {
            literal[v] = 1.0;
        }
    }
    let covered_key: Vec<f64> = s.rho_m().iter().map(|&r| if r <= cover { r } else { f64::NAN }).collect();
    let literal_beyond = if literal.iter().any(|x| *x > 0.0) { level_radius(&covered_key, &literal, 0.5) } else { 0.0 };

    let (witness, witness_increasing) = witness(s);
    let hess_violations = hess_lower_bound_check(s, c, r0)?;
    let proper = violations.is_empty() && hess_violations.is_empty() && envelope.is_unbounded() && witness_increasing;
    Ok(PropernessCertificate {
        branch: profile.branch,
        c,
        r0,
        b,
        envelope,
        slack,
        min_slack,
        violations,
        hess_violations,
        exempt,
        literal_min_slack: literal_min,
        literal_holds_beyond: literal_beyond,
        witness,
        witness_increasing,
        proper,
    })
}

/// Minima of `rho_N` over unit windows of `rho_M` inside the cover radius,
/// and whether they are nondecreasing up to the local edge length.
pub fn witness(s: &SampledSubmanifold) -> (Vec<f64>, bool) {
    let cover = s.cover_radius();
    let mut mins: Vec<(f64, usize)> = Vec::new();
    let mut r = 0.0;
    while r + 1.0 <= cover {
        let best = (0..s.len())
            .filter(|&v| s.rho_m()[v] >= r && s.rho_m()[v] <= r + 1.0)
            .map(|v| (s.rho_n()[v], v))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some(b) => mins.push(b),
            None => break,
        }
        r += 1.0;
    }
    let increasing = mins.windows(2).all(|w| w[1].0 >= w[0].0 - s.local_scale(w[0].1));
    (mins.into_iter().map(|(x, _)| x).collect(), increasing)
}

/// Full certificate for a tamed report: level `c` and `r0` from the report,
/// `r0` taken as the working radius where both ratios are at most `c`.
pub fn certify(s: &SampledSubmanifold, report: &TamednessReport) -> Result<PropernessCertificate> {
    if !report.tamed {
        return Err(Error::NotTamed(format!("a(M) estimate {} ({:?})", report.a_estimate, report.status)));
    }
    let (Some(c), Some(r0)) = (report.c, report.working_r0) else {
        return Err(Error::Precondition("tamedness report carries no level".into()));
    };
    let b = compute_b(s, r0)?;
    verify_growth(s, c, r0, b)
}
