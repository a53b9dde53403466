//! Radial Dirichlet eigenvalues of geodesic balls in space forms and the
//! fundamental-tone bound built on them.
//!
//! The first eigenfunction of `B(R)` in the `l`-dimensional space form of
//! curvature `mu` is radial, `v(t)`, and solves
//! `v'' + (l - 1) (C/S)(t) v' + lambda v = 0` with `v(0) = 1`, `v'(0) = 0`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::comparison::ct_over_st;
use crate::error::{Error, Result};
use crate::ode::rk4_step2;

/// Uniform step count across `[0, R]`.
pub const STEPS: usize = 4000;
/// Relative width at which the eigenvalue bisection stops.
pub const BISECTION_TOL: f64 = 1e-13;
const MAX_BISECTIONS: usize = 200;
const MAX_WIDENINGS: usize = 60;
/// Tolerance on the pointwise gradient bound `-v'/t <= lambda`.
pub const LEMMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialEigenSolution {
    pub l: usize,
    pub mu: f64,
    pub radius: f64,
    pub lambda: f64,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

fn check_params(l: usize, mu: f64, radius: f64) -> Result<()> {
    if l < 2 {
        return Err(Error::InvalidParams(format!("dimension l must be >= 2, got {l}")));
    }
    if !(mu <= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParams(format!("curvature mu must be <= 0, got {mu}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParams(format!("radius must be > 0, got {radius}")));
    }
    Ok(())
}

/// Series solution `1 + a t^2 + b t^4` near the centre.
fn series_start(l: usize, mu: f64, lambda: f64, t: f64) -> [f64; 2] {
    let lf = l as f64;
    let a = -lambda / (2.0 * lf);
    let b = lambda * (lambda + 2.0 * (lf - 1.0) * (-mu) / 3.0) / (8.0 * lf * (lf + 2.0));
    let t2 = t * t;
    [1.0 + a * t2 + b * t2 * t2, 2.0 * a * t + 4.0 * b * t2 * t]
}

fn mesh(radius: f64) -> Vec<f64> {
    let h = radius / STEPS as f64;
    let mut t = vec![0.0, 1e-3 * radius];
    loop {
        let last = *t.last().unwrap();
        if last >= radius {
            break;
        }
        let step = h.min(0.02 * last);
        let next = if last + step > radius - 1e-3 * h { radius } else { last + step };
        t.push(next);
    }
    t
}

struct Shot {
    v: Vec<f64>,
    dv: Vec<f64>,
    /// First node with `v <= 0`, if any.
    zero: Option<usize>,
}

fn shoot(l: usize, mu: f64, lambda: f64, t: &[f64], full: bool) -> Shot {
    let drift = (l - 1) as f64;
    let rhs = |s: f64, y: [f64; 2]| {
        let cs = ct_over_st(mu, s).unwrap_or(f64::NAN);
        [y[1], -drift * cs * y[1] - lambda * y[0]]
    };
    let mut v = vec![1.0];
    let mut dv = vec![0.0];
    let mut y = series_start(l, mu, lambda, t[1]);
    v.push(y[0]);
    dv.push(y[1]);
    let mut zero = (y[0] <= 0.0).then_some(1);
    for k in 1..t.len() - 1 {
        if zero.is_some() && !full {
            break;
        }
        y = rk4_step2(&rhs, t[k], y, t[k + 1] - t[k]);
        v.push(y[0]);
        dv.push(y[1]);
        if zero.is_none() && y[0] <= 0.0 {
            zero = Some(k + 1);
        }
    }
    Shot { v, dv, zero }
}

/// Smallest Dirichlet eigenvalue of the geodesic ball of radius `R` in the
/// `l`-dimensional space form of curvature `mu`.
///
/// Bisects on whether the shooting solution vanishes inside `[0, R]`; the
/// returned profile is the one at the lower end of the final bracket, so it
/// stays positive on the grid.
pub fn radial_eigenvalue(l: usize, mu: f64, radius: f64) -> Result<RadialEigenSolution> {
    radial_eigenvalue_tol(l, mu, radius, BISECTION_TOL)
}

pub fn radial_eigenvalue_tol(l: usize, mu: f64, radius: f64, tol: f64) -> Result<RadialEigenSolution> {
    check_params(l, mu, radius)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be > 0, got {tol}")));
    }
    let t = mesh(radius);
    let mut lo = 0.0;
    let mut hi = 4.0 * PI * PI * l as f64 / (radius * radius);
    let mut widened = 0;
    while shoot(l, mu, hi, &t, false).zero.is_none() {
        lo = hi;
        hi *= 2.0;
        widened += 1;
        if widened > MAX_WIDENINGS {
            return Err(Error::Numerical(format!("no eigenvalue bracket below {hi:e}")));
        }
    }
    let mut iterations = 0;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if shoot(l, mu, mid, &t, false).zero.is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(Error::Numerical(format!("bisection stalled at [{lo}, {hi}]")));
        }
    }
    if lo == 0.0 {
        return Err(Error::Numerical("eigenvalue bracket collapsed to zero".into()));
    }
    let shot = shoot(l, mu, lo, &t, true);
    Ok(RadialEigenSolution { l, mu, radius, lambda: lo, t, v: shot.v, dv: shot.dv })
}

impl RadialEigenSolution {
    /// `v(s)` by cubic Hermite interpolation of the grid values.
    pub fn value_at(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.radius).contains(&s) {
            return Err(Error::Domain(format!("t = {s} outside [0, {}]", self.radius)));
        }
        let k = match self.t.partition_point(|x| *x <= s) {
            0 => 0,
            k if k >= self.t.len() => self.t.len() - 2,
            k => k - 1,
        };
        let h = self.t[k + 1] - self.t[k];
        let x = (s - self.t[k]) / h;
        let (x2, x3) = (x * x, x * x * x);
        Ok((2.0 * x3 - 3.0 * x2 + 1.0) * self.v[k]
            + (x3 - 2.0 * x2 + x) * h * self.dv[k]
            + (-2.0 * x3 + 3.0 * x2) * self.v[k + 1]
            + (x3 - x2) * h * self.dv[k + 1])
    }

    /// Largest `|v'' + (l-1)(C/S) v' + lambda v|` over nodes where a
    /// five-point difference of `v'` fits on a uniform stencil.
    pub fn ode_residual(&self) -> f64 {
        let drift = (self.l - 1) as f64;
        let n = self.t.len();
        let mut worst: f64 = 0.0;
        for k in 2..n.saturating_sub(2) {
            let h = self.t[k + 1] - self.t[k];
            let uniform = (self.t[k] - self.t[k - 1] - h).abs() < 1e-9 * h
                && (self.t[k - 1] - self.t[k - 2] - h).abs() < 1e-9 * h
                && (self.t[k + 2] - self.t[k + 1] - h).abs() < 1e-9 * h;
            if !uniform {
                continue;
            }
            let d2 = (-self.dv[k + 2] + 8.0 * self.dv[k + 1] - 8.0 * self.dv[k - 1] + self.dv[k - 2]) / (12.0 * h);
            let cs = ct_over_st(self.mu, self.t[k]).unwrap_or(f64::NAN);
            let r = d2 + drift * cs * self.dv[k] + self.lambda * self.v[k];
            worst = worst.max(r.abs());
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,v,dv")?;
        for k in 0..self.t.len() {
            writeln!(out, "{},{},{}", self.t[k], self.v[k], self.dv[k])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma2Report {
    /// `max_t (-v'(t)/t) - lambda`, using `lambda / l` at `t = 0`.
    pub max_violation: f64,
    /// `min_t (lambda t + v'(t))`.
    pub min_h: f64,
    pub holds: bool,
}

pub fn lemma2_check(sol: &RadialEigenSolution) -> Lemma2Report {
    let mut max_violation = sol.lambda / sol.l as f64 - sol.lambda;
    let mut min_h = f64::INFINITY;
    for k in 0..sol.t.len() {
        let t = sol.t[k];
        min_h = min_h.min(sol.lambda * t + sol.dv[k]);
        if t > 0.0 {
            max_violation = max_violation.max(-sol.dv[k] / t - sol.lambda);
        }
    }
    Lemma2Report { max_violation, min_h, holds: max_violation <= LEMMA_TOL }
}

/// Least `l` with `m - l + l (1 + c)^2 / 4 + c <= 0`.
pub fn choose_l(m: usize, c: f64) -> Result<usize> {
    if m < 1 {
        return Err(Error::InvalidParams("dimension m must be >= 1".into()));
    }
    if !(c < 1.0) {
        return Err(Error::Level(format!("c = {c} must be < 1")));
    }
    if !(c > 0.0) {
        return Err(Error::Level(format!("c = {c} must be > 0")));
    }
    let q = (1.0 + c) * (1.0 + c) / 4.0;
    let mut l = m + 1;
    while m as f64 - l as f64 + l as f64 * q + c > 0.0 {
        l += 1;
    }
    Ok(l)
}

/// `C = 1 + r0 (C/S)(r0) (m + c) / v(r0)`.
pub fn constant_c(m: usize, c: f64, mu: f64, r0: f64, v_r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParams(format!("r0 must be > 0, got {r0}")));
    }
    if !(v_r0 > 0.0 && v_r0 <= 1.0) {
        return Err(Error::InvalidParams(format!("v(r0) must lie in (0, 1], got {v_r0}")));
    }
    Ok(1.0 + r0 * ct_over_st(mu, r0)? * (m as f64 + c) / v_r0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToneBound {
    pub m: usize,
    pub c: f64,
    pub mu: f64,
    pub r0: f64,
    pub l: usize,
    /// `(R, lambda_1(B(R)))` used for the extrapolation.
    pub samples: Vec<(f64, f64)>,
    /// Fit of `lambda_* + A / R^2 + B / R^3` through the samples.
    pub lambda_star_fit: f64,
    /// Fundamental tone used for the bound: the fit, or 0 in flat space.
    pub lambda_star: f64,
    /// `(l - 1)^2 (-mu) / 4`.
    pub mckean: f64,
    /// `(l - 1)^2 mu^2 / 4`, the printed closed form.
    pub printed: f64,
    /// The two closed forms disagree.
    pub closed_forms_differ: bool,
    pub v_r0: f64,
    #[serde(rename = "C")]
    pub constant: f64,
    pub bound: f64,
    pub bound_mckean: f64,
    pub bound_printed: f64,
}

/// Radii for the large-ball extrapolation: `{10, 20, 40} / sqrt(-mu)`, or
/// multiples of `r0` in flat space.
pub fn extrapolation_radii(mu: f64, r0: f64) -> [f64; 3] {
    let unit = if mu < 0.0 { 1.0 / (-mu).sqrt() } else { r0 };
    [10.0 * unit, 20.0 * unit, 40.0 * unit]
}

/// Exact fit of `lambda_* + A / R^2 + B / R^3` through three samples.
pub fn extrapolate(samples: &[(f64, f64); 3]) -> Result<f64> {
    let mut a = [0.0; 9];
    let mut b = [0.0; 3];
    for (i, (r, lam)) in samples.iter().enumerate() {
        a[i * 3] = 1.0;
        a[i * 3 + 1] = r.powi(-2);
        a[i * 3 + 2] = r.powi(-3);
        b[i] = *lam;
    }
    // Cramer's rule on a 3x3 system
    let det = |m: &[f64; 9]| {
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) + m[2] * (m[3] * m[7] - m[4] * m[6])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Numerical("singular extrapolation system".into()));
    }
    let mut a0 = a;
    for i in 0..3 {
        a0[i * 3] = b[i];
    }
    Ok(det(&a0) / d)
}

pub fn tone_upper_bound(m: usize, c: f64, mu: f64, r0: f64) -> Result<ToneBound> {
    let l = choose_l(m, c)?;
    if !(r0 > 0.0) {
        return Err(Error::InvalidParams(format!("r0 must be > 0, got {r0}")));
    }
    let radii = extrapolation_radii(mu, r0);
    if r0 >= radii[2] {
        return Err(Error::InvalidParams(format!("r0 = {r0} exceeds the reference radius {}", radii[2])));
    }
    let mut samples = [(0.0, 0.0); 3];
    let mut largest = None;
    for (k, r) in radii.iter().enumerate() {
        let sol = radial_eigenvalue(l, mu, *r)?;
        samples[k] = (*r, sol.lambda);
        largest = Some(sol);
    }
    let largest = largest.expect("three radii");
    let fit = extrapolate(&samples)?;
    if !(samples[0].1 > samples[1].1 && samples[1].1 > samples[2].1 && samples[2].1 > fit - 1e-9 * samples[2].1) {
        return Err(Error::Numerical(format!("non-monotone extrapolation: {samples:?} -> {fit}")));
    }
    let lambda_star = if mu < 0.0 { fit } else { 0.0 };
    let v_r0 = largest.value_at(r0)?;
    let constant = constant_c(m, c, mu, r0, v_r0.min(1.0))?;
    let lm1 = (l - 1) as f64;
    let mckean = lm1 * lm1 * (-mu) / 4.0;
    let printed = lm1 * lm1 * mu * mu / 4.0;
    Ok(ToneBound {
        m,
        c,
        mu,
        r0,
        l,
        samples: samples.to_vec(),
        lambda_star_fit: fit,
        lambda_star,
        mckean,
        printed,
        closed_forms_differ: (mckean - printed).abs() > 1e-12 * (1.0 + mckean.abs()),
        v_r0,
        constant,
        bound: constant * lambda_star,
        bound_mckean: constant * mckean,
        bound_printed: constant * printed,
    })
}
