//! Constant-curvature model spaces and the comparison functions of their
//! Jacobi equation.
//!
//! Two models are supported: Euclidean space `R^n` (curvature 0) and the
//! hyperboloid model of hyperbolic space with curvature `kappa < 0`, whose
//! points `x` in `R^{n+1}` satisfy `<x, x>_L = 1 / kappa` with `x_0 > 0`
//! for the Lorentz form `<x, y>_L = -x_0 y_0 + sum_i x_i y_i`.
//!
//! In constant curvature the Hessian comparison inequalities are equalities,
//! so the distance function to a pole has the closed form
//! `Hess rho (X, Y) = (C/S)(rho) (<X, Y> - <X, grad rho> <Y, grad rho>)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this value of `|kappa| t^2` the comparison functions are evaluated
/// by truncated Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;
/// Tolerance on `kappa <x, x>_L - 1` for hyperboloid points.
pub const SHEET_TOL: f64 = 1e-10;
/// Slack allowed below 1 in `kappa <p, q>_L` before a pair is rejected.
const ARCCOSH_SLACK: f64 = 1e-9;

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa <= 0.0) || !kappa.is_finite() {
        return Err(Error::Domain(format!("curvature must be <= 0, got {kappa}")));
    }
    Ok(())
}

fn check_length(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("length must be >= 0, got {t}")));
    }
    Ok(())
}

/// `S_kappa(t)`: `t` for `kappa = 0`, `sinh(sqrt(-kappa) t) / sqrt(-kappa)` otherwise.
pub fn s_kappa(kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_length(t)?;
    let x = -kappa * t * t;
    if x < SERIES_THRESHOLD {
        return Ok(t * (1.0 + x / 6.0 + x * x / 120.0));
    }
    let s = (-kappa).sqrt();
    Ok((s * t).sinh() / s)
}

/// `C_kappa(t) = S_kappa'(t)`.
pub fn c_kappa(kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_length(t)?;
    let x = -kappa * t * t;
    if x < SERIES_THRESHOLD {
        return Ok(1.0 + x / 2.0 + x * x / 24.0);
    }
    Ok(((-kappa).sqrt() * t).cosh())
}

/// `C_kappa / S_kappa` at `t > 0`, the principal curvature of the geodesic
/// sphere of radius `t`.
pub fn ct_over_st(kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("C/S ratio needs t > 0, got {t}")));
    }
    let x = -kappa * t * t;
    if x < SERIES_THRESHOLD {
        // coth expansion: 1/t (1 + x/3 - x^2/45)
        return Ok((1.0 + x / 3.0 - x * x / 45.0) / t);
    }
    let s = (-kappa).sqrt();
    Ok(s / (s * t).tanh())
}

/// `S_kappa / C_kappa` at `t >= 0`; the weight applied to `|alpha|` in the
/// tamedness ratio. Bounded by `1 / sqrt(-kappa)` when `kappa < 0`.
pub fn st_over_ct(kappa: f64, t: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_length(t)?;
    let x = -kappa * t * t;
    if x < SERIES_THRESHOLD {
        return Ok(t * (1.0 - x / 3.0 + 2.0 * x * x / 15.0));
    }
    let s = (-kappa).sqrt();
    Ok((s * t).tanh() / s)
}

/// A simply connected space form of curvature `kappa <= 0` and dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientModel {
    kappa: f64,
    dim: usize,
}

/// A point of an [`AmbientModel`] in its ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    coords: Vec<f64>,
}

impl AmbientPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientVector {
    pub base: AmbientPoint,
    pub coords: Vec<f64>,
}

impl AmbientModel {
    pub fn new(kappa: f64, dim: usize) -> Result<Self> {
        check_kappa(kappa)?;
        if dim < 2 {
            return Err(Error::InvalidParams(format!(
                "ambient dimension must be >= 2, got {dim}"
            )));
        }
        Ok(Self { kappa, dim })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(0.0, dim)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_flat(&self) -> bool {
        self.kappa == 0.0
    }

    /// `sqrt(-kappa)`.
    pub fn sqrt_neg_kappa(&self) -> f64 {
        (-self.kappa).sqrt()
    }

    /// Number of ambient coordinates: `n`, or `n + 1` on the hyperboloid.
    pub fn coord_len(&self) -> usize {
        if self.is_flat() {
            self.dim
        } else {
            self.dim + 1
        }
    }

    /// Euclidean dot product or Lorentz form, depending on the model.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        if self.is_flat() {
            dot
        } else {
            dot - 2.0 * a[0] * b[0]
        }
    }

    /// Norm of a tangent vector (the Lorentz form is positive on tangent spaces).
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// `kappa <x, x>_L - 1`; zero on the sheet. Always zero for the flat model.
    pub fn sheet_defect(&self, x: &[f64]) -> f64 {
        if self.is_flat() {
            0.0
        } else {
            self.kappa * self.inner(x, x) - 1.0
        }
    }

    /// Validates coordinates and, on the hyperboloid, rescales them onto the
    /// upper sheet.
    pub fn point(&self, coords: Vec<f64>) -> Result<AmbientPoint> {
        if coords.len() != self.coord_len() {
            return Err(Error::InvalidParams(format!(
                "expected {} ambient coordinates, got {}",
                self.coord_len(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite ambient coordinate".into()));
        }
        if self.is_flat() {
            return Ok(AmbientPoint { coords });
        }
        Ok(AmbientPoint { coords: self.project_to_sheet(&coords)? })
    }

    pub(crate) fn project_to_sheet(&self, x: &[f64]) -> Result<Vec<f64>> {
        let q = self.inner(x, x);
        if !(q < 0.0) || !(x[0] > 0.0) {
            return Err(Error::Domain(
                "point is not on the upper sheet of the hyperboloid".into(),
            ));
        }
        let scale = ((1.0 / self.kappa) / q).sqrt();
        Ok(x.iter().map(|c| c * scale).collect())
    }

    /// The origin `0` or the hyperboloid apex `(1/sqrt(-kappa), 0, ..., 0)`.
    pub fn origin(&self) -> AmbientPoint {
        let mut coords = vec![0.0; self.coord_len()];
        if !self.is_flat() {
            coords[0] = 1.0 / self.sqrt_neg_kappa();
        }
        AmbientPoint { coords }
    }

    /// Orthogonal projection of `w` onto the tangent space at `y`.
    pub fn project_to_tangent(&self, y: &[f64], w: &[f64]) -> Vec<f64> {
        if self.is_flat() {
            return w.to_vec();
        }
        let k = self.kappa * self.inner(w, y);
        w.iter().zip(y).map(|(wi, yi)| wi - k * yi).collect()
    }

    /// Riemannian exponential map at `p`.
    pub fn exp_map(&self, p: &AmbientPoint, v: &[f64]) -> Result<AmbientPoint> {
        let y = p.coords();
        if self.is_flat() {
            return self.point(y.iter().zip(v).map(|(a, b)| a + b).collect());
        }
        let v = self.project_to_tangent(y, v);
        let n = self.norm(&v);
        let s = self.sqrt_neg_kappa();
        let sn = s * n;
        let coef = if sn < 1e-8 { 1.0 + sn * sn / 6.0 } else { sn.sinh() / sn };
        let ch = sn.cosh();
        self.point(y.iter().zip(&v).map(|(a, b)| ch * a + coef * b).collect())
    }

    pub fn distance_coords(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        if self.is_flat() {
            return Ok(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        }
        let z = self.kappa * self.inner(p, q);
        if z < 1.0 - ARCCOSH_SLACK {
            return Err(Error::Domain(format!(
                "kappa <p, q>_L = {z} < 1: points are off the hyperboloid sheet"
            )));
        }
        let s = self.sqrt_neg_kappa();
        if z < 2.0 {
            // chordal form stays accurate for nearby points
            let diff: Vec<f64> = p.iter().zip(q).map(|(a, b)| a - b).collect();
            let chord = self.inner(&diff, &diff).max(0.0).sqrt();
            Ok(2.0 / s * (0.5 * s * chord).asinh())
        } else {
            Ok(z.acosh() / s)
        }
    }

    /// Unit gradient of `rho = dist(y0, .)` at `y != y0`.
    pub fn grad_coords(&self, y0: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = if self.is_flat() {
            y.iter().zip(y0).map(|(a, b)| a - b).collect()
        } else {
            let z = self.kappa * self.inner(y0, y);
            y.iter().zip(y0).map(|(a, b)| z * a - b).collect()
        };
        let n = self.norm(&raw);
        if !(n > 0.0) || self.distance_coords(y0, y)? == 0.0 {
            return Err(Error::Domain(
                "distance function is not differentiable at its pole".into(),
            ));
        }
        Ok(raw.into_iter().map(|c| c / n).collect())
    }

    /// `Hess rho (x, w)` at `y`, with `x`, `w` projected onto `T_y N`.
    pub fn hess_coords(&self, y0: &[f64], y: &[f64], x: &[f64], w: &[f64]) -> Result<f64> {
        let grad = self.grad_coords(y0, y)?;
        let rho = self.distance_coords(y0, y)?;
        let x = self.project_to_tangent(y, x);
        let w = self.project_to_tangent(y, w);
        let ratio = ct_over_st(self.kappa, rho)?;
        Ok(ratio * (self.inner(&x, &w) - self.inner(&x, &grad) * self.inner(&w, &grad)))
    }
}

/// Distance in the model space.
pub fn model_distance(model: &AmbientModel, p: &AmbientPoint, q: &AmbientPoint) -> Result<f64> {
    model.distance_coords(p.coords(), q.coords())
}

/// Gradient of the distance function to `y0`, evaluated at `y`.
pub fn grad_rho(model: &AmbientModel, y0: &AmbientPoint, y: &AmbientPoint) -> Result<AmbientVector> {
    Ok(AmbientVector {
        base: y.clone(),
        coords: model.grad_coords(y0.coords(), y.coords())?,
    })
}

/// Hessian of the distance function to `y0` at `y`, applied to `(x, w)`.
pub fn hess_rho(
    model: &AmbientModel,
    y0: &AmbientPoint,
    y: &AmbientPoint,
    x: &[f64],
    w: &[f64],
) -> Result<f64> {
    model.hess_coords(y0.coords(), y.coords(), x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power-series sinh, independent of `f64::sinh`.
    fn sinh_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for k in 1..60 {
            term *= x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    }

    fn cosh_series(x: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= x * x / ((2 * k - 1) as f64 * (2 * k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn s_kappa_examples() {
        assert_eq!(s_kappa(0.0, 2.0).unwrap(), 2.0);
        assert_eq!(s_kappa(-1.0, 0.0).unwrap(), 0.0);
        let expected = 0.5 * sinh_series(2.0);
        assert!((s_kappa(-4.0, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.81343).abs() < 1e-5);
        assert!(matches!(s_kappa(-1.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn c_and_ratio_examples() {
        assert_eq!(c_kappa(0.0, 5.0).unwrap(), 1.0);
        assert_eq!(ct_over_st(0.0, 2.0).unwrap(), 0.5);
        let coth1 = cosh_series(1.0) / sinh_series(1.0);
        assert!((ct_over_st(-1.0, 1.0).unwrap() - coth1).abs() < 1e-12);
        assert!((coth1 - 1.31304).abs() < 1e-5);
        assert!(matches!(ct_over_st(-1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn continuity_at_flat_limit() {
        for &t in &[1e-3, 0.5, 3.0] {
            let flat = s_kappa(0.0, t).unwrap();
            let near = s_kappa(-1e-14, t).unwrap();
            assert!((flat - near).abs() <= 1e-12 * t);
            let c_near = c_kappa(-1e-14, t).unwrap();
            assert!((c_near - 1.0).abs() < 1e-12);
        }
        // either side of the series switch
        let t = 1.0;
        for kappa in [-0.99e-8, -1.01e-8] {
            let s = (-kappa as f64).sqrt();
            let exact = sinh_series(s * t) / s;
            assert!((s_kappa(kappa, t).unwrap() - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn ratio_is_non_increasing_and_consistent() {
        for &kappa in &[0.0, -0.25, -1.0, -4.0] {
            let mut prev = f64::INFINITY;
            let mut t = 0.01;
            while t <= 100.0 {
                let r = ct_over_st(kappa, t).unwrap();
                assert!(r <= prev, "kappa {kappa} t {t}");
                prev = r;
                if t < 20.0 {
                    let s = s_kappa(kappa, t).unwrap();
                    let c = c_kappa(kappa, t).unwrap();
                    assert!((s * r - c).abs() <= 1e-12 * c);
                }
                t += 0.37;
            }
            if kappa < 0.0 {
                assert!((ct_over_st(kappa, 100.0).unwrap() - (-kappa).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distances() {
        let e3 = AmbientModel::euclidean(3).unwrap();
        let p = e3.point(vec![0.0, 0.0, 0.0]).unwrap();
        let q = e3.point(vec![3.0, 4.0, 0.0]).unwrap();
        assert_eq!(model_distance(&e3, &p, &q).unwrap(), 5.0);
        assert_eq!(model_distance(&e3, &q, &q).unwrap(), 0.0);

        let h2 = AmbientModel::new(-1.0, 2).unwrap();
        let p = h2.point(vec![1.0, 0.0, 0.0]).unwrap();
        let q = h2.point(vec![1f64.cosh(), 1f64.sinh(), 0.0]).unwrap();
        assert!((model_distance(&h2, &p, &q).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(model_distance(&h2, &q, &q).unwrap(), 0.0);
    }

    #[test]
    fn off_sheet_pair_is_rejected() {
        let h2 = AmbientModel::new(-1.0, 2).unwrap();
        // kappa <p, q>_L = 0.5 for these raw coordinates
        let err = h2.distance_coords(&[1.0, 0.0, 0.0], &[0.5, 0.0, 0.0]);
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(h2.point(vec![0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn hyperboloid_renormalisation() {
        let h3 = AmbientModel::new(-0.25, 3).unwrap();
        let p = h3.point(vec![2.1, 0.3, -0.2, 0.1]).unwrap();
        assert!(h3.sheet_defect(p.coords()).abs() <= SHEET_TOL);
        assert!(p.coords()[0] > 0.0);
    }

    #[test]
    fn hessian_examples() {
        let e3 = AmbientModel::euclidean(3).unwrap();
        let y0 = e3.origin();
        let y = e3.point(vec![2.0, 0.0, 0.0]).unwrap();
        let g = grad_rho(&e3, &y0, &y).unwrap();
        assert_eq!(g.coords, vec![1.0, 0.0, 0.0]);
        let x = [0.0, 1.0, 0.0];
        assert!((hess_rho(&e3, &y0, &y, &x, &x).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(hess_rho(&e3, &y0, &y, &g.coords, &g.coords).unwrap(), 0.0);
        assert!(matches!(grad_rho(&e3, &y0, &y0), Err(Error::Domain(_))));

        let h3 = AmbientModel::new(-1.0, 3).unwrap();
        let y0 = h3.origin();
        let y = h3.exp_map(&y0, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((model_distance(&h3, &y0, &y).unwrap() - 1.0).abs() < 1e-14);
        let x = [0.0, 0.0, 1.0, 0.0];
        let coth1 = cosh_series(1.0) / sinh_series(1.0);
        assert!((hess_rho(&h3, &y0, &y, &x, &x).unwrap() - coth1).abs() < 1e-12);
    }
}
