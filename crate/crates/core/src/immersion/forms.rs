use serde::Serialize;

use super::ChartJet;
use crate::comparison::AmbientModel;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, sym_eigen};

/// Smallest admissible eigenvalue of the induced metric.
pub const DEGENERACY_TOL: f64 = 1e-10;

const THETA_SAMPLES: usize = 180;

/// Pointwise first and second fundamental forms in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub m: usize,
    /// Induced metric `g_ij`, row-major.
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    /// `alpha(d_i, d_j)` as ambient vectors, index `i * m + j`.
    pub alpha: Vec<Vec<f64>>,
    /// Columns form a `g`-orthonormal frame: `frame[i * m + a]` is the `i`-th
    /// coordinate of `e_a`.
    pub frame: Vec<f64>,
    /// `sum_a alpha(e_a, e_a)`.
    pub h_trace: Vec<f64>,
    /// `h_trace / m`.
    pub h_mean: Vec<f64>,
    /// `sup |alpha(X, X)|` over `g`-unit `X`.
    pub alpha_sup: f64,
    pub alpha_hs: f64,
    pub h_trace_norm: f64,
    pub h_mean_norm: f64,
    pub min_metric_eigenvalue: f64,
}

impl FundamentalForms {
    pub fn from_jet(model: &AmbientModel, jet: &ChartJet, u: &[f64]) -> Result<Self> {
        let m = jet.d1.len();
        let k = jet.value.len();
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                g[i * m + j] = model.inner(&jet.d1[i], &jet.d1[j]);
            }
        }
        let (evals, evecs) = sym_eigen(&g, m);
        if !(evals[0] > DEGENERACY_TOL) {
            return Err(Error::Degenerate { point: u.to_vec(), min_eigenvalue: evals[0] });
        }
        let g_inv = spd_inverse(&g, m).map_err(|_| Error::Degenerate {
            point: u.to_vec(),
            min_eigenvalue: evals[0],
        })?;

        let mut alpha = Vec::with_capacity(m * m);
        for ij in 0..m * m {
            let mut w = jet.d2[ij].clone();
            // second pass removes the rounding left by the first
            for _ in 0..2 {
                w = model.project_to_tangent(&jet.value, &w);
                let t: Vec<f64> = jet.d1.iter().map(|d| model.inner(&w, d)).collect();
                for l in 0..m {
                    let coef: f64 = (0..m).map(|s| g_inv[l * m + s] * t[s]).sum();
                    for c in 0..k {
                        w[c] -= coef * jet.d1[l][c];
                    }
                }
            }
            alpha.push(w);
        }
        // exact symmetry; the jets already agree to rounding
        for i in 0..m {
            for j in i + 1..m {
                let avg: Vec<f64> =
                    alpha[i * m + j].iter().zip(&alpha[j * m + i]).map(|(a, b)| 0.5 * (a + b)).collect();
                alpha[i * m + j] = avg.clone();
                alpha[j * m + i] = avg;
            }
        }

        let mut frame = vec![0.0; m * m];
        for a in 0..m {
            let s = evals[a].sqrt();
            for i in 0..m {
                frame[i * m + a] = evecs[a][i] / s;
            }
        }
        let mut forms = Self {
            m,
            g,
            g_inv,
            alpha,
            frame,
            h_trace: vec![0.0; k],
            h_mean: vec![0.0; k],
            alpha_sup: 0.0,
            alpha_hs: 0.0,
            h_trace_norm: 0.0,
            h_mean_norm: 0.0,
            min_metric_eigenvalue: evals[0],
        };
        let frame_alpha = forms.frame_alpha();
        let mut hs2 = 0.0;
        for a in 0..m {
            for b in 0..m {
                let n = model.norm(&frame_alpha[a * m + b]);
                hs2 += n * n;
            }
            for c in 0..k {
                forms.h_trace[c] += frame_alpha[a * m + a][c];
            }
        }
        forms.h_mean = forms.h_trace.iter().map(|x| x / m as f64).collect();
        forms.alpha_hs = hs2.sqrt();
        forms.h_trace_norm = model.norm(&forms.h_trace);
        forms.h_mean_norm = forms.h_trace_norm / m as f64;
        forms.alpha_sup = sup_on_sphere(model, &frame_alpha, m);
        Ok(forms)
    }

    /// `alpha(e_a, e_b)` in the orthonormal frame.
    pub fn frame_alpha(&self) -> Vec<Vec<f64>> {
        let m = self.m;
        let e: Vec<Vec<f64>> = (0..m).map(|a| (0..m).map(|i| self.frame[i * m + a]).collect()).collect();
        let mut out = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                out.push(self.alpha_xy(&e[a], &e[b]));
            }
        }
        out
    }

    /// `alpha(X, Y)` for coordinate vectors `X`, `Y`.
    pub fn alpha_xy(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; self.alpha[0].len()];
        for i in 0..m {
            for j in 0..m {
                let w = x[i] * y[j];
                if w != 0.0 {
                    for (o, a) in out.iter_mut().zip(&self.alpha[i * m + j]) {
                        *o += w * a;
                    }
                }
            }
        }
        out
    }

    /// `g(X, Y)`.
    pub fn metric(&self, x: &[f64], y: &[f64]) -> f64 {
        let m = self.m;
        (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| self.g[i * m + j] * x[i] * y[j]).sum()
    }
}

fn alpha_at(fa: &[Vec<f64>], m: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; fa[0].len()];
    for a in 0..m {
        for b in 0..m {
            let w = x[a] * x[b];
            for (o, v) in out.iter_mut().zip(&fa[a * m + b]) {
                *o += w * v;
            }
        }
    }
    out
}

/// `sup |A(x, x)|` over Euclidean-unit `x` for a symmetric vector-valued form.
fn sup_on_sphere(model: &AmbientModel, fa: &[Vec<f64>], m: usize) -> f64 {
    let value = |x: &[f64]| model.norm(&alpha_at(fa, m, x));
    match m {
        1 => value(&[1.0]),
        2 => {
            let f = |t: f64| value(&[t.cos(), t.sin()]);
            let step = std::f64::consts::PI / THETA_SAMPLES as f64;
            let (mut best_t, mut best) = (0.0, f(0.0));
            for s in 1..THETA_SAMPLES {
                let t = s as f64 * step;
                let v = f(t);
                if v > best {
                    best = v;
                    best_t = t;
                }
            }
            best.max(golden_max(&f, best_t - step, best_t + step))
        }
        _ => sup_by_iteration(model, fa, m, &value),
    }
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Eigenvectors of scalar shape operators as starting points, refined by a
/// shifted fixed-point iteration on the Lagrange condition.
fn sup_by_iteration(model: &AmbientModel, fa: &[Vec<f64>], m: usize, value: &impl Fn(&[f64]) -> f64) -> f64 {
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for dir in fa {
        if model.norm(dir) == 0.0 {
            continue;
        }
        let s: Vec<f64> = fa.iter().map(|v| model.inner(v, dir)).collect();
        starts.extend(sym_eigen(&s, m).1);
    }
    if starts.is_empty() {
        return 0.0;
    }
    let shift: f64 = fa.iter().map(|v| model.norm(v)).sum::<f64>().powi(2) + 1.0;
    let mut best = 0.0f64;
    for mut x in starts {
        for _ in 0..200 {
            let axx = alpha_at(fa, m, &x);
            let mut y: Vec<f64> = (0..m)
                .map(|a| (0..m).map(|b| model.inner(&fa[a * m + b], &axx) * x[b]).sum::<f64>() + shift * x[a])
                .collect();
            let n = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            y.iter_mut().for_each(|c| *c /= n);
            let delta: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            x = y;
            if delta < 1e-14 {
                break;
            }
        }
        best = best.max(value(&x));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_matches_closed_form_for_diagonal_form() {
        // A = diag(1, -3) times a fixed unit normal: sup = 3 in any dimension
        let model = AmbientModel::euclidean(4).unwrap();
        let n = vec![0.0, 0.0, 0.0, 1.0];
        let zero = vec![0.0; 4];
        let scaled = |s: f64| n.iter().map(|c| c * s).collect::<Vec<f64>>();
        let fa2 = vec![scaled(1.0), zero.clone(), zero.clone(), scaled(-3.0)];
        assert!((sup_on_sphere(&model, &fa2, 2) - 3.0).abs() < 1e-12);
        let mut fa3 = vec![zero.clone(); 9];
        fa3[0] = scaled(1.0);
        fa3[4] = scaled(-3.0);
        fa3[8] = scaled(2.0);
        assert!((sup_on_sphere(&model, &fa3, 3) - 3.0).abs() < 1e-12);
    }
}
