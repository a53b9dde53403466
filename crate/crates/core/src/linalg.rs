//! Small dense symmetric kernels and a banded Cholesky factorisation.
//!
//! Dense matrices are row-major `Vec<f64>` of side `n`; the chart dimension
//! is tiny so nothing here is blocked or vectorised.

use crate::error::{Error, Result};

/// Lower Cholesky factor of a dense SPD matrix.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::Decomposition { pivot: j });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Inverse of a small SPD matrix.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(&l, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// as rows of the second result.
pub fn sym_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    (values, vectors)
}

/// Eigenvalues of the pencil `H x = lambda G x` for SPD `G`, ascending.
pub fn generalized_sym_eigenvalues(h: &[f64], g: &[f64], n: usize) -> Result<Vec<f64>> {
    let l = cholesky(g, n)?;
    // C = L^{-1} H L^{-T}
    let mut tmp = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| h[i * n + j]).collect();
        let y = forward_sub(&l, n, &col);
        for i in 0..n {
            tmp[i * n + j] = y[i];
        }
    }
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        let row: Vec<f64> = tmp[i * n..(i + 1) * n].to_vec();
        let y = forward_sub(&l, n, &row);
        for j in 0..n {
            c[i * n + j] = y[j];
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = s;
            c[j * n + i] = s;
        }
    }
    Ok(sym_eigen(&c, n).0)
}

fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Symmetric positive-definite matrix stored by its lower band.
///
/// Row `i` keeps columns `i - bandwidth ..= i`; factorisation happens in place.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, data: vec![0.0; n * (bandwidth + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // j <= i, i - j <= bandwidth
        i * (self.bandwidth + 1) + (self.bandwidth + j - i)
    }

    /// Adds `value` to entry `(i, j)`; only the lower triangle is stored so
    /// callers add each off-diagonal pair once.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        assert!(i - j <= self.bandwidth, "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// `y = A x` (only valid before factorisation).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place banded Cholesky `A = L L^T`.
    pub fn factor(self) -> Result<BandMatrix> {
        self.factor_rel(0.0)
    }

    /// Cholesky that also rejects pivots below `rel` times the original
    /// diagonal entry, flagging numerically singular matrices.
    pub fn factor_rel(mut self, rel: f64) -> Result<BandMatrix> {
        let bw = self.bandwidth;
        let w = bw + 1;
        for j in 0..self.n {
            let row_j = j * w;
            let lo_j = j.saturating_sub(bw);
            let mut d = self.data[row_j + bw];
            let diag = d;
            for k in lo_j..j {
                let l = self.data[row_j + bw + k - j];
                d -= l * l;
            }
            if !(d > rel * diag.abs()) || !(d > 0.0) {
                return Err(Error::Decomposition { pivot: j });
            }
            let d = d.sqrt();
            self.data[row_j + bw] = d;
            let hi = (j + bw).min(self.n - 1);
            for i in j + 1..=hi {
                let row_i = i * w;
                let lo = i.saturating_sub(bw).max(lo_j);
                let mut s = self.data[row_i + bw + j - i];
                for k in lo..j {
                    s -= self.data[row_i + bw + k - i] * self.data[row_j + bw + k - j];
                }
                self.data[row_i + bw + j - i] = s / d;
            }
        }
        self.factored = true;
        Ok(self)
    }

    /// Solves with a factored matrix.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve needs a factored matrix");
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.data[i * w + bw + k - i] * y[k];
            }
            y[i] = s / self.data[i * w + bw];
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.data[k * w + bw + i - k] * y[k];
            }
            y[i] = s / self.data[i * w + bw];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, vecs) = sym_eigen(&a, 3);
        let expected = [1.0, 3.0, 5.0];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-13);
        }
        // A v = lambda v
        for (lam, v) in vals.iter().zip(&vecs) {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * v[j]).sum();
                assert!((av - lam * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn generalized_pencil() {
        // H = diag(2, 6), G = diag(1, 2): eigenvalues 2, 3
        let vals = generalized_sym_eigenvalues(&[2.0, 0.0, 0.0, 6.0], &[1.0, 0.0, 0.0, 2.0], 2).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(matches!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2), Err(Error::Decomposition { pivot: 1 })));
    }

    #[test]
    fn banded_solve_matches_tridiagonal() {
        let n = 50;
        let mut a = BandMatrix::zeros(n, 2);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
            if i + 2 < n {
                a.add(i + 2, i, -0.5);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let f = a.factor().unwrap();
        let y = f.solve(&b);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-12);
        }
    }
}
