//! Independent eigenvalue oracle: piecewise-linear finite elements with
//! lumped mass, inverse iteration for the first Dirichlet eigenvalue, and
//! Barta-type bounds from positive test functions.

pub mod mesh;

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::comparison::ct_over_st;
use crate::error::{Error, Result};
use crate::immersion::{FundamentalForms, ImmersionChart};
use crate::linalg::{spd_inverse, BandMatrix};
use crate::sampled::SampledSubmanifold;
use crate::spectral::{choose_l, constant_c, radial_eigenvalue};

pub use mesh::{from_sampled, interval, unit_disc, unit_square, FemMesh};

pub const RESIDUAL_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 500;
/// Relative pivot size below which the stiffness counts as singular.
const PIVOT_TOL: f64 = 1e-10;

/// Full stiffness (row lists over all vertices) and lumped mass of a mesh.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub mass: Vec<f64>,
}

fn det(a: &[f64], d: usize) -> f64 {
    match d {
        1 => a[0],
        _ => a[0] * a[3] - a[1] * a[2],
    }
}

pub fn assemble(mesh: &FemMesh) -> Result<Assembly> {
    let d = mesh.dim;
    let n = mesh.len();
    let mut triplets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut mass = vec![0.0; n];
    let fact = if d == 1 { 1.0 } else { 2.0 };
    for (k, cell) in mesh.cells.iter().enumerate() {
        let p = &mesh.local[k];
        // edge matrix, columns p_i - p_0
        let mut e = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                e[r * d + c] = p[c + 1][r] - p[0][r];
            }
        }
        let det_e = det(&e, d);
        if det_e == 0.0 || !det_e.is_finite() {
            return Err(Error::Numerical(format!("degenerate cell {k}")));
        }
        let vol_param = det_e.abs() / fact;
        let g = &mesh.metric[k];
        let g_inv = spd_inverse(g, d)?;
        let vol = vol_param * det(g, d).sqrt();
        // gradients of the barycentric coordinates 1..d are the rows of E^{-1}
        let e_inv: Vec<f64> = if d == 1 {
            vec![1.0 / e[0]]
        } else {
            vec![e[3] / det_e, -e[1] / det_e, -e[2] / det_e, e[0] / det_e]
        };
        let mut grads = vec![vec![0.0; d]; d + 1];
        for i in 0..d {
            for r in 0..d {
                grads[i + 1][r] = e_inv[i * d + r];
                grads[0][r] -= e_inv[i * d + r];
            }
        }
        for a in 0..=d {
            for b in 0..=d {
                let mut s = 0.0;
                for r in 0..d {
                    for c in 0..d {
                        s += grads[a][r] * g_inv[r * d + c] * grads[b][c];
                    }
                }
                triplets[cell[a]].push((cell[b], vol * s));
            }
            mass[cell[a]] += vol / (d + 1) as f64;
        }
    }
    let rows = triplets
        .into_iter()
        .map(|mut row| {
            row.sort_by_key(|e| e.0);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, x) in row {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 += x,
                    _ => out.push((j, x)),
                }
            }
            out
        })
        .collect();
    Ok(Assembly { rows, mass })
}

impl Assembly {
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|(j, k)| k * f[*j]).sum()).collect()
    }

    /// `Delta_h f = -(K f)_i / M_ii`; meaningful away from the mesh boundary.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f).iter().zip(&self.mass).map(|(k, m)| -k / m).collect()
    }
}

/// The pencil `(K, M)` restricted to the unknown vertices of a region.
#[derive(Debug, Clone)]
pub struct DiscreteDirichletProblem {
    /// Mesh vertex of each unknown, in band order.
    pub vertices: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
    pub stiffness: BandMatrix,
    pub mass: Vec<f64>,
}

impl DiscreteDirichletProblem {
    /// Eliminates every vertex outside `interior`. With `None`, the mesh
    /// boundary flags define the Dirichlet set.
    pub fn new(mesh: &FemMesh, interior: Option<&[bool]>) -> Result<Self> {
        let asm = assemble(mesh)?;
        let inside: Vec<bool> = match interior {
            Some(mask) => mask.to_vec(),
            None => mesh.boundary.iter().map(|b| !b).collect(),
        };
        let unknowns: Vec<usize> = (0..mesh.len()).filter(|&v| inside[v]).collect();
        if unknowns.is_empty() {
            return Err(Error::Precondition("region has no interior vertices".into()));
        }
        let order = best_order(mesh, &asm, &inside, &unknowns);
        let mut pos = vec![usize::MAX; mesh.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut bw = 0;
        for &v in &order {
            for (w, _) in &asm.rows[v] {
                if inside[*w] {
                    bw = bw.max(pos[v].abs_diff(pos[*w]));
                }
            }
        }
        let mut stiffness = BandMatrix::zeros(order.len(), bw);
        for &v in &order {
            for (w, x) in &asm.rows[v] {
                if inside[*w] && pos[*w] <= pos[v] {
                    stiffness.add(pos[v], pos[*w], *x);
                }
            }
        }
        Ok(Self {
            coords: order.iter().map(|&v| mesh.coords[v].clone()).collect(),
            mass: order.iter().map(|&v| asm.mass[v]).collect(),
            vertices: order,
            stiffness,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Values of `f` at the unknowns, given parameter coordinates.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.coords.iter().map(|p| f(p)).collect()
    }

    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let kx = self.stiffness.mul_vec(x);
        let num: f64 = kx.iter().zip(x).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().zip(&self.mass).map(|(a, m)| m * a * a).sum();
        num / den
    }

    /// Writes the lower triangles of `K` and `M` in matrix-market
    /// coordinate format.
    pub fn write_matrix_market<W: Write>(&self, mut k: W, mut m: W) -> std::io::Result<()> {
        let n = self.len();
        let bw = self.stiffness.bandwidth();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let x = self.stiffness.get(i, j);
                if x != 0.0 {
                    entries.push((i, j, x));
                }
            }
        }
        writeln!(k, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(k, "{n} {n} {}", entries.len())?;
        for (i, j, x) in entries {
            writeln!(k, "{} {} {x:e}", i + 1, j + 1)?;
        }
        writeln!(m, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(m, "{n} {n} {n}")?;
        for (i, x) in self.mass.iter().enumerate() {
            writeln!(m, "{} {} {x:e}", i + 1, i + 1)?;
        }
        Ok(())
    }
}

/// Orders the unknowns by increasing mesh index, or by the transposed grid
/// index when that gives a narrower band (periodic leading axis).
fn best_order(mesh: &FemMesh, asm: &Assembly, inside: &[bool], unknowns: &[usize]) -> Vec<usize> {
    let band = |order: &[usize]| {
        let mut pos = vec![usize::MAX; mesh.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut bw = 0;
        for &v in order {
            for (w, _) in &asm.rows[v] {
                if inside[*w] {
                    bw = bw.max(pos[v].abs_diff(pos[*w]));
                }
            }
        }
        bw
    };
    let natural = unknowns.to_vec();
    let mut by_coord = unknowns.to_vec();
    if mesh.dim == 2 {
        by_coord.sort_by(|&a, &b| {
            let (p, q) = (&mesh.coords[a], &mesh.coords[b]);
            p[1].total_cmp(&q[1]).then(p[0].total_cmp(&q[0]))
        });
    }
    if band(&by_coord) < band(&natural) {
        by_coord
    } else {
        natural
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletEigen {
    pub lambda: f64,
    /// `M`-normalised, positive first eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `|K x - lambda M x| / |M x|`.
    pub residual: f64,
    pub constant_sign: bool,
}

/// Smallest eigenvalue of `K x = lambda M x` by inverse iteration.
pub fn lambda1_dirichlet(problem: &DiscreteDirichletProblem) -> Result<DirichletEigen> {
    let n = problem.len();
    let factor = problem.stiffness.clone().factor_rel(PIVOT_TOL)?;
    let m = &problem.mass;
    let mut x: Vec<f64> = vec![1.0; n];
    let normalise = |x: &mut Vec<f64>| {
        let s: f64 = x.iter().zip(m).map(|(a, w)| w * a * a).sum::<f64>().sqrt();
        let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for a in x.iter_mut() {
            *a *= sign / s;
        }
    };
    normalise(&mut x);
    for it in 1..=MAX_ITERATIONS {
        let mx: Vec<f64> = x.iter().zip(m).map(|(a, w)| a * w).collect();
        x = factor.solve(&mx);
        normalise(&mut x);
        let lambda = problem.rayleigh(&x);
        let kx = problem.stiffness.mul_vec(&x);
        let mut r2 = 0.0;
        let mut m2 = 0.0;
        for i in 0..n {
            let mxi = m[i] * x[i];
            r2 += (kx[i] - lambda * mxi).powi(2);
            m2 += mxi * mxi;
        }
        let residual = (r2 / m2).sqrt();
        if residual <= RESIDUAL_TOL {
            let constant_sign = x.iter().all(|a| *a > 0.0);
            return Ok(DirichletEigen { lambda, vector: x, iterations: it, residual, constant_sign });
        }
    }
    Err(Error::Numerical(format!("inverse iteration did not reach residual {RESIDUAL_TOL:e}")))
}

/// `(inf, sup)` of `-Delta_h f / f` over the unknowns.
pub fn barta_sandwich(problem: &DiscreteDirichletProblem, f: &[f64]) -> Result<(f64, f64)> {
    if f.len() != problem.len() {
        return Err(Error::InvalidParams(format!("expected {} values, got {}", problem.len(), f.len())));
    }
    if let Some(k) = f.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Precondition(format!("test function not positive at unknown {k}: {}", f[k])));
    }
    let kf = problem.stiffness.mul_vec(f);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..f.len() {
        let r = kf[i] / (problem.mass[i] * f[i]);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// `Delta (h o rho_N)` at `u` from the trace of the composition formula:
/// `h'' |grad^T rho|^2 + h' ((C/S)(rho) (m - |grad^T rho|^2) + <grad rho, H>)`.
/// `h` returns `(h, h', h'')`.
pub fn laplacian_composed<H>(chart: &ImmersionChart, u: &[f64], h: H) -> Result<f64>
where
    H: Fn(f64) -> [f64; 3],
{
    let model = chart.ambient();
    let jet = chart.eval_jet2(u)?;
    let rho = model.distance_coords(chart.pole(), &jet.value)?;
    if rho == 0.0 {
        return Err(Error::Domain(format!("phi({u:?}) is the pole of the distance function")));
    }
    let forms = FundamentalForms::from_jet(model, &jet, u)?;
    let grad = model.grad_coords(chart.pole(), &jet.value)?;
    let m = forms.m;
    let dot: Vec<f64> = jet.d1.iter().map(|x| model.inner(&grad, x)).collect();
    let mut tangential = 0.0;
    for i in 0..m {
        for j in 0..m {
            tangential += forms.g_inv[i * m + j] * dot[i] * dot[j];
        }
    }
    let [_, h1, h2] = h(rho);
    let cs = ct_over_st(model.kappa(), rho)?;
    Ok(h2 * tangential + h1 * (cs * (m as f64 - tangential) + model.inner(&grad, &forms.h_trace)))
}

/// Connected component (king adjacency) of `{rho_N < radius}` through its
/// vertex nearest the pole. Fails if it reaches a non-periodic face.
pub fn ball_component(s: &SampledSubmanifold, radius: f64) -> Result<Vec<bool>> {
    let rho = s.rho_n();
    let start = (0..s.len())
        .filter(|&v| rho[v] < radius)
        .min_by(|&a, &b| rho[a].total_cmp(&rho[b]))
        .ok_or(Error::EmptyLevelSet { radius })?;
    let mut mask = vec![false; s.len()];
    mask[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if s.on_boundary(v) {
            return Err(Error::Precondition(format!(
                "component of rho_N < {radius} reaches the edge of the parameter box"
            )));
        }
        for w in s.king_neighbours(v) {
            if !mask[w] && rho[w] < radius {
                mask[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(mask)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub m: usize,
    pub c: f64,
    pub mu: f64,
    pub r0: f64,
    pub radius: f64,
    pub l: usize,
    pub interior_vertices: usize,
    /// First Dirichlet eigenvalue of the region from the finite elements.
    pub lambda_omega: f64,
    pub oracle_residual: f64,
    /// First Dirichlet eigenvalue of the ball of radius `R` in the model space of dimension `l`.
    pub lambda_ball: f64,
    pub v_r0: f64,
    #[serde(rename = "C")]
    pub constant: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Compares the oracle eigenvalue of `{rho_N < R}` with `C lambda_1(B(R))`.
pub fn corollary_check(s: &SampledSubmanifold, c: f64, r0: f64, radius: f64) -> Result<CorollaryReport> {
    if !(radius > r0) || !(r0 > 0.0) {
        return Err(Error::InvalidParams(format!("need 0 < r0 < R, got r0 = {r0}, R = {radius}")));
    }
    let m = s.chart().dim();
    let mu = s.chart().ambient().kappa();
    let l = choose_l(m, c)?;
    let mask = ball_component(s, radius)?;
    let mesh = from_sampled(s)?;
    let problem = DiscreteDirichletProblem::new(&mesh, Some(&mask))?;
    let eig = lambda1_dirichlet(&problem)?;
    let ball = radial_eigenvalue(l, mu, radius)?;
    let v_r0 = ball.value_at(r0)?;
    let constant = constant_c(m, c, mu, r0, v_r0.min(1.0))?;
    let bound = constant * ball.lambda;
    Ok(CorollaryReport {
        m,
        c,
        mu,
        r0,
        radius,
        l,
        interior_vertices: problem.len(),
        lambda_omega: eig.lambda,
        oracle_residual: eig.residual,
        lambda_ball: ball.lambda,
        v_r0,
        constant,
        bound,
        slack: bound - eig.lambda,
        holds: eig.lambda <= bound,
    })
}
