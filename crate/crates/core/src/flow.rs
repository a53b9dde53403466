//! The flow of `nu / psi` away from a level set of `R = rho_N o phi`, its
//! angle estimate, critical points of `R` and the ends of the sample.

use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use crate::comparison::s_kappa;
use crate::error::{Error, Result};
use crate::immersion::{FundamentalForms, ImmersionChart};
use crate::linalg::cholesky;
use crate::ode::rk4_step;
use crate::sampled::SampledSubmanifold;

/// `psi` at or below this value marks a critical point of `R`.
pub const TOL_CRIT: f64 = 1e-6;
/// Residual of `R - r0` accepted for level-set seeds.
pub const SEED_TOL: f64 = 1e-8;
/// Refined points this close to the pole count as the pole.
const POLE_TOL: f64 = 1e-9;

/// Trajectory tolerance for a fixed step.
pub fn tol_flow(step: f64) -> f64 {
    1e-4f64.max(10.0 * step.powi(4))
}

/// The unit field `nu`, `psi = cos beta` and the normal-direction term of the
/// angle equation at one chart point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowFrame {
    /// `nu` in chart coordinates; `g`-unit.
    pub nu: Vec<f64>,
    pub psi: f64,
    pub sin_beta: f64,
    /// `<nu*, alpha(nu, nu)>`, zero where `sin beta` vanishes.
    pub nu_star_alpha: f64,
    /// `grad R` in chart coordinates.
    pub grad_r: Vec<f64>,
}

fn quad(g_inv: &[f64], m: usize, a: &[f64], b: &[f64]) -> f64 {
    (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| g_inv[i * m + j] * a[i] * b[j]).sum()
}

fn frame_at(chart: &ImmersionChart, u: &[f64]) -> Result<FlowFrame> {
    let model = chart.ambient();
    let jet = chart.eval_jet2(u)?;
    let rho = model.distance_coords(chart.pole(), &jet.value)?;
    if rho == 0.0 {
        return Err(Error::CriticalPoint { point: u.to_vec(), psi: 0.0 });
    }
    let forms = FundamentalForms::from_jet(model, &jet, u)?;
    let m = forms.m;
    let grad = model.grad_coords(chart.pole(), &jet.value)?;
    let d_r: Vec<f64> = jet.d1.iter().map(|x| model.inner(&grad, x)).collect();
    let grad_r: Vec<f64> = (0..m).map(|i| (0..m).map(|j| forms.g_inv[i * m + j] * d_r[j]).sum()).collect();
    let psi = quad(&forms.g_inv, m, &d_r, &d_r).max(0.0).sqrt();
    if psi <= TOL_CRIT {
        return Err(Error::CriticalPoint { point: u.to_vec(), psi });
    }
    let nu: Vec<f64> = grad_r.iter().map(|x| x / psi).collect();
    let sin_beta = (1.0 - psi * psi).max(0.0).sqrt();
    let nu_star_alpha = if sin_beta > 1e-12 {
        model.inner(&grad, &forms.alpha_xy(&nu, &nu)) / sin_beta
    } else {
        0.0
    };
    Ok(FlowFrame { nu, psi, sin_beta, nu_star_alpha, grad_r })
}

/// `nu = grad R / |grad R|` and `psi = |grad R|_g` at `u`.
pub fn nu_and_psi(chart: &ImmersionChart, u: &[f64]) -> Result<(Vec<f64>, f64)> {
    let f = frame_at(chart, u)?;
    Ok((f.nu, f.psi))
}

/// Full frame data at `u`.
pub fn flow_frame(chart: &ImmersionChart, u: &[f64]) -> Result<FlowFrame> {
    frame_at(chart, u)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub r0: f64,
    /// Chart points with `|R - r0| <= 1e-8`, found along grid lines.
    pub seeds: Vec<Vec<f64>>,
    /// No sampled vertex next to the level has `psi <= TOL_CRIT`.
    pub regular: bool,
    pub min_band_psi: f64,
}

/// Seeds on `Gamma_r0 = phi(M) cap S_r0` by bisection along every grid edge
/// that crosses the level.
pub fn level_set_gamma(s: &SampledSubmanifold, r0: f64) -> Result<LevelSet> {
    let chart = s.chart();
    let m = s.resolution().len();
    let mut seeds = Vec::new();
    let mut min_band_psi = f64::INFINITY;
    for v in 0..s.len() {
        let idx = s.multi_index(v);
        for a in 0..m {
            let mut o = vec![0isize; m];
            o[a] = 1;
            let Some(nidx) = s.offset(&idx, &o) else { continue };
            let w = s.index_of(&nidx);
            let (rv, rw) = (s.rho_n()[v] - r0, s.rho_n()[w] - r0);
            if rv == 0.0 && a == 0 {
                seeds.push(s.param(v).to_vec());
            }
            if !(rv * rw < 0.0) {
                continue;
            }
            for x in [v, w] {
                let psi = match frame_at(chart, s.param(x)) {
                    Ok(f) => f.psi,
                    Err(Error::CriticalPoint { psi, .. }) => psi,
                    Err(e) => return Err(e),
                };
                min_band_psi = min_band_psi.min(psi);
            }
            let mut lo = s.param(v).to_vec();
            let mut hi = lo.clone();
            hi[a] += s.step()[a];
            if !chart.periodic()[a] {
                hi[a] = s.param(w)[a];
            }
            let mut f_lo = rv;
            let mut mid = lo.clone();
            for _ in 0..200 {
                mid[a] = 0.5 * (lo[a] + hi[a]);
                let f_mid = chart.rho_n(&mid)? - r0;
                if f_mid.abs() <= 0.1 * SEED_TOL || hi[a] - lo[a] <= f64::EPSILON * (1.0 + mid[a].abs()) {
                    break;
                }
                if (f_mid < 0.0) == (f_lo < 0.0) {
                    lo[a] = mid[a];
                    f_lo = f_mid;
                } else {
                    hi[a] = mid[a];
                }
            }
            if (chart.rho_n(&mid)? - r0).abs() <= SEED_TOL {
                chart.wrap(&mut mid);
                seeds.push(mid);
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::EmptyLevelSet { radius: r0 });
    }
    Ok(LevelSet { r0, seeds, regular: min_band_psi > TOL_CRIT, min_band_psi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    MaxTime,
    DomainBoundary,
    CriticalPoint { psi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub seed: Vec<f64>,
    pub r0: f64,
    pub c: f64,
    pub kappa: f64,
    pub step: f64,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub sin_beta: Vec<f64>,
    /// `(S(r0) / S(t + r0)) (sin beta(seed) - c) + c`.
    pub bound_rhs: Vec<f64>,
    pub nu_star_alpha: Vec<f64>,
    pub termination: Termination,
}

/// Integrates `u' = nu / psi = grad R / psi^2` from `seed` with classical RK4
/// until `t_max`, the domain boundary or a critical point.
pub fn integrate_flow(chart: &ImmersionChart, seed: &[f64], c: f64, t_max: f64, step: f64) -> Result<FlowTrajectory> {
    if !(step > 0.0) || !(t_max >= 0.0) || !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParams(format!("need step > 0, t_max >= 0 and 0 <= c < 1; got {step}, {t_max}, {c}")));
    }
    let kappa = chart.ambient().kappa();
    let r0 = chart.rho_n(seed)?;
    let first = frame_at(chart, seed)?;
    let s_r0 = s_kappa(kappa, r0)?;
    let mut traj = FlowTrajectory {
        seed: seed.to_vec(),
        r0,
        c,
        kappa,
        step,
        times: Vec::new(),
        points: Vec::new(),
        r: Vec::new(),
        psi: Vec::new(),
        sin_beta: Vec::new(),
        bound_rhs: Vec::new(),
        nu_star_alpha: Vec::new(),
        termination: Termination::MaxTime,
    };
    let sin0 = first.sin_beta;
    let record = |traj: &mut FlowTrajectory, t: f64, u: &[f64], f: &FlowFrame| -> Result<()> {
        let mut p = u.to_vec();
        chart.wrap(&mut p);
        traj.times.push(t);
        traj.r.push(chart.rho_n(u)?);
        traj.points.push(p);
        traj.psi.push(f.psi);
        traj.sin_beta.push(f.sin_beta);
        traj.bound_rhs.push(s_r0 / s_kappa(kappa, t + r0)? * (sin0 - c) + c);
        traj.nu_star_alpha.push(f.nu_star_alpha);
        Ok(())
    };
    record(&mut traj, 0.0, seed, &first)?;
    let steps = (t_max / step + 1e-9).floor() as usize;
    let mut u = seed.to_vec();
    let mut rhs = |_t: f64, x: &[f64]| -> Result<Vec<f64>> {
        if !chart.contains(x) {
            return Err(Error::Domain("left the chart".into()));
        }
        let f = frame_at(chart, x)?;
        Ok(f.grad_r.iter().map(|g| g / (f.psi * f.psi)).collect())
    };
    for k in 0..steps {
        let t = k as f64 * step;
        let next = match rk4_step(&mut rhs, t, &u, step) {
            Ok(next) => next,
            Err(Error::Domain(_)) => {
                traj.termination = Termination::DomainBoundary;
                return Ok(traj);
            }
            Err(Error::CriticalPoint { psi, .. }) => {
                traj.termination = Termination::CriticalPoint { psi };
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        if !chart.contains(&next) {
            traj.termination = Termination::DomainBoundary;
            return Ok(traj);
        }
        let f = match frame_at(chart, &next) {
            Ok(f) => f,
            Err(Error::CriticalPoint { psi, .. }) => {
                traj.termination = Termination::CriticalPoint { psi };
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        u = next;
        record(&mut traj, (k + 1) as f64 * step, &u, &f)?;
    }
    Ok(traj)
}

/// Worst deviations of a trajectory from its invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryCheck {
    pub tol_flow: f64,
    /// `max |R - t - r0|`.
    pub level_error: f64,
    pub min_psi: f64,
    /// `max (sin beta - bound_rhs)` over `t > 0`.
    pub bound_excess: f64,
    pub max_bound_rhs: f64,
    /// Largest excess of the integrated angle inequality per unit time.
    pub angle_inequality_excess: f64,
    pub holds: bool,
}

pub fn check_trajectory(traj: &FlowTrajectory) -> Result<TrajectoryCheck> {
    let tol = tol_flow(traj.step);
    let mut level_error: f64 = 0.0;
    let mut bound_excess = f64::NEG_INFINITY;
    let mut max_rhs = f64::NEG_INFINITY;
    for k in 0..traj.times.len() {
        level_error = level_error.max((traj.r[k] - traj.times[k] - traj.r0).abs());
        // the bound is attained at the seed
        if k > 0 {
            bound_excess = bound_excess.max(traj.sin_beta[k] - traj.bound_rhs[k]);
        }
        max_rhs = max_rhs.max(traj.bound_rhs[k]);
    }
    let min_psi = traj.psi.iter().copied().fold(f64::INFINITY, f64::min);
    // [S(t + r0) sin beta]_t <= -S(t + r0) <nu*, alpha(nu, nu)>, trapezoid in time
    let mut excess = f64::NEG_INFINITY;
    for k in 0..traj.times.len().saturating_sub(1) {
        let s0 = s_kappa(traj.kappa, traj.times[k] + traj.r0)?;
        let s1 = s_kappa(traj.kappa, traj.times[k + 1] + traj.r0)?;
        let lhs = s1 * traj.sin_beta[k + 1] - s0 * traj.sin_beta[k];
        let rhs = -0.5 * traj.step * (s0 * traj.nu_star_alpha[k] + s1 * traj.nu_star_alpha[k + 1]);
        excess = excess.max((lhs - rhs) / traj.step);
    }
    let holds = level_error <= tol && min_psi > 0.0 && bound_excess <= tol && max_rhs < 1.0;
    Ok(TrajectoryCheck {
        tol_flow: tol,
        level_error,
        min_psi,
        bound_excess,
        max_bound_rhs: max_rhs,
        angle_inequality_excess: excess,
        holds,
    })
}

/// Columns `t, u1..um, R, psi, sin_beta, bound_rhs`.
pub fn write_trajectory_csv<W: Write>(traj: &FlowTrajectory, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Numerical(format!("write failed: {e}"));
    let m = traj.seed.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("u{i}")));
    header.extend(["R", "psi", "sin_beta", "bound_rhs"].map(String::from));
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for k in 0..traj.times.len() {
        let mut row = vec![traj.times[k].to_string()];
        row.extend(traj.points[k].iter().map(|x| x.to_string()));
        row.extend([traj.r[k], traj.psi[k], traj.sin_beta[k], traj.bound_rhs[k]].map(|x| x.to_string()));
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    /// Nearest grid vertex.
    pub vertex: usize,
    pub param: Vec<f64>,
    pub rho_n: f64,
    pub psi: f64,
}

/// Smooth function with the critical points of `R`: `|y - y0|^2`, or
/// `kappa <y0, y>_L` on the hyperboloid. Returns value, gradient and Hessian
/// in chart coordinates.
fn smooth_distance(chart: &ImmersionChart, u: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let model = chart.ambient();
    let jet = chart.eval_jet2(u)?;
    let m = chart.dim();
    let y0 = chart.pole();
    if model.is_flat() {
        let d: Vec<f64> = jet.value.iter().zip(y0).map(|(a, b)| a - b).collect();
        let grad = jet.d1.iter().map(|x| 2.0 * model.inner(&d, x)).collect();
        let mut hess = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                hess[i * m + j] = 2.0 * model.inner(&jet.d1[i], &jet.d1[j]) + 2.0 * model.inner(&d, &jet.d2[i * m + j]);
            }
        }
        Ok((model.inner(&d, &d), grad, hess))
    } else {
        let k = model.kappa();
        let grad = jet.d1.iter().map(|x| k * model.inner(y0, x)).collect();
        let hess = jet.d2.iter().map(|x| k * model.inner(y0, x)).collect();
        Ok((k * model.inner(y0, &jet.value), grad, hess))
    }
}

/// Levenberg-Marquardt on `grad F = 0` from `u`, kept within one grid cell.
fn refine_critical(chart: &ImmersionChart, start: &[f64], cell: &[f64]) -> Result<Option<Vec<f64>>> {
    let m = start.len();
    let mut u = start.to_vec();
    let mut lambda = 1e-3;
    for _ in 0..100 {
        let (_, g, h) = smooth_distance(chart, &u)?;
        let gn: f64 = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gn <= 1e-14 {
            break;
        }
        // normal equations (H^T H + lambda I) d = -H^T g
        let mut a = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = (0..m).map(|k| h[k * m + i] * h[k * m + j]).sum::<f64>();
            }
            rhs[i] = -(0..m).map(|k| h[k * m + i] * g[k]).sum::<f64>();
        }
        let scale = (0..m).map(|i| a[i * m + i]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = a.clone();
            for i in 0..m {
                damped[i * m + i] += lambda * scale;
            }
            let Ok(l) = cholesky(&damped, m) else {
                lambda *= 10.0;
                continue;
            };
            let d = crate::linalg::cholesky_solve(&l, m, &rhs);
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + b).collect();
            if !chart.contains(&trial) {
                lambda *= 10.0;
                continue;
            }
            let (_, g2, _) = smooth_distance(chart, &trial)?;
            let gn2: f64 = g2.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn2 < gn {
                u = trial;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    if (0..m).any(|a| (u[a] - start[a]).abs() > cell[a]) {
        return Ok(None);
    }
    Ok(Some(u))
}

fn psi_or_zero(chart: &ImmersionChart, u: &[f64]) -> Result<f64> {
    match frame_at(chart, u) {
        Ok(f) => Ok(f.psi),
        Err(Error::CriticalPoint { psi, .. }) => Ok(psi),
        Err(e) => Err(e),
    }
}

/// Critical points of `R`: vertices where `psi` is a local minimum over the
/// 8-neighbourhood are refined within their cell; those reaching
/// `psi <= TOL_CRIT` are reported, one per distinct refined point.
pub fn find_critical_points(s: &SampledSubmanifold) -> Result<Vec<CriticalPoint>> {
    let chart = s.chart();
    let psi: Vec<f64> = (0..s.len()).map(|v| psi_or_zero(chart, s.param(v))).collect::<Result<_>>()?;
    let mut out: Vec<CriticalPoint> = Vec::new();
    for v in 0..s.len() {
        // ties along degenerate critical sets differ by rounding only
        if !s.king_neighbours(v).iter().all(|&w| psi[v] <= psi[w] * (1.0 + 1e-9) + 1e-15) {
            continue;
        }
        let refined = if psi[v] <= TOL_CRIT {
            Some(s.param(v).to_vec())
        } else {
            refine_critical(chart, s.param(v), s.step())?
        };
        let Some(mut u) = refined else { continue };
        // the pole itself is a critical point where R is not differentiable
        let p = if chart.rho_n(&u)? <= POLE_TOL { 0.0 } else { psi_or_zero(chart, &u)? };
        if p > TOL_CRIT {
            continue;
        }
        chart.wrap(&mut u);
        let tol: Vec<f64> = s.step().iter().map(|h| 1e-6 * h).collect();
        if out.iter().any(|c| c.param.iter().zip(&u).zip(&tol).all(|((a, b), t)| (a - b).abs() <= *t)) {
            continue;
        }
        out.push(CriticalPoint { vertex: s.nearest_vertex(&u), rho_n: chart.rho_n(&u)?, psi: p, param: u });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndCount {
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
    /// The last three counts agree.
    pub stable: bool,
}

/// Components of `{R > r}` in the 8-neighbour grid graph that reach the
/// non-periodic boundary of the parameter box.
pub fn count_ends(s: &SampledSubmanifold, radii: &[f64]) -> Result<EndCount> {
    crate::sampled::check_radii(radii)?;
    let mut counts = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut label = vec![usize::MAX; s.len()];
        let mut count = 0;
        for start in 0..s.len() {
            if label[start] != usize::MAX || !(s.rho_n()[start] > r) {
                continue;
            }
            let id = start;
            let mut touches = false;
            let mut queue = VecDeque::from([start]);
            label[start] = id;
            while let Some(v) = queue.pop_front() {
                touches |= s.on_boundary(v);
                for w in s.king_neighbours(v) {
                    if label[w] == usize::MAX && s.rho_n()[w] > r {
                        label[w] = id;
                        queue.push_back(w);
                    }
                }
            }
            if touches {
                count += 1;
            }
        }
        counts.push(count);
    }
    let n = counts.len();
    let stable = n >= 3 && counts[n - 3..].iter().all(|c| *c == counts[n - 1]);
    Ok(EndCount { radii: radii.to_vec(), counts, stable })
}
