//! The sequence `a_i = sup { (S_kappa / C_kappa)(rho_M) |alpha| : rho_M > r_i }`,
//! its limit estimate and the level radius `r_0`.

use serde::Serialize;

use crate::comparison::st_over_ct;
use crate::error::{Error, Result};
use crate::sampled::{check_radii, SampledSubmanifold};

/// Relative change below which the last two `a_i` count as converged.
pub const STABILITY_REL: f64 = 0.05;
/// Absolute floor added to every `a_i` comparison.
pub const STABILITY_ABS: f64 = 1e-3;
/// Required agreement between the two exhaustions.
pub const EXHAUSTION_AGREEMENT: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    /// The last two values agree within the stability tolerance.
    Converged,
    /// Still decreasing; the last value is an upper estimate of the limit.
    Decreasing,
    /// Grows with the sampled domain or fails to settle.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TamednessReport {
    pub radii: Vec<f64>,
    pub a_i: Vec<f64>,
    /// Vertex attaining each `a_i`.
    pub argmax: Vec<usize>,
    pub a_estimate: f64,
    pub status: EstimateStatus,
    pub divergent: bool,
    pub tamed: bool,
    /// The same sequence over the complements of dilated parameter boxes.
    pub box_a_i: Vec<f64>,
    pub box_estimate: f64,
    pub exhaustions_agree: bool,
    pub c: Option<f64>,
    /// Smallest sampled radius with the ratio at most `c` outside `B_M(r0)`.
    pub r0: Option<f64>,
    /// `r0` enlarged until the extrinsic ratio `(S/C)(rho_N) |alpha|` is also
    /// at most `c` outside `B_M`; equals `r0` when the pole is `phi(x0)`.
    pub working_r0: Option<f64>,
    /// Level of `rho_N` beyond which `(S/C)(rho_N) |alpha| <= c`.
    pub extrinsic_r0: Option<f64>,
    pub cover_radius: f64,
    pub eps_mesh: f64,
}

/// `(S/C)(rho_M) * alpha_sup` per vertex; `None` where `rho_M` is infinite.
pub fn ratios(s: &SampledSubmanifold) -> Result<Vec<Option<f64>>> {
    (0..s.len())
        .map(|v| if s.rho_m()[v].is_finite() { s.tamed_ratio(v).map(Some) } else { Ok(None) })
        .collect()
}

/// `(S/C)(rho_N) * alpha_sup` per vertex.
pub fn extrinsic_ratios(s: &SampledSubmanifold) -> Result<Vec<f64>> {
    let kappa = s.chart().ambient().kappa();
    (0..s.len()).map(|v| Ok(st_over_ct(kappa, s.rho_n()[v])? * s.forms(v).alpha_sup)).collect()
}

fn sup_where(values: &[Option<f64>], keep: impl Fn(usize) -> bool) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (v, r) in values.iter().enumerate() {
        if let Some(r) = r {
            if keep(v) && best.is_none_or(|(b, _)| *r > b) {
                best = Some((*r, v));
            }
        }
    }
    best
}

/// `a_i` and the vertex attaining it for each radius.
pub fn a_sequence(s: &SampledSubmanifold, radii: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    check_radii(radii)?;
    let ratio = ratios(s)?;
    let mut a = Vec::with_capacity(radii.len());
    let mut argmax = Vec::with_capacity(radii.len());
    for &r in radii {
        let (value, v) = sup_where(&ratio, |v| s.rho_m()[v] > r).ok_or(Error::EmptyComplement { radius: r })?;
        a.push(value);
        argmax.push(v);
    }
    Ok((a, argmax))
}

/// The same sequence with `C_i` replaced by the smallest grid box containing
/// it, dilated by one node along every non-periodic axis.
pub fn box_sequence(s: &SampledSubmanifold, radii: &[f64]) -> Result<Vec<f64>> {
    let ratio = ratios(s)?;
    let m = s.resolution().len();
    let periodic = s.chart().periodic();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut lo = vec![usize::MAX; m];
        let mut hi = vec![0usize; m];
        for v in 0..s.len() {
            if s.rho_m()[v] <= r {
                let idx = s.multi_index(v);
                for a in 0..m {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a]);
                }
            }
        }
        let inside = |v: usize| {
            let idx = s.multi_index(v);
            (0..m).all(|a| periodic[a] || (idx[a] + 1 >= lo[a] && idx[a] <= hi[a] + 1))
        };
        let sup = sup_where(&ratio, |v| !inside(v)).map_or(0.0, |(x, _)| x);
        out.push(sup);
    }
    Ok(out)
}

fn settle(a: &[f64]) -> EstimateStatus {
    let n = a.len();
    let (prev, last) = (a[n - 2], a[n - 1]);
    if (last - prev).abs() <= STABILITY_REL * prev.abs().max(last.abs()) + STABILITY_ABS {
        EstimateStatus::Converged
    } else if a[n - 3..].windows(2).all(|w| w[1] <= w[0] + 1e-12) {
        EstimateStatus::Decreasing
    } else {
        EstimateStatus::Divergent
    }
}

/// Whether the supremum beyond the last radius keeps growing with the domain.
/// Two windows are checked, both starting at `r_last`: the complete annulus up
/// to the cover radius against its inner half, and the whole sampled
/// complement against the part below halfway to the largest sampled distance.
fn grows_with_domain(s: &SampledSubmanifold, ratio: &[Option<f64>], r_last: f64) -> bool {
    let r_max = s.rho_m().iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max);
    let sup_to = |r: f64| {
        sup_where(ratio, |v| s.rho_m()[v] > r_last && s.rho_m()[v] <= r).map_or(0.0, |(x, _)| x)
    };
    let grows = |outer: f64| {
        let mid = 0.5 * (r_last + outer);
        sup_to(outer) > sup_to(mid) * (1.0 + STABILITY_REL) + STABILITY_ABS
    };
    (s.cover_radius() > r_last && grows(s.cover_radius())) || grows(r_max)
}

/// Computes the `a_i`, the estimate of `a(M)` and, for a tamed sample, the
/// level `c` (default `(a + 1) / 2`) with its radii.
pub fn analyze(s: &SampledSubmanifold, radii: &[f64], c: Option<f64>) -> Result<TamednessReport> {
    if radii.len() < 3 {
        return Err(Error::InvalidParams(format!("the estimate needs at least 3 radii, got {}", radii.len())));
    }
    let (a_i, argmax) = a_sequence(s, radii)?;
    let ratio = ratios(s)?;
    let n = a_i.len();
    let mut status = settle(&a_i);
    if grows_with_domain(s, &ratio, radii[n - 1]) {
        status = EstimateStatus::Divergent;
    }
    let box_a_i = box_sequence(s, radii)?;
    let box_estimate = box_a_i[n - 1];
    let a_estimate = a_i[n - 1];
    let exhaustions_agree =
        (a_estimate - box_estimate).abs() <= EXHAUSTION_AGREEMENT * a_estimate.max(box_estimate) + STABILITY_ABS;
    let divergent = status == EstimateStatus::Divergent;
    let tamed = !divergent && a_estimate < 1.0;
    let mut report = TamednessReport {
        radii: radii.to_vec(),
        a_i,
        argmax,
        a_estimate,
        status,
        divergent,
        tamed,
        box_a_i,
        box_estimate,
        exhaustions_agree,
        c: None,
        r0: None,
        working_r0: None,
        extrinsic_r0: None,
        cover_radius: s.cover_radius(),
        eps_mesh: s.eps_mesh(),
    };
    if let Some(c) = c {
        check_level(&report, c)?;
    }
    if report.tamed {
        let c = c.unwrap_or(0.5 * (report.a_estimate + 1.0));
        report.r0 = Some(find_r0(s, &report, c)?);
        report.working_r0 = Some(working_r0(s, c)?);
        report.extrinsic_r0 = Some(extrinsic_r0(s, c)?);
        report.c = Some(c);
    }
    Ok(report)
}

fn check_level(report: &TamednessReport, c: f64) -> Result<()> {
    if report.divergent || !report.tamed {
        return Err(Error::NotTamed(format!(
            "a(M) estimate {} ({:?})",
            report.a_estimate, report.status
        )));
    }
    if !(report.a_estimate < c && c < 1.0) {
        return Err(Error::Level(format!(
            "c = {c} must lie strictly between the estimate {} and 1",
            report.a_estimate
        )));
    }
    Ok(())
}

/// Smallest radius `r` (over sampled values of `key`) such that every vertex
/// with `key > r` has `value <= c`; never below the smallest positive key.
pub(crate) fn level_radius(key: &[f64], value: &[f64], c: f64) -> f64 {
    let mut order: Vec<usize> = (0..key.len()).filter(|&v| key[v].is_finite()).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]));
    let mut r = 0.0;
    for &v in order.iter().rev() {
        if value[v] > c {
            r = key[v];
            break;
        }
    }
    let first = order.iter().map(|&v| key[v]).find(|k| *k > 0.0).unwrap_or(0.0);
    r.max(first)
}

/// Minimal sampled `r0` with `(S/C)(rho_M) |alpha| <= c` on `{rho_M > r0}`.
pub fn find_r0(s: &SampledSubmanifold, report: &TamednessReport, c: f64) -> Result<f64> {
    check_level(report, c)?;
    let ratio: Vec<f64> = ratios(s)?.into_iter().map(|r| r.unwrap_or(0.0)).collect();
    Ok(level_radius(s.rho_m(), &ratio, c))
}

/// Intrinsic radius beyond which both the intrinsic and the extrinsic ratio
/// are at most `c`.
pub fn working_r0(s: &SampledSubmanifold, c: f64) -> Result<f64> {
    let ext = extrinsic_ratios(s)?;
    let both: Vec<f64> = ratios(s)?.into_iter().zip(&ext).map(|(r, e)| r.unwrap_or(0.0).max(*e)).collect();
    Ok(level_radius(s.rho_m(), &both, c))
}

/// Smallest sampled level `r` of `rho_N` with `(S/C)(rho_N) |alpha| <= c` on
/// the closed set `{rho_N >= r}`.
pub fn extrinsic_r0(s: &SampledSubmanifold, c: f64) -> Result<f64> {
    let ext = extrinsic_ratios(s)?;
    let last_bad = (0..s.len()).filter(|&v| ext[v] > c).map(|v| s.rho_n()[v]).fold(f64::NEG_INFINITY, f64::max);
    if last_bad == f64::NEG_INFINITY {
        return Ok(level_radius(s.rho_n(), &ext, c));
    }
    let next = s.rho_n().iter().copied().filter(|r| *r > last_bad).fold(f64::INFINITY, f64::min);
    Ok(if next.is_finite() { next } else { last_bad })
}

/// Default exhaustion: five radii geometrically spaced up to 80% of the
/// largest fully covered radius.
pub fn default_radii(s: &SampledSubmanifold) -> Vec<f64> {
    let finite_max = s.rho_m().iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max);
    let top = 0.8 * s.cover_radius().min(finite_max);
    [0.05, 0.1, 0.2, 0.4, 1.0].iter().map(|f| f * top).collect()
}
