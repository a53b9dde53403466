//! Gridded charts: per-vertex geometry, graph distances and exhaustions.
//!
//! The intrinsic distance `rho_M` is approximated by Dijkstra on a 16-point
//! stencil (all steps `(i, j)` with `max(|i|, |j|) <= 2` and coprime
//! components); edge lengths use the induced metric at the edge midpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use crate::comparison::st_over_ct;
use crate::error::{Error, Result};
use crate::immersion::{Anchor, FundamentalForms, ImmersionChart};

pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Clone)]
pub struct SampledSubmanifold {
    chart: ImmersionChart,
    resolution: Vec<usize>,
    /// Parameter step per axis.
    step: Vec<f64>,
    params: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    /// `d phi / d u_i` per vertex.
    tangents: Vec<Vec<Vec<f64>>>,
    forms: Vec<FundamentalForms>,
    rho_n: Vec<f64>,
    rho_m: Vec<f64>,
    edges: Vec<Vec<(usize, f64)>>,
    local_scale: Vec<f64>,
    eps_mesh: f64,
    base_vertex: usize,
    anchor_offset: f64,
    cover_radius: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Grid offsets of the distance stencil.
fn stencil(m: usize) -> Vec<Vec<isize>> {
    match m {
        1 => vec![vec![-1], vec![1]],
        _ => {
            let mut out = Vec::new();
            for i in -2isize..=2 {
                for j in -2isize..=2 {
                    let (a, b) = (i.abs(), j.abs());
                    if (a, b) != (0, 0) && gcd(a, b) == 1 {
                        out.push(vec![i, j]);
                    }
                }
            }
            out
        }
    }
}

fn gcd(a: isize, b: isize) -> isize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SampledSubmanifold {
    /// Samples `chart` on a regular grid with `resolution[i]` points on axis `i`.
    /// Periodic axes omit the duplicated endpoint.
    pub fn new(chart: &ImmersionChart, resolution: &[usize]) -> Result<Self> {
        let m = chart.dim();
        if m > 2 {
            return Err(Error::InvalidParams(format!("sampling supports m <= 2, got m = {m}")));
        }
        if resolution.len() != m {
            return Err(Error::InvalidParams(format!(
                "resolution has {} entries for a {m}-dimensional chart",
                resolution.len()
            )));
        }
        if let Some(r) = resolution.iter().find(|r| **r < MIN_RESOLUTION) {
            return Err(Error::InvalidParams(format!(
                "resolution {r} is below the minimum {MIN_RESOLUTION}"
            )));
        }
        let step: Vec<f64> = (0..m)
            .map(|a| {
                let span = chart.hi()[a] - chart.lo()[a];
                if chart.periodic()[a] {
                    span / resolution[a] as f64
                } else {
                    span / (resolution[a] - 1) as f64
                }
            })
            .collect();
        let total: usize = resolution.iter().product();
        let mut s = Self {
            chart: chart.clone(),
            resolution: resolution.to_vec(),
            step,
            params: Vec::with_capacity(total),
            points: Vec::with_capacity(total),
            tangents: Vec::with_capacity(total),
            forms: Vec::with_capacity(total),
            rho_n: Vec::with_capacity(total),
            rho_m: Vec::new(),
            edges: vec![Vec::new(); total],
            local_scale: vec![0.0; total],
            eps_mesh: 0.0,
            base_vertex: 0,
            anchor_offset: 0.0,
            cover_radius: f64::INFINITY,
        };
        let model = *chart.ambient();
        for v in 0..total {
            let u = s.param_of(&s.multi_index(v));
            let jet = chart.eval_jet2(&u)?;
            let forms = FundamentalForms::from_jet(&model, &jet, &u)?;
            s.rho_n.push(model.distance_coords(chart.pole(), &jet.value)?);
            s.points.push(jet.value);
            s.tangents.push(jet.d1);
            s.forms.push(forms);
            s.params.push(u);
        }
        s.build_edges()?;
        s.base_vertex = s.nearest_vertex(chart.base());
        s.rho_m = s.dijkstra()?;
        s.anchor_offset = s.compute_anchor_offset()?;
        s.cover_radius = s.compute_cover_radius();
        Ok(s)
    }

    pub fn chart(&self) -> &ImmersionChart {
        &self.chart
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn param(&self, v: usize) -> &[f64] {
        &self.params[v]
    }

    pub fn point(&self, v: usize) -> &[f64] {
        &self.points[v]
    }

    /// Coordinate tangent vectors `d phi / d u_i` at `v`.
    pub fn tangents(&self, v: usize) -> &[Vec<f64>] {
        &self.tangents[v]
    }

    pub fn forms(&self, v: usize) -> &FundamentalForms {
        &self.forms[v]
    }

    pub fn rho_n(&self) -> &[f64] {
        &self.rho_n
    }

    pub fn rho_m(&self) -> &[f64] {
        &self.rho_m
    }

    pub fn edges(&self, v: usize) -> &[(usize, f64)] {
        &self.edges[v]
    }

    /// Largest edge length of the graph.
    pub fn eps_mesh(&self) -> f64 {
        self.eps_mesh
    }

    /// Largest edge length incident to `v`.
    pub fn local_scale(&self, v: usize) -> f64 {
        self.local_scale[v]
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    /// Grid vertex nearest to the base parameter `x0`.
    pub fn base_vertex(&self) -> usize {
        self.base_vertex
    }

    /// `max rho_N` over the anchor set; zero when the pole is `phi(x0)`.
    pub fn anchor_offset(&self) -> f64 {
        self.anchor_offset
    }

    /// Smallest `rho_M` on the non-periodic boundary of the parameter box:
    /// intrinsic balls of smaller radius are fully represented.
    pub fn cover_radius(&self) -> f64 {
        self.cover_radius
    }

    /// `(S_kappa / C_kappa)(rho_M) * alpha_sup` at `v`.
    pub fn tamed_ratio(&self, v: usize) -> Result<f64> {
        Ok(st_over_ct(self.chart.ambient().kappa(), self.rho_m[v])? * self.forms[v].alpha_sup)
    }

    pub fn multi_index(&self, v: usize) -> Vec<usize> {
        match self.resolution.len() {
            1 => vec![v],
            _ => vec![v / self.resolution[1], v % self.resolution[1]],
        }
    }

    pub fn index_of(&self, idx: &[usize]) -> usize {
        match idx.len() {
            1 => idx[0],
            _ => idx[0] * self.resolution[1] + idx[1],
        }
    }

    fn param_of(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(a, &i)| {
                if !self.chart.periodic()[a] && i + 1 == self.resolution[a] {
                    self.chart.hi()[a]
                } else {
                    self.chart.lo()[a] + i as f64 * self.step[a]
                }
            })
            .collect()
    }

    /// Neighbour of `idx` displaced by `offset`, wrapping periodic axes.
    pub fn offset(&self, idx: &[usize], offset: &[isize]) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(idx.len());
        for a in 0..idx.len() {
            let n = self.resolution[a] as isize;
            let mut k = idx[a] as isize + offset[a];
            if self.chart.periodic()[a] {
                k = k.rem_euclid(n);
            } else if k < 0 || k >= n {
                return None;
            }
            out.push(k as usize);
        }
        Some(out)
    }

    /// Whether `v` sits on a non-periodic face of the parameter box.
    pub fn on_boundary(&self, v: usize) -> bool {
        let idx = self.multi_index(v);
        (0..idx.len()).any(|a| !self.chart.periodic()[a] && (idx[a] == 0 || idx[a] + 1 == self.resolution[a]))
    }

    /// Grid neighbours with `max |offset| <= 1` (8 in two dimensions).
    pub fn king_neighbours(&self, v: usize) -> Vec<usize> {
        let idx = self.multi_index(v);
        let m = idx.len();
        let mut out = Vec::new();
        let offsets: Vec<Vec<isize>> = if m == 1 {
            vec![vec![-1], vec![1]]
        } else {
            (-1..=1).flat_map(|i| (-1..=1).map(move |j| vec![i, j])).filter(|o| o != &vec![0, 0]).collect()
        };
        for o in offsets {
            if let Some(n) = self.offset(&idx, &o) {
                let w = self.index_of(&n);
                if w != v && !out.contains(&w) {
                    out.push(w);
                }
            }
        }
        out
    }

    fn build_edges(&mut self) -> Result<()> {
        let m = self.resolution.len();
        let model = *self.chart.ambient();
        let offsets: Vec<Vec<isize>> = stencil(m).into_iter().filter(|o| o > &vec![0; m]).collect();
        let mut eps: f64 = 0.0;
        for v in 0..self.len() {
            let idx = self.multi_index(v);
            for o in &offsets {
                let Some(nidx) = self.offset(&idx, o) else { continue };
                let w = self.index_of(&nidx);
                if w == v {
                    continue;
                }
                let du: Vec<f64> = (0..m).map(|a| o[a] as f64 * self.step[a]).collect();
                let du = self.actual_delta(v, w, &du);
                let mut mid: Vec<f64> = (0..m).map(|a| self.params[v][a] + 0.5 * du[a]).collect();
                self.chart.wrap(&mut mid);
                let jet = self.chart.eval_jet2(&mid)?;
                let mut len2 = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        len2 += du[i] * du[j] * model.inner(&jet.d1[i], &jet.d1[j]);
                    }
                }
                let len = len2.max(0.0).sqrt();
                self.edges[v].push((w, len));
                self.edges[w].push((v, len));
                self.local_scale[v] = self.local_scale[v].max(len);
                self.local_scale[w] = self.local_scale[w].max(len);
                eps = eps.max(len);
            }
        }
        self.eps_mesh = eps;
        Ok(())
    }

    /// Parameter displacement from `v` to `w`; differs from the nominal one
    /// only next to the clamped last node of a non-periodic axis.
    fn actual_delta(&self, v: usize, w: usize, nominal: &[f64]) -> Vec<f64> {
        (0..nominal.len())
            .map(|a| if self.chart.periodic()[a] { nominal[a] } else { self.params[w][a] - self.params[v][a] })
            .collect()
    }

    pub fn nearest_vertex(&self, u: &[f64]) -> usize {
        let m = u.len();
        let idx: Vec<usize> = (0..m)
            .map(|a| {
                let n = self.resolution[a];
                let k = ((u[a] - self.chart.lo()[a]) / self.step[a]).round() as isize;
                if self.chart.periodic()[a] {
                    k.rem_euclid(n as isize) as usize
                } else {
                    k.clamp(0, n as isize - 1) as usize
                }
            })
            .collect();
        self.index_of(&idx)
    }

    /// Initial distances of the anchor set.
    fn sources(&self) -> Result<Vec<(usize, f64)>> {
        match self.chart.anchor() {
            Anchor::Point(_) => Ok(vec![(self.base_vertex, 0.0)]),
            Anchor::Slice { axis, value } => {
                let a = *axis;
                let t = (value - self.chart.lo()[a]) / self.step[a];
                let k0 = (t.floor().max(0.0) as usize).min(self.resolution[a] - 1);
                let rows: Vec<usize> =
                    if (t - t.round()).abs() < 1e-12 { vec![t.round() as usize] } else { vec![k0, k0 + 1] };
                let mut out = Vec::new();
                for v in 0..self.len() {
                    let idx = self.multi_index(v);
                    if rows.contains(&idx[a]) {
                        let g = self.forms[v].g[a * self.resolution.len() + a];
                        out.push((v, g.sqrt() * (self.params[v][a] - value).abs()));
                    }
                }
                Ok(out)
            }
        }
    }

    fn dijkstra(&self) -> Result<Vec<f64>> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        for (v, d) in self.sources()? {
            if d < dist[v] {
                dist[v] = d;
                heap.push(Entry { dist: d, vertex: v });
            }
        }
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.edges[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry { dist: nd, vertex: w });
                }
            }
        }
        Ok(dist)
    }

    /// Parameter points of the anchor: the base point, or the slice sampled
    /// at the grid values of the remaining axes.
    pub fn anchor_params(&self) -> Vec<Vec<f64>> {
        match self.chart.anchor() {
            Anchor::Point(p) => vec![p.clone()],
            Anchor::Slice { axis, value } => {
                // a slice of a one-dimensional chart is a single point
                let other = (0..self.resolution.len()).find(|b| b != axis);
                let count = other.map_or(1, |b| self.resolution[b]);
                (0..count)
                    .map(|k| {
                        let mut idx = vec![0; self.resolution.len()];
                        if let Some(b) = other {
                            idx[b] = k;
                        }
                        let mut u = self.param_of(&idx);
                        u[*axis] = *value;
                        u
                    })
                    .collect()
            }
        }
    }

    fn compute_anchor_offset(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for u in self.anchor_params() {
            best = best.max(self.chart.rho_n(&u)?);
        }
        Ok(best)
    }

    fn compute_cover_radius(&self) -> f64 {
        (0..self.len()).filter(|&v| self.on_boundary(v)).map(|v| self.rho_m[v]).fold(f64::INFINITY, f64::min)
    }

    /// Sets `C_i = { rho_M <= r_i }` for strictly increasing radii.
    pub fn exhaustion(&self, radii: &[f64]) -> Result<Vec<Vec<usize>>> {
        check_radii(radii)?;
        let smallest = self.rho_m.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min);
        if radii[0] < smallest {
            return Err(Error::Precondition(format!(
                "first radius {} is below the smallest positive sampled distance {smallest}",
                radii[0]
            )));
        }
        Ok(radii
            .iter()
            .map(|&r| (0..self.len()).filter(|&v| self.rho_m[v] <= r).collect())
            .collect())
    }

    /// Vertex table with columns `u1..um, y1..yk, rho_M, rho_N, alpha_sup, tamed_ratio`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Numerical(format!("write failed: {e}"));
        let m = self.resolution.len();
        let k = self.points.first().map_or(0, Vec::len);
        let mut header: Vec<String> = (1..=m).map(|i| format!("u{i}")).collect();
        header.extend((1..=k).map(|i| format!("y{i}")));
        header.extend(["rho_M", "rho_N", "alpha_sup", "tamed_ratio"].map(String::from));
        writeln!(out, "{}", header.join(",")).map_err(io)?;
        for v in 0..self.len() {
            let ratio = if self.rho_m[v].is_finite() { self.tamed_ratio(v)? } else { f64::INFINITY };
            let mut row: Vec<String> = self.params[v].iter().map(|x| x.to_string()).collect();
            row.extend(self.points[v].iter().map(|x| x.to_string()));
            row.extend([self.rho_m[v], self.rho_n[v], self.forms[v].alpha_sup, ratio].map(|x| x.to_string()));
            writeln!(out, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }
}

pub(crate) fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidParams("empty radii list".into()));
    }
    if radii.iter().any(|r| !r.is_finite()) || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParams(format!("radii must be finite and strictly increasing: {radii:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_has_sixteen_primitive_steps() {
        let s = stencil(2);
        assert_eq!(s.len(), 16);
        assert!(s.contains(&vec![1, 2]) && !s.contains(&vec![2, 2]) && !s.contains(&vec![2, 0]));
    }
}
