//! Simplicial meshes with a per-cell constant metric.

use crate::error::{Error, Result};
use crate::sampled::SampledSubmanifold;

/// A 1- or 2-dimensional simplicial mesh.
///
/// Each cell stores the parameter positions of its vertices relative to its
/// first one, so cells may straddle a periodic seam.
#[derive(Debug, Clone)]
pub struct FemMesh {
    pub dim: usize,
    /// Parameter coordinates of each vertex.
    pub coords: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    /// Local vertex positions per cell, `dim + 1` points of `dim` coordinates.
    pub local: Vec<Vec<Vec<f64>>>,
    /// Row-major metric `g` per cell.
    pub metric: Vec<Vec<f64>>,
    /// Vertices carrying the Dirichlet condition when no region is given.
    pub boundary: Vec<bool>,
}

impl FemMesh {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn push_cell(&mut self, cell: Vec<usize>, metric: Vec<f64>) {
        let base = self.coords[cell[0]].clone();
        let local = cell.iter().map(|&v| self.coords[v].iter().zip(&base).map(|(a, b)| a - b).collect()).collect();
        self.cells.push(cell);
        self.local.push(local);
        self.metric.push(metric);
    }
}

/// `[0, 1]` split into `n` equal segments.
pub fn interval(n: usize) -> Result<FemMesh> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("interval needs at least 2 cells, got {n}")));
    }
    let coords = (0..=n).map(|i| vec![i as f64 / n as f64]).collect();
    let boundary = (0..=n).map(|i| i == 0 || i == n).collect();
    let mut mesh = FemMesh { dim: 1, coords, cells: vec![], local: vec![], metric: vec![], boundary };
    for i in 0..n {
        mesh.push_cell(vec![i, i + 1], vec![1.0]);
    }
    Ok(mesh)
}

fn square_grid<F>(n: usize, map: F) -> Result<FemMesh>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    if n < 2 {
        return Err(Error::InvalidParams(format!("grid needs at least 2 cells per side, got {n}")));
    }
    let id = |i: usize, j: usize| i * (n + 1) + j;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            let p = map(i as f64 / n as f64, j as f64 / n as f64);
            coords.push(p.to_vec());
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let mut mesh = FemMesh { dim: 2, coords, cells: vec![], local: vec![], metric: vec![], boundary };
    let identity = vec![1.0, 0.0, 0.0, 1.0];
    for i in 0..n {
        for j in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            mesh.push_cell(vec![a, b, d], identity.clone());
            mesh.push_cell(vec![a, d, c], identity.clone());
        }
    }
    Ok(mesh)
}

/// `[0, 1]^2` with `n` cells per side.
pub fn unit_square(n: usize) -> Result<FemMesh> {
    square_grid(n, |x, y| [x, y])
}

/// Unit disc: an `n x n` grid of `[-1, 1]^2` under the elliptical
/// square-to-disc map, so the boundary nodes lie on the circle.
pub fn unit_disc(n: usize) -> Result<FemMesh> {
    square_grid(n, |x, y| {
        let (x, y) = (2.0 * x - 1.0, 2.0 * y - 1.0);
        [x * (1.0 - 0.5 * y * y).sqrt(), y * (1.0 - 0.5 * x * x).sqrt()]
    })
}

/// Triangulation of a sampled 2-dimensional chart (or segments of a curve)
/// with the induced metric averaged over each cell's vertices.
pub fn from_sampled(s: &SampledSubmanifold) -> Result<FemMesh> {
    let m = s.chart().dim();
    if m > 2 {
        return Err(Error::Precondition(format!("finite elements support dimension 1 or 2, got {m}")));
    }
    let step = s.step().to_vec();
    let periodic = s.chart().periodic().to_vec();
    let coords: Vec<Vec<f64>> = (0..s.len()).map(|v| s.param(v).to_vec()).collect();
    let boundary = (0..s.len()).map(|v| s.on_boundary(v)).collect();
    let mut mesh = FemMesh { dim: m, coords, cells: vec![], local: vec![], metric: vec![], boundary };
    let delta = |v: usize, w: usize, off: &[isize]| -> Vec<f64> {
        (0..m)
            .map(|a| if periodic[a] { off[a] as f64 * step[a] } else { s.param(w)[a] - s.param(v)[a] })
            .collect()
    };
    let avg_metric = |vs: &[usize]| -> Vec<f64> {
        let mut g = vec![0.0; m * m];
        for &v in vs {
            for (k, x) in s.forms(v).g.iter().enumerate() {
                g[k] += x / vs.len() as f64;
            }
        }
        g
    };
    let add = |mesh: &mut FemMesh, cell: Vec<usize>, local: Vec<Vec<f64>>| {
        let g = avg_metric(&cell);
        mesh.cells.push(cell);
        mesh.local.push(local);
        mesh.metric.push(g);
    };
    for v in 0..s.len() {
        let idx = s.multi_index(v);
        if m == 1 {
            if let Some(n) = s.offset(&idx, &[1]) {
                let w = s.index_of(&n);
                add(&mut mesh, vec![v, w], vec![vec![0.0], delta(v, w, &[1])]);
            }
            continue;
        }
        let (Some(bi), Some(ci), Some(di)) = (s.offset(&idx, &[1, 0]), s.offset(&idx, &[0, 1]), s.offset(&idx, &[1, 1]))
        else {
            continue;
        };
        let (b, c, d) = (s.index_of(&bi), s.index_of(&ci), s.index_of(&di));
        let pb = delta(v, b, &[1, 0]);
        let pc = delta(v, c, &[0, 1]);
        let pd: Vec<f64> = pb.iter().zip(delta(b, d, &[0, 1])).map(|(x, y)| x + y).collect();
        let o = vec![0.0, 0.0];
        add(&mut mesh, vec![v, b, d], vec![o.clone(), pb, pd.clone()]);
        add(&mut mesh, vec![v, d, c], vec![o, pd, pc]);
    }
    Ok(mesh)
}
