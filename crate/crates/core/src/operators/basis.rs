use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointsets::{displacement, CellIndex, DeloneSet, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Cell-centred grid discretizing `L^2` of a window: point `i` sits at
/// `lo + (i + 1/2) pitch` along each axis, axis 0 varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBasis {
    pub window: Window,
    pub pitch: f64,
    pub shape: Vec<usize>,
    pub boundary: Boundary,
}

impl GridBasis {
    pub fn new(window: Window, pitch: f64, boundary: Boundary) -> Result<Self> {
        if !(pitch > 0.0) {
            return Err(Error::InvalidParameter(format!("grid pitch must be positive, got {pitch}")));
        }
        let mut shape = Vec::with_capacity(window.dim());
        for e in window.edges() {
            let n = (e / pitch).round();
            if n < 1.0 || (n * pitch - e).abs() > 1e-9 * e.max(1.0) {
                return Err(Error::InvalidParameter(format!("pitch {pitch} does not divide window edge {e}")));
            }
            shape.push(n as usize);
        }
        Ok(Self { window, pitch, shape, boundary })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|n| {
                let k = i % n;
                i /= n;
                k
            })
            .collect()
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for k in (0..idx.len()).rev() {
            lin = lin * self.shape[k] + idx[k];
        }
        lin
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .zip(&self.window.lo)
            .map(|(k, lo)| lo + (*k as f64 + 0.5) * self.pitch)
            .collect()
    }

    /// Volume element of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.pitch.powi(self.dim() as i32)
    }

    pub fn period(&self) -> Option<Vec<f64>> {
        (self.boundary == Boundary::Periodic).then(|| self.window.edges())
    }
}

/// Basis of `l^2` of a point pattern with `orbitals` internal states per
/// site; basis index `site * orbitals + orbital`, sites in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteBasis {
    pub set: DeloneSet,
    pub orbitals: usize,
}

impl SiteBasis {
    pub fn new(set: DeloneSet, orbitals: usize) -> Self {
        Self { set: set.sorted(), orbitals: orbitals.max(1) }
    }

    pub fn len(&self) -> usize {
        self.set.len() * self.orbitals
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn site_of(&self, i: usize) -> usize {
        i / self.orbitals
    }

    /// Site within `r/2` of `x` (minimal image on a torus).
    pub fn site_index(&self, x: &[f64]) -> Option<usize> {
        let period = self.set.period();
        let index = CellIndex::new(&self.set.points, &self.set.window, 2.0 * self.set.r, period.as_deref());
        index
            .within(x, 0.5 * self.set.r)
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Basis {
    Grid(GridBasis),
    Sites(SiteBasis),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Grid(g) => g.len(),
            Basis::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Grid(g) => g.dim(),
            Basis::Sites(s) => s.set.dim,
        }
    }

    pub fn window(&self) -> &Window {
        match self {
            Basis::Grid(g) => &g.window,
            Basis::Sites(s) => &s.set.window,
        }
    }

    pub fn period(&self) -> Option<Vec<f64>> {
        match self {
            Basis::Grid(g) => g.period(),
            Basis::Sites(s) => s.set.period(),
        }
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        match self {
            Basis::Grid(g) => g.point(i),
            Basis::Sites(s) => s.set.points[s.site_of(i)].clone(),
        }
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.position(i)).collect()
    }

    /// Weight of one basis element in a volume integral: the cell volume on a
    /// grid, none for sites.
    pub fn cell_volume(&self) -> Option<f64> {
        match self {
            Basis::Grid(g) => Some(g.cell_volume()),
            Basis::Sites(_) => None,
        }
    }

    /// Matrix of separations `x_j - x_i` (minimal image on a torus), one
    /// row-major `n x n` table per axis.
    pub fn separations(&self) -> Vec<Vec<f64>> {
        let pos = self.positions();
        let period = self.period();
        let n = pos.len();
        let d = self.dim();
        let mut out = vec![vec![0.0; n * n]; d];
        for i in 0..n {
            for j in 0..n {
                let s = displacement(&pos[i], &pos[j], period.as_deref());
                for k in 0..d {
                    out[k][i * n + j] = s[k];
                }
            }
        }
        out
    }
}
