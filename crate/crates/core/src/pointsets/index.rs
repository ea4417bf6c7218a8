use super::{distance, Window};

/// Uniform cell list for nearest-neighbour and fixed-radius queries,
/// optionally on a torus.
pub struct CellIndex<'a> {
    points: &'a [Vec<f64>],
    lo: Vec<f64>,
    cell: Vec<f64>,
    counts: Vec<usize>,
    cells: Vec<Vec<usize>>,
    period: Option<Vec<f64>>,
}

impl<'a> CellIndex<'a> {
    pub fn new(points: &'a [Vec<f64>], window: &Window, cell_size: f64, period: Option<&[f64]>) -> Self {
        let edges = window.edges();
        let mut size = cell_size;
        let counts: Vec<usize> = loop {
            let counts: Vec<usize> = edges
                .iter()
                .map(|e| ((e / size).floor() as usize).max(1))
                .collect();
            if counts.iter().product::<usize>() <= 1 << 20 {
                break counts;
            }
            size *= 2.0;
        };
        let cell: Vec<f64> = edges.iter().zip(&counts).map(|(e, n)| e / *n as f64).collect();
        let total: usize = counts.iter().product();
        let mut index = Self {
            points,
            lo: window.lo.clone(),
            cell,
            counts,
            cells: vec![Vec::new(); total],
            period: period.map(|p| p.to_vec()),
        };
        for (i, p) in points.iter().enumerate() {
            let c = index.cell_of(p);
            let lin = index.linear(&c);
            index.cells[lin].push(i);
        }
        index
    }

    fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| {
                let raw = ((v - self.lo[k]) / self.cell[k]).floor() as i64;
                let n = self.counts[k] as i64;
                if self.period.is_some() {
                    raw.rem_euclid(n)
                } else {
                    raw.clamp(0, n - 1)
                }
            })
            .collect()
    }

    fn linear(&self, c: &[i64]) -> usize {
        let mut lin = 0usize;
        for k in (0..c.len()).rev() {
            lin = lin * self.counts[k] + c[k] as usize;
        }
        lin
    }

    /// Cell coordinates after wrapping; `None` if outside a non-periodic grid.
    fn resolve(&self, c: &[i64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(c.len());
        for (k, &v) in c.iter().enumerate() {
            let n = self.counts[k] as i64;
            if self.period.is_some() {
                out.push(v.rem_euclid(n));
            } else if v < 0 || v >= n {
                return None;
            } else {
                out.push(v);
            }
        }
        Some(out)
    }

    fn for_each_offset(dim: usize, k: i64, ring_only: bool, mut f: impl FnMut(&[i64])) {
        let side = (2 * k + 1) as usize;
        let total = side.pow(dim as u32);
        let mut off = vec![0i64; dim];
        for mut lin in 0..total {
            for o in off.iter_mut() {
                *o = (lin % side) as i64 - k;
                lin /= side;
            }
            if ring_only && off.iter().map(|o| o.abs()).max().unwrap_or(0) != k {
                continue;
            }
            f(&off);
        }
    }

    /// Nearest point to `x`, optionally skipping one index.
    pub fn nearest_excluding(&self, x: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let dim = x.len();
        let home = self.cell_of(x);
        let min_cell = self.cell.iter().cloned().fold(f64::INFINITY, f64::min);
        let kmax = *self.counts.iter().max().unwrap() as i64;
        let mut best: Option<(usize, f64)> = None;
        let period = self.period.as_deref();
        for k in 0..=kmax {
            Self::for_each_offset(dim, k, true, |off| {
                let c: Vec<i64> = home.iter().zip(off).map(|(h, o)| h + o).collect();
                if let Some(c) = self.resolve(&c) {
                    for &i in &self.cells[self.linear(&c)] {
                        if Some(i) == exclude {
                            continue;
                        }
                        let d = distance(x, &self.points[i], period);
                        if best.map_or(true, |(bi, bd)| d < bd || (d == bd && i < bi)) {
                            best = Some((i, d));
                        }
                    }
                }
            });
            if let Some((_, d)) = best {
                if d <= k as f64 * min_cell {
                    break;
                }
            }
        }
        best
    }

    /// All points within `radius` of `x` (inclusive), sorted by index.
    pub fn within(&self, x: &[f64], radius: f64) -> Vec<(usize, f64)> {
        let dim = x.len();
        let home = self.cell_of(x);
        let min_cell = self.cell.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = (radius / min_cell).ceil() as i64 + 1;
        let period = self.period.as_deref();
        let mut seen = Vec::new();
        Self::for_each_offset(dim, k, false, |off| {
            let c: Vec<i64> = home.iter().zip(off).map(|(h, o)| h + o).collect();
            if let Some(c) = self.resolve(&c) {
                seen.push(self.linear(&c));
            }
        });
        seen.sort_unstable();
        seen.dedup();
        let mut out: Vec<(usize, f64)> = seen
            .into_iter()
            .flat_map(|lin| self.cells[lin].iter().copied())
            .filter_map(|i| {
                let d = distance(x, &self.points[i], period);
                (d <= radius).then_some((i, d))
            })
            .collect();
        out.sort_by_key(|(i, _)| *i);
        out
    }
}
