use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{verify, DeloneSet, Window};
use crate::error::{Error, Result};

/// Point-pattern generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Hypercubic lattice `spacing * Z^d` anchored at the window corner.
    PeriodicSquare { spacing: f64 },
    /// Triangular lattice (d = 2).
    PeriodicTriangular { spacing: f64 },
    /// Ammann-Beenker vertex set from the Z^4 cut-and-project scheme (d = 2).
    CutAndProject {
        #[serde(default = "unit")]
        edge: f64,
    },
    /// Square lattice with every point displaced uniformly inside a ball of radius `jitter`.
    JitteredPeriodic { spacing: f64, jitter: f64 },
    /// Dart throwing with exclusion radius `2r`, then gap filling.
    RandomHardcore {
        r: f64,
        #[serde(rename = "R")]
        big_r: f64,
    },
}

fn unit() -> f64 {
    1.0
}

const SLACK: f64 = 1e-9;

/// Generates a Delone set. The result is a pure function of the arguments.
/// With `periodic`, the window is treated as a torus: points are generated in
/// the half-open box and jitter wraps around.
pub fn generate(generator: &Generator, window: &Window, seed: u64, periodic: bool) -> Result<DeloneSet> {
    let dim = window.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = match *generator {
        Generator::PeriodicSquare { spacing } => {
            check_positive("spacing", spacing)?;
            let points = hypercubic(window, spacing, periodic)?;
            let big_r = 0.75 * spacing * (dim as f64 / 2.0).sqrt();
            DeloneSet::new(points, 0.5 * spacing * (1.0 - SLACK), big_r, window.clone())?
        }
        Generator::PeriodicTriangular { spacing } => {
            check_positive("spacing", spacing)?;
            if dim != 2 {
                return Err(Error::InvalidParameter("triangular lattice needs d = 2".into()));
            }
            let points = triangular(window, spacing, periodic)?;
            DeloneSet::new(points, 0.5 * spacing * (1.0 - SLACK), 0.6 * spacing, window.clone())?
        }
        Generator::JitteredPeriodic { spacing, jitter } => {
            check_positive("spacing", spacing)?;
            if !(jitter >= 0.0 && jitter < 0.5 * spacing) {
                return Err(Error::InvalidParameter(format!(
                    "jitter {jitter} must lie in [0, spacing/2 = {})",
                    0.5 * spacing
                )));
            }
            let mut points = hypercubic(window, spacing, periodic)?;
            let edges = window.edges();
            for p in &mut points {
                let shift = uniform_ball(&mut rng, dim, jitter);
                for k in 0..dim {
                    let mut v = p[k] + shift[k];
                    if periodic {
                        v = window.lo[k] + (v - window.lo[k]).rem_euclid(edges[k]);
                    } else {
                        v = v.clamp(window.lo[k], window.hi[k]);
                    }
                    p[k] = v;
                }
            }
            let r = 0.5 * (spacing - 2.0 * jitter) * (1.0 - SLACK);
            let big_r = 0.75 * spacing * (dim as f64 / 2.0).sqrt() + jitter;
            DeloneSet::new(points, r, big_r, window.clone())?
        }
        Generator::CutAndProject { edge } => {
            check_positive("edge", edge)?;
            if dim != 2 || periodic {
                return Err(Error::InvalidParameter("cut-and-project needs d = 2 and an open window".into()));
            }
            let phason = [rng.random_range(-0.05..0.05) * edge, rng.random_range(-0.05..0.05) * edge];
            let points = ammann_beenker(window, edge, phason);
            measured(points, window, edge)?
        }
        Generator::RandomHardcore { r, big_r } => {
            check_positive("r", r)?;
            if !(big_r > 2.0 * r) {
                return Err(Error::InvalidParameter(format!("random-hardcore needs R > 2r, got r={r}, R={big_r}")));
            }
            let points = hardcore(window, r, periodic, &mut rng)?;
            DeloneSet::new(points, r, big_r, window.clone())?
        }
    };
    let set = set.with_periodic(periodic);
    if let Generator::RandomHardcore { .. } = generator {
        let rep = verify(&set)?;
        if !rep.passed() {
            return Err(Error::GenerationFailed(format!(
                "gap filling reached covering radius {} (R = {})",
                rep.covering_radius, set.big_r
            )));
        }
    }
    Ok(set)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn lattice_counts(window: &Window, spacing: f64, periodic: bool) -> Result<Vec<usize>> {
    window
        .edges()
        .iter()
        .map(|e| {
            let ratio = e / spacing;
            if periodic {
                let n = ratio.round();
                if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "periodic window edge {e} is not a multiple of the spacing {spacing}"
                    )));
                }
                Ok(n as usize)
            } else {
                Ok((ratio + 1e-9).floor() as usize + 1)
            }
        })
        .collect()
}

fn hypercubic(window: &Window, spacing: f64, periodic: bool) -> Result<Vec<Vec<f64>>> {
    let counts = lattice_counts(window, spacing, periodic)?;
    let total: usize = counts.iter().product();
    let dim = window.dim();
    let mut points = Vec::with_capacity(total);
    // first axis slowest, so the output is already lexicographic
    for mut lin in 0..total {
        let mut p = vec![0.0; dim];
        for k in (0..dim).rev() {
            p[k] = window.lo[k] + spacing * (lin % counts[k]) as f64;
            lin /= counts[k];
        }
        points.push(p);
    }
    Ok(points)
}

fn triangular(window: &Window, spacing: f64, periodic: bool) -> Result<Vec<Vec<f64>>> {
    let row = spacing * 3f64.sqrt() / 2.0;
    let edges = window.edges();
    let (nx, ny) = if periodic {
        let nx = (edges[0] / spacing).round();
        let ny = (edges[1] / row).round();
        if (edges[0] / spacing - nx).abs() > 1e-9 || (edges[1] / row - ny).abs() > 1e-9 || ny as usize % 2 != 0 {
            return Err(Error::InvalidParameter(
                "periodic triangular window must hold an integer number of cells and an even number of rows".into(),
            ));
        }
        (nx as usize, ny as usize)
    } else {
        ((edges[0] / spacing + 1e-9).floor() as usize + 1, (edges[1] / row + 1e-9).floor() as usize + 1)
    };
    let mut points = Vec::new();
    for j in 0..ny {
        let offset = if j % 2 == 1 { 0.5 * spacing } else { 0.0 };
        for i in 0..nx {
            let x = window.lo[0] + offset + spacing * i as f64;
            if !periodic && x > window.hi[0] + 1e-12 {
                continue;
            }
            points.push(vec![x, window.lo[1] + row * j as f64]);
        }
    }
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(points)
}

fn uniform_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    if radius == 0.0 {
        return vec![0.0; dim];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

/// Ammann-Beenker vertices: `x = sum n_k e_k` with internal coordinate
/// `sum n_k e_k^perp` inside the octagonal acceptance window.
fn ammann_beenker(window: &Window, edge: f64, phason: [f64; 2]) -> Vec<Vec<f64>> {
    use std::f64::consts::FRAC_PI_4;
    let par: Vec<[f64; 2]> = (0..4)
        .map(|k| {
            let a = k as f64 * FRAC_PI_4;
            [edge * a.cos(), edge * a.sin()]
        })
        .collect();
    let perp: Vec<[f64; 2]> = (0..4)
        .map(|k| {
            let a = 3.0 * k as f64 * FRAC_PI_4;
            [edge * a.cos(), edge * a.sin()]
        })
        .collect();
    // octagon = zonotope of the perpendicular generators, centred at the origin
    let normals: Vec<[f64; 2]> = perp.iter().map(|g| [-g[1], g[0]]).collect();
    let half_widths: Vec<f64> = normals
        .iter()
        .map(|u| 0.5 * perp.iter().map(|g| (g[0] * u[0] + g[1] * u[1]).abs()).sum::<f64>())
        .collect();
    let accept = |y: [f64; 2]| {
        normals
            .iter()
            .zip(&half_widths)
            .all(|(u, h)| (y[0] * u[0] + y[1] * u[1]).abs() <= *h)
    };
    // n_k = (<e_k, x> + <e_k^perp, y>) / (2 edge^2); bound it over window x octagon
    let corners: Vec<[f64; 2]> = (0..4)
        .map(|c| {
            [
                if c & 1 == 0 { window.lo[0] } else { window.hi[0] },
                if c & 2 == 0 { window.lo[1] } else { window.hi[1] },
            ]
        })
        .collect();
    let ranges: Vec<(i64, i64)> = (0..4)
        .map(|k| {
            let proj: Vec<f64> = corners.iter().map(|c| c[0] * par[k][0] + c[1] * par[k][1]).collect();
            let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * edge * edge;
            let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * edge * edge;
            (
                (lo / (2.0 * edge * edge)).floor() as i64,
                (hi / (2.0 * edge * edge)).ceil() as i64,
            )
        })
        .collect();
    let mut points = Vec::new();
    for n0 in ranges[0].0..=ranges[0].1 {
        for n1 in ranges[1].0..=ranges[1].1 {
            for n2 in ranges[2].0..=ranges[2].1 {
                for n3 in ranges[3].0..=ranges[3].1 {
                    let n = [n0 as f64, n1 as f64, n2 as f64, n3 as f64];
                    let x = [
                        (0..4).map(|k| n[k] * par[k][0]).sum::<f64>(),
                        (0..4).map(|k| n[k] * par[k][1]).sum::<f64>(),
                    ];
                    if !window.contains(&x) {
                        continue;
                    }
                    let y = [
                        (0..4).map(|k| n[k] * perp[k][0]).sum::<f64>() + phason[0],
                        (0..4).map(|k| n[k] * perp[k][1]).sum::<f64>() + phason[1],
                    ];
                    if accept(y) {
                        points.push(x.to_vec());
                    }
                }
            }
        }
    }
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    points
}

/// Fixes (r, R) from the generated points themselves.
fn measured(points: Vec<Vec<f64>>, window: &Window, edge: f64) -> Result<DeloneSet> {
    if points.len() < 2 {
        return Err(Error::GenerationFailed("window holds fewer than two points".into()));
    }
    let trial = DeloneSet::new(points, 0.25 * edge, 1.5 * edge, window.clone())?;
    let r = 0.5 * trial.min_pair_distance() * (1.0 - SLACK);
    let probe = DeloneSet { r, ..trial };
    let rep = verify(&probe)?;
    let big_r = (rep.covering_radius * 1.05).max(rep.covering_radius + r / 4.0);
    let set = DeloneSet { big_r, ..probe };
    let check = verify(&set)?;
    if !check.passed() {
        return Err(Error::GenerationFailed(format!(
            "measured covering radius {} exceeds R = {}",
            check.covering_radius, set.big_r
        )));
    }
    Ok(set)
}

/// Insertion-only hash grid with cells of the exclusion size.
struct DynamicGrid {
    cell: f64,
    lo: Vec<f64>,
    counts: Vec<i64>,
    period: Option<Vec<f64>>,
    cells: std::collections::HashMap<Vec<i64>, Vec<usize>>,
    points: Vec<Vec<f64>>,
}

impl DynamicGrid {
    fn new(window: &Window, cell: f64, periodic: bool) -> Self {
        let edges = window.edges();
        let counts = edges.iter().map(|e| ((e / cell).floor() as i64).max(1)).collect();
        Self {
            cell,
            lo: window.lo.clone(),
            counts,
            period: periodic.then_some(edges),
            cells: Default::default(),
            points: Vec::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(&self.lo)
            .zip(&self.counts)
            .map(|((v, l), n)| {
                let raw = ((v - l) / self.cell).floor() as i64;
                if self.period.is_some() { raw.rem_euclid(*n) } else { raw }
            })
            .collect()
    }

    /// True if some stored point lies closer than `self.cell` to `x`.
    fn occupied(&self, x: &[f64]) -> bool {
        let home = self.key(x);
        let dim = home.len();
        let total = 3usize.pow(dim as u32);
        for mut lin in 0..total {
            let mut key = home.clone();
            for (k, v) in key.iter_mut().enumerate() {
                *v += (lin % 3) as i64 - 1;
                lin /= 3;
                if self.period.is_some() {
                    *v = v.rem_euclid(self.counts[k]);
                }
            }
            if let Some(list) = self.cells.get(&key) {
                if list
                    .iter()
                    .any(|&i| super::distance(&self.points[i], x, self.period.as_deref()) < self.cell)
                {
                    return true;
                }
            }
        }
        false
    }

    fn insert(&mut self, x: Vec<f64>) {
        let key = self.key(&x);
        self.cells.entry(key).or_default().push(self.points.len());
        self.points.push(x);
    }
}

fn hardcore(window: &Window, r: f64, periodic: bool, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    let dim = window.dim();
    let edges = window.edges();
    let exclusion = 2.0 * r;
    let mut grid = DynamicGrid::new(window, exclusion, periodic);
    let ball = std::f64::consts::PI.powf(dim as f64 / 2.0) * r.powi(dim as i32);
    let budget = (30.0 * window.volume() / ball).ceil() as usize;
    for _ in 0..budget {
        let x: Vec<f64> = (0..dim)
            .map(|k| window.lo[k] + rng.random_range(0.0..1.0) * edges[k])
            .collect();
        if !grid.occupied(&x) {
            grid.insert(x);
        }
    }
    // gap filling on a probe grid of pitch r/4, visited in seeded random order
    let pitch = r / 4.0;
    let counts: Vec<usize> = edges
        .iter()
        .map(|e| (e / pitch).ceil() as usize + usize::from(!periodic))
        .collect();
    let steps: Vec<f64> = edges
        .iter()
        .zip(&counts)
        .map(|(e, n)| if periodic { e / *n as f64 } else { e / (n - 1).max(1) as f64 })
        .collect();
    let total: usize = counts.iter().product();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(rng);
    for lin in order {
        let mut rem = lin;
        let mut x = vec![0.0; dim];
        for k in (0..dim).rev() {
            x[k] = window.lo[k] + steps[k] * (rem % counts[k]) as f64;
            rem /= counts[k];
        }
        if !grid.occupied(&x) {
            grid.insert(x);
        }
    }
    let mut points = grid.points;
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(points)
}
