//! Finite-window (r,R)-Delone point patterns.
//!
//! An infinite Delone set is only ever seen through an axis-aligned window.
//! A set may be flagged `periodic`, in which case the window is a fundamental
//! domain of a torus and all distances use the minimal-image convention.

mod generate;
mod index;
pub mod io;
mod path;

pub use generate::{generate, Generator};
pub use index::CellIndex;
pub use path::{make_path, DeformationPath, Interpolation, PathSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_1,hi_1] x ... x [lo_d,hi_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidParameter("window bounds must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParameter(format!("empty window {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn edges(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn volume(&self) -> f64 {
        self.edges().iter().product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Window shrunk by `margin` on every side; `None` if nothing remains.
    pub fn eroded(&self, margin: f64) -> Option<Window> {
        let lo: Vec<f64> = self.lo.iter().map(|l| l + margin).collect();
        let hi: Vec<f64> = self.hi.iter().map(|h| h - margin).collect();
        if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            Some(Window { lo, hi })
        } else {
            None
        }
    }

    /// Concentric sub-window whose edges are `fraction` times the original.
    pub fn interior(&self, fraction: f64) -> Window {
        let c = self.center();
        let e = self.edges();
        Window {
            lo: c.iter().zip(&e).map(|(c, e)| c - 0.5 * fraction * e).collect(),
            hi: c.iter().zip(&e).map(|(c, e)| c + 0.5 * fraction * e).collect(),
        }
    }

    /// Half-open membership `lo <= x < hi`, used for counting cells without
    /// double-counting shared faces.
    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v < *h)
    }
}

/// `b - a`, reduced to the minimal image when `period` is given.
pub fn displacement(a: &[f64], b: &[f64], period: Option<&[f64]>) -> Vec<f64> {
    match period {
        None => a.iter().zip(b).map(|(x, y)| y - x).collect(),
        Some(p) => a
            .iter()
            .zip(b)
            .zip(p)
            .map(|((x, y), l)| {
                let d = y - x;
                d - l * (d / l).round()
            })
            .collect(),
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64], period: Option<&[f64]>) -> f64 {
    norm(&displacement(a, b, period))
}

/// A finite (r,R)-Delone pattern restricted to a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeloneSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Uniform-discreteness radius: pairwise distances are at least `2r`.
    pub r: f64,
    /// Relative-density radius: every ball of radius `R` in the eroded window meets the set.
    #[serde(rename = "R")]
    pub big_r: f64,
    pub window: Window,
    /// Window is a torus fundamental domain.
    #[serde(default)]
    pub periodic: bool,
}

/// Result of checking both defining conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub min_pair_dist: f64,
    pub covering_radius: f64,
    pub is_r_discrete: bool,
    #[serde(rename = "is_R_dense")]
    pub is_big_r_dense: bool,
    /// Pitch of the probe grid used for the covering radius estimate.
    pub probe_pitch: f64,
    pub probes: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.is_r_discrete && self.is_big_r_dense
    }
}

impl DeloneSet {
    pub fn new(points: Vec<Vec<f64>>, r: f64, big_r: f64, window: Window) -> Result<Self> {
        let dim = window.dim();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter("point dimension does not match window".into()));
        }
        if !(r > 0.0 && r < big_r) {
            return Err(Error::InvalidParameter(format!("need 0 < r < R, got r={r}, R={big_r}")));
        }
        Ok(Self { dim, points, r, big_r, window, periodic: false })
    }

    pub fn with_periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn period(&self) -> Option<Vec<f64>> {
        self.periodic.then(|| self.window.edges())
    }

    /// Points sorted lexicographically; the canonical site order.
    pub fn sorted(&self) -> DeloneSet {
        let mut out = self.clone();
        out.points.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        out
    }

    /// Copy translated by `-shift` (the pattern seen from `shift`).
    pub fn recentered(&self, shift: &[f64]) -> DeloneSet {
        let mut out = self.clone();
        for p in &mut out.points {
            for (x, s) in p.iter_mut().zip(shift) {
                *x -= s;
            }
        }
        for (l, s) in out.window.lo.iter_mut().zip(shift) {
            *l -= s;
        }
        for (h, s) in out.window.hi.iter_mut().zip(shift) {
            *h -= s;
        }
        out
    }

    pub fn min_pair_distance(&self) -> f64 {
        if self.points.len() < 2 {
            return f64::INFINITY;
        }
        let period = self.period();
        let cell = self.r.max(1e-12) * 2.0;
        let index = CellIndex::new(&self.points, &self.window, cell, period.as_deref());
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            if let Some((_, d)) = index.nearest_excluding(p, Some(i)) {
                best = best.min(d);
            }
        }
        best
    }
}

/// Checks r-discreteness exactly and R-density on a probe grid of pitch `r/4`
/// covering the eroded window (the whole torus for periodic sets).
pub fn verify(set: &DeloneSet) -> Result<VerificationReport> {
    if set.points.is_empty() {
        return Err(Error::InvalidParameter("point set is empty".into()));
    }
    let region = if set.periodic {
        set.window.clone()
    } else {
        set.window
            .eroded(set.big_r)
            .ok_or(Error::EmptyWindow { relative_density: set.big_r })?
    };
    let min_pair_dist = set.min_pair_distance();
    let pitch = set.r / 4.0;
    let period = set.period();
    let index = CellIndex::new(&set.points, &set.window, set.big_r.max(set.r), period.as_deref());

    let counts: Vec<usize> = region
        .edges()
        .iter()
        .map(|e| (e / pitch).ceil() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    let mut covering: f64 = 0.0;
    let mut probe = vec![0.0; set.dim];
    let mut idx = vec![0usize; set.dim];
    let edges = region.edges();
    let steps: Vec<f64> = (0..set.dim)
        .map(|k| if counts[k] > 1 { edges[k] / (counts[k] - 1) as f64 } else { 0.0 })
        .collect();
    for _ in 0..total {
        for k in 0..set.dim {
            probe[k] = region.lo[k] + steps[k] * idx[k] as f64;
        }
        let d = index.nearest_excluding(&probe, None).map(|(_, d)| d).unwrap_or(f64::INFINITY);
        covering = covering.max(d);
        for k in 0..set.dim {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(VerificationReport {
        min_pair_dist,
        covering_radius: covering,
        is_r_discrete: min_pair_dist >= 2.0 * set.r,
        is_big_r_dense: covering < set.big_r,
        probe_pitch: pitch,
        probes: total,
    })
}

/// Two-sided Hausdorff distance between the restrictions of `a` and `b` to
/// the closed ball `B(0; radius)`.
pub fn hausdorff_window_distance(a: &DeloneSet, b: &DeloneSet, radius: f64) -> Result<f64> {
    let origin = vec![0.0; a.dim];
    hausdorff_ball_distance(a, b, &origin, radius)
}

/// As [`hausdorff_window_distance`] with the ball centred at `center`.
pub fn hausdorff_ball_distance(a: &DeloneSet, b: &DeloneSet, center: &[f64], radius: f64) -> Result<f64> {
    if a.dim != b.dim || center.len() != a.dim {
        return Err(Error::InvalidParameter("dimension mismatch".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("ball radius must be positive".into()));
    }
    let inside = |s: &DeloneSet| -> Vec<Vec<f64>> {
        s.points
            .iter()
            .filter(|p| distance(center, p, None) <= radius)
            .cloned()
            .collect()
    };
    let (pa, pb) = (inside(a), inside(b));
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::EmptyIntersection { radius });
    }
    let one_sided = |from: &[Vec<f64>], to: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|x| to.iter().map(|y| distance(x, y, None)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(&pa, &pb).max(one_sided(&pb, &pa)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> DeloneSet {
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                pts.push(vec![i as f64, j as f64]);
            }
        }
        DeloneSet::new(pts, 0.5, 0.75, Window::cube(2, 0.0, n as f64)).unwrap()
    }

    #[test]
    fn square_lattice_verifies() {
        let rep = verify(&square(8)).unwrap();
        assert_eq!(rep.min_pair_dist, 1.0);
        assert!((rep.covering_radius - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(rep.is_r_discrete && rep.is_big_r_dense);
    }

    #[test]
    fn close_pair_is_not_discrete() {
        let s = DeloneSet::new(vec![vec![0.0, 0.0], vec![0.6, 0.0]], 0.5, 0.75, Window::cube(2, -5.0, 5.0)).unwrap();
        let rep = verify(&s).unwrap();
        assert!(!rep.is_r_discrete);
    }

    #[test]
    fn single_point_is_not_dense() {
        let s = DeloneSet::new(vec![vec![5.0, 5.0]], 0.25, 1.0, Window::cube(2, 0.0, 10.0)).unwrap();
        let rep = verify(&s).unwrap();
        assert!(!rep.is_big_r_dense);
        assert!(rep.is_r_discrete);
    }

    #[test]
    fn eroded_window_can_be_empty() {
        let s = DeloneSet::new(vec![vec![0.5, 0.5]], 0.25, 1.0, Window::cube(2, 0.0, 1.0)).unwrap();
        assert!(matches!(verify(&s), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn hausdorff_of_singletons() {
        let w = Window::cube(2, -2.0, 2.0);
        let a = DeloneSet::new(vec![vec![0.0, 0.0]], 0.1, 1.0, w.clone()).unwrap();
        let b = DeloneSet::new(vec![vec![0.3, 0.0]], 0.1, 1.0, w).unwrap();
        assert!((hausdorff_window_distance(&a, &b, 1.0).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(hausdorff_window_distance(&a, &a, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hausdorff_needs_points_in_ball() {
        let w = Window::cube(2, -20.0, 20.0);
        let a = DeloneSet::new(vec![vec![10.0, 0.0]], 0.1, 1.0, w.clone()).unwrap();
        assert!(matches!(
            hausdorff_window_distance(&a, &a, 1.0),
            Err(Error::EmptyIntersection { .. })
        ));
    }

    #[test]
    fn minimal_image_displacement() {
        let d = displacement(&[0.2, 0.0], &[9.9, 0.0], Some(&[10.0, 10.0]));
        assert!((d[0] + 0.3).abs() < 1e-12);
    }
}
