use serde::{Deserialize, Serialize};

use super::{displacement, distance, verify, DeloneSet, VerificationReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    MatchedPoints,
    PiecewiseConstant,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub set: DeloneSet,
    pub report: VerificationReport,
}

/// Ordered samples `t -> Lambda_t` sharing dimension, (r, R) and window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformationPath {
    pub samples: Vec<PathSample>,
    pub interpolation: Interpolation,
    /// `bijection[i]` is the index in the end set matched to point `i` of the start set.
    pub bijection: Vec<usize>,
    pub max_displacement: f64,
}

impl DeformationPath {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Path with fixed points and no matching requirements; each entry is held
    /// constant until the next one.
    pub fn piecewise_constant(samples: Vec<(f64, DeloneSet)>) -> Result<Self> {
        let samples = samples
            .into_iter()
            .map(|(t, set)| Ok(PathSample { t, report: verify(&set)?, set }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples, interpolation: Interpolation::PiecewiseConstant, bijection: Vec::new(), max_displacement: 0.0 })
    }
}

/// Nearest-neighbour matching from `a` into `b`; must be a bijection.
fn match_points(a: &DeloneSet, b: &DeloneSet) -> Result<(Vec<usize>, f64)> {
    let period = a.period();
    let mut bijection = Vec::with_capacity(a.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    let r = a.r.min(b.r);
    for p in &a.points {
        let (j, d) = b
            .points
            .iter()
            .enumerate()
            .map(|(j, q)| (j, distance(p, q, period.as_deref())))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
            .expect("non-empty");
        if used[j] {
            return Err(Error::NoBijection { displacement: d.max(r), r });
        }
        used[j] = true;
        bijection.push(j);
        worst = worst.max(d);
    }
    Ok((bijection, worst))
}

/// Linear interpolation between matched points of `a` and `b` at `n_samples`
/// equally spaced times. Every sample shares `r' = min(measured)/2` and
/// `R' = max(R_a, R_b) + max displacement`.
pub fn make_path(a: &DeloneSet, b: &DeloneSet, n_samples: usize) -> Result<DeformationPath> {
    if a.dim != b.dim || a.window != b.window || a.periodic != b.periodic {
        return Err(Error::InvalidParameter("path endpoints must share dimension and window".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidParameter("a path needs at least two samples".into()));
    }
    let r = a.r.min(b.r);
    if a.len() != b.len() {
        return Err(Error::NoBijection { displacement: f64::INFINITY, r });
    }
    let (bijection, max_displacement) = match_points(a, b)?;
    if max_displacement >= r {
        return Err(Error::NoBijection { displacement: max_displacement, r });
    }
    let period = a.period();
    let edges = a.window.edges();
    let raw: Vec<(f64, Vec<Vec<f64>>)> = (0..n_samples)
        .map(|k| {
            let t = k as f64 / (n_samples - 1) as f64;
            let points = a
                .points
                .iter()
                .zip(&bijection)
                .map(|(p, &j)| {
                    let q = &b.points[j];
                    if t == 0.0 {
                        return p.clone();
                    }
                    if t == 1.0 {
                        return q.clone();
                    }
                    match period.as_deref() {
                        None => p.iter().zip(q).map(|(x, y)| (1.0 - t) * x + t * y).collect(),
                        Some(_) => {
                            let d = displacement(p, q, period.as_deref());
                            p.iter()
                                .zip(&d)
                                .enumerate()
                                .map(|(k, (x, dx))| {
                                    let v = x + t * dx;
                                    a.window.lo[k] + (v - a.window.lo[k]).rem_euclid(edges[k])
                                })
                                .collect()
                        }
                    }
                })
                .collect();
            (t, points)
        })
        .collect();

    let measured_r = raw
        .iter()
        .map(|(_, pts)| {
            let probe = DeloneSet { points: pts.clone(), ..a.clone() };
            0.5 * probe.min_pair_distance()
        })
        .fold(f64::INFINITY, f64::min);
    let shared_r = r.min(measured_r * (1.0 - 1e-12));
    let shared_big_r = a.big_r.max(b.big_r) + max_displacement;
    let mut samples = Vec::with_capacity(n_samples);
    for (t, points) in raw {
        let set = DeloneSet { points, r: shared_r, big_r: shared_big_r, ..a.clone() };
        let report = verify(&set)?;
        if !report.passed() {
            return Err(Error::DensityViolated { t });
        }
        samples.push(PathSample { t, set, report });
    }
    Ok(DeformationPath { samples, interpolation: Interpolation::MatchedPoints, bijection, max_displacement })
}
