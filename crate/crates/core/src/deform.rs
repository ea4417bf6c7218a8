//! Gapped deformations of point sets and fields: gap tracking, Chern
//! constancy and resolvent continuity along sampled paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chern::{chern_top, DEFAULT_FRACTIONS};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::magnetics::MagneticCocycle;
use crate::model::ModelSpec;
use crate::operators::{
    assemble_continuum, diagonal_sup_difference, resolvent_bound, resolvent_distance_bound_check, AtomicPotential, Boundary,
    GridBasis, KernelOperator, ResolventBoundReport,
};
use crate::pointsets::{make_path, DeformationPath, DeloneSet};
use crate::spectral::{detect_gaps, eig, projection_from_eigen, Interval, ProjectionOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingOptions {
    /// Gap at `t = 0`, counted among gaps of width at least `min_gap`.
    #[serde(default)]
    pub gap_index: usize,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Spectral parameter `[re, im]` of the per-step resolvent checks; none skips them.
    #[serde(default)]
    pub resolvent_z: Option<[f64; 2]>,
}

fn default_min_gap() -> f64 {
    0.3
}

fn default_fractions() -> Vec<f64> {
    DEFAULT_FRACTIONS.to_vec()
}

fn default_tolerance() -> f64 {
    0.05
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self { gap_index: 0, min_gap: default_min_gap(), fractions: default_fractions(), tolerance: default_tolerance(), resolvent_z: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub gap: (f64, f64),
    pub midpoint: f64,
    pub margin: f64,
    pub rank: usize,
    pub chern: f64,
    pub imaginary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub t0: f64,
    pub t1: f64,
    pub perturbation: f64,
    #[serde(flatten)]
    pub bound: ResolventBoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    Constant,
    GapClosed { t: f64 },
    Drift { max_drift: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GappedPathReport {
    /// Samples up to the last one with an open gap.
    pub samples: Vec<PathPoint>,
    pub resolvent_checks: Vec<StepCheck>,
    pub verdict: Verdict,
    pub max_drift: f64,
    pub tolerance: f64,
    pub note: String,
}

impl GappedPathReport {
    /// `Err(GapClosed)` for a closed gap, the report otherwise.
    pub fn into_result(self) -> Result<Self> {
        match self.verdict {
            Verdict::GapClosed { t } => Err(Error::GapClosed { t }),
            _ => Ok(self),
        }
    }
}

const NOTE: &str = "gap checked on the sampled window only, not on the whole hull";

/// Follows the gap through `hamiltonians` by its midpoint and computes the
/// Chern number of the projection below it at every sample.
fn track(hamiltonians: &[(f64, KernelOperator)], options: &TrackingOptions) -> Result<(Vec<PathPoint>, Option<f64>)> {
    let spectra: Vec<(Vec<f64>, CMat)> = hamiltonians.par_iter().map(|(_, h)| eig(h)).collect::<Result<_>>()?;
    let t0 = hamiltonians.first().map(|h| h.0).unwrap_or(0.0);
    let first = detect_gaps(&spectra.first().ok_or(Error::InvalidParameter("empty path".into()))?.0, options.min_gap);
    let mut mid = first.get(options.gap_index).ok_or(Error::GapClosed { t: t0 })?.midpoint;
    let mut midpoints = Vec::new();
    let mut closed = None;
    for ((t, _), (values, _)) in hamiltonians.iter().zip(&spectra) {
        match detect_gaps(values, options.min_gap).into_iter().find(|g| g.lo < mid && mid < g.hi) {
            Some(g) => {
                mid = g.midpoint;
                midpoints.push(mid);
            }
            None => {
                closed = Some(*t);
                break;
            }
        }
    }
    let samples = midpoints
        .par_iter()
        .enumerate()
        .map(|(k, &mid)| {
            let (t, h) = &hamiltonians[k];
            let (values, vectors) = &spectra[k];
            let p = projection_from_eigen(h, values, vectors, Interval::new(values[0] - 1.0, mid), &ProjectionOptions::default())?;
            let c = chern_top(&p, &options.fractions, options.tolerance)?;
            let below = values.iter().filter(|v| **v < mid).cloned().fold(f64::NEG_INFINITY, f64::max);
            let above = values.iter().filter(|v| **v >= mid).cloned().fold(f64::INFINITY, f64::min);
            Ok(PathPoint { t: *t, gap: (below, above), midpoint: mid, margin: p.gap_margin, rank: p.rank, chern: c.value, imaginary: c.imaginary })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((samples, closed))
}

fn report(samples: Vec<PathPoint>, closed: Option<f64>, resolvent_checks: Vec<StepCheck>, tolerance: f64) -> GappedPathReport {
    let c0 = samples.first().map(|s| s.chern).unwrap_or(0.0);
    let max_drift = samples.iter().map(|s| (s.chern - c0).abs()).fold(0.0, f64::max);
    let verdict = match closed {
        Some(t) => Verdict::GapClosed { t },
        None if max_drift < tolerance && samples.iter().all(|s| s.margin > 0.0) => Verdict::Constant,
        None => Verdict::Drift { max_drift },
    };
    GappedPathReport { samples, resolvent_checks, verdict, max_drift, tolerance, note: NOTE.into() }
}

fn step_checks(matrices: &[(f64, CMat)], z: c64, count: usize) -> Vec<StepCheck> {
    (1..count.min(matrices.len()))
        .into_par_iter()
        .map(|k| {
            let (t0, a) = &matrices[k - 1];
            let (t1, b) = &matrices[k];
            let diff = a - b;
            let perturbation = if linalg::max_abs(&diff) == 0.0 { 0.0 } else { linalg::spectral_norm(&diff) };
            StepCheck { t0: *t0, t1: *t1, perturbation, bound: resolvent_bound(a, b, z, perturbation) }
        })
        .collect()
}

/// Index of each point of `set` in the canonical (sorted) site order.
fn canonical_positions(set: &DeloneSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&i, &j| {
        set.points[i]
            .iter()
            .zip(&set.points[j])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut inverse = vec![0; order.len()];
    for (k, &i) in order.iter().enumerate() {
        inverse[i] = k;
    }
    inverse
}

/// Matrix of `h` with rows and columns in path point order.
fn in_path_order(h: &KernelOperator, set: &DeloneSet) -> CMat {
    let pos = canonical_positions(set);
    let m = h.len() / set.len().max(1);
    let index = |i: usize| pos[i / m] * m + i % m;
    CMat::from_fn(h.len(), h.len(), |i, j| h.matrix[(index(i), index(j))])
}

/// Deformation of the point set at fixed field.
pub fn run_lattice_deformation(path: &DeformationPath, model: &ModelSpec, options: &TrackingOptions) -> Result<GappedPathReport> {
    let c = model.cocycle()?;
    let hamiltonians: Vec<(f64, KernelOperator)> =
        path.samples.par_iter().map(|s| Ok((s.t, model.assemble_on(&s.set, &c)?))).collect::<Result<_>>()?;
    let (samples, closed) = track(&hamiltonians, options)?;
    let checks = match options.resolvent_z {
        Some([re, im]) => {
            let matrices: Vec<(f64, CMat)> =
                hamiltonians.iter().zip(&path.samples).map(|((t, h), s)| (*t, in_path_order(h, &s.set))).collect();
            step_checks(&matrices, c64::new(re, im), samples.len())
        }
        None => Vec::new(),
    };
    Ok(report(samples, closed, checks, options.tolerance))
}

/// Deformation of the field at a fixed point set; `thetas` pairs each time
/// with its cocycle.
pub fn run_field_deformation(set: &DeloneSet, thetas: &[(f64, MagneticCocycle)], model: &ModelSpec, options: &TrackingOptions) -> Result<GappedPathReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("field path is empty".into()));
    }
    let hamiltonians: Vec<(f64, KernelOperator)> =
        thetas.par_iter().map(|(t, c)| Ok((*t, model.assemble_on(set, c)?))).collect::<Result<_>>()?;
    let (samples, closed) = track(&hamiltonians, options)?;
    let checks = match options.resolvent_z {
        Some([re, im]) => {
            let matrices: Vec<(f64, CMat)> = hamiltonians.iter().map(|(t, h)| (*t, h.matrix.clone())).collect();
            step_checks(&matrices, c64::new(re, im), samples.len())
        }
        None => Vec::new(),
    };
    Ok(report(samples, closed, checks, options.tolerance))
}

/// Planar flux path `flux_k = (start + k * step) / denominator`, for
/// `k = 0..samples`, with `t` running over `[0, 1]`.
pub fn flux_path(start: i64, step: i64, samples: usize, denominator: i64) -> Vec<(f64, MagneticCocycle)> {
    (0..samples)
        .map(|k| {
            let t = if samples > 1 { k as f64 / (samples - 1) as f64 } else { 0.0 };
            (t, MagneticCocycle::flux((start + k as i64 * step) as f64 / denominator as f64))
        })
        .collect()
}

/// Copy of `set` with every point displaced uniformly inside a ball of
/// radius `jitter`, wrapping on a torus.
pub fn jittered(set: &DeloneSet, jitter: f64, seed: u64) -> Result<DeloneSet> {
    if !(jitter >= 0.0 && jitter < set.r) {
        return Err(Error::InvalidParameter(format!("jitter {jitter} must lie in [0, r = {})", set.r)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = set.window.edges();
    let points = set
        .points
        .iter()
        .map(|p| {
            let offset = loop {
                let v: Vec<f64> = (0..set.dim).map(|_| jitter * (2.0 * rng.random::<f64>() - 1.0)).collect();
                if v.iter().map(|x| x * x).sum::<f64>() <= jitter * jitter {
                    break v;
                }
            };
            p.iter()
                .zip(&offset)
                .enumerate()
                .map(|(k, (x, dx))| {
                    let y = x + dx;
                    if set.periodic {
                        set.window.lo[k] + (y - set.window.lo[k]).rem_euclid(edges[k])
                    } else {
                        y
                    }
                })
                .collect()
        })
        .collect();
    Ok(DeloneSet { points, r: set.r - jitter, big_r: set.big_r + jitter, ..set.clone() })
}

/// Straight path from `set` to a jittered copy of it.
pub fn jitter_path(set: &DeloneSet, jitter: f64, samples: usize, seed: u64) -> Result<DeformationPath> {
    make_path(set, &jittered(set, jitter, seed)?, samples)
}

/// Continuum Hamiltonian `-(grad - iA)^2 + V_L` on a grid over the window of each sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumSpec {
    pub potential: AtomicPotential,
    pub pitch: f64,
    #[serde(default)]
    pub flux: f64,
}

impl ContinuumSpec {
    fn operator(&self, set: &DeloneSet) -> Result<KernelOperator> {
        let boundary = if set.periodic { Boundary::Periodic } else { Boundary::Open };
        let grid = GridBasis::new(set.window.clone(), self.pitch, boundary)?;
        assemble_continuum(set, &self.potential, &MagneticCocycle::flux(self.flux), &grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub checks: Vec<StepCheck>,
    pub median_lhs: f64,
    pub all_hold: bool,
}

/// Resolvent bound on every consecutive pair of path samples.
pub fn resolvent_continuity_sweep(path: &DeformationPath, z: c64, spec: &ContinuumSpec) -> Result<SweepReport> {
    let ops: Vec<(f64, KernelOperator)> = path.samples.par_iter().map(|s| Ok((s.t, spec.operator(&s.set)?))).collect::<Result<_>>()?;
    let checks = (1..ops.len())
        .into_par_iter()
        .map(|k| {
            let (t0, a) = &ops[k - 1];
            let (t1, b) = &ops[k];
            let perturbation = diagonal_sup_difference(a, b);
            Ok(StepCheck { t0: *t0, t1: *t1, perturbation, bound: resolvent_distance_bound_check(a, b, z, perturbation)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lhs: Vec<f64> = checks.iter().map(|c| c.bound.lhs).collect();
    lhs.sort_by(f64::total_cmp);
    let median_lhs = match lhs.len() {
        0 => 0.0,
        n if n % 2 == 1 => lhs[n / 2],
        n => 0.5 * (lhs[n / 2 - 1] + lhs[n / 2]),
    };
    let all_hold = checks.iter().all(|c| c.bound.holds);
    Ok(SweepReport { checks, median_lhs, all_hold })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalvingReport {
    pub coarse: SweepReport,
    pub fine: SweepReport,
    /// `median(fine) / median(coarse)`; first-order continuity gives about 1/2.
    pub ratio: f64,
}

/// Sweeps between `a` and `b` with `samples` and `2 samples - 1` points.
pub fn step_halving(a: &DeloneSet, b: &DeloneSet, samples: usize, z: c64, spec: &ContinuumSpec) -> Result<HalvingReport> {
    let coarse = resolvent_continuity_sweep(&make_path(a, b, samples)?, z, spec)?;
    let fine = resolvent_continuity_sweep(&make_path(a, b, 2 * samples - 1)?, z, spec)?;
    let ratio = if coarse.median_lhs == 0.0 { 0.0 } else { fine.median_lhs / coarse.median_lhs };
    Ok(HalvingReport { coarse, fine, ratio })
}

#[cfg(test)]
mod tests;
