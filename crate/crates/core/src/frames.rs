//! Families of projected magnetic translates: frame operators, Parseval
//! normalization, Lowdin orthonormalization and localization diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::magnetics::MagneticCocycle;
use crate::operators::Basis;
use crate::pointsets::{displacement, norm, DeloneSet, Window};
use crate::spectral::SpectralProjection;

/// Radial profile of a seed function centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeedProfile {
    /// `exp(-1/(1 - |x/width|^2))`, supported in the closed ball of radius `width`.
    Bump { width: f64 },
    /// Gaussian whose squared modulus has standard deviation `width` per axis.
    Gaussian { width: f64 },
    /// `(x_1 + i x_2)` times the Gaussian.
    GaussianP { width: f64 },
}

impl SeedProfile {
    pub fn width(&self) -> f64 {
        match *self {
            SeedProfile::Bump { width } | SeedProfile::Gaussian { width } | SeedProfile::GaussianP { width } => width,
        }
    }

    pub fn eval(&self, s: &[f64]) -> c64 {
        let r2: f64 = s.iter().map(|x| x * x).sum();
        match *self {
            SeedProfile::Bump { width } => {
                let u = r2 / (width * width);
                if u >= 1.0 {
                    ZERO
                } else {
                    c64::new((-1.0 / (1.0 - u)).exp(), 0.0)
                }
            }
            SeedProfile::Gaussian { width } => c64::new((-r2 / (4.0 * width * width)).exp(), 0.0),
            SeedProfile::GaussianP { width } => {
                let g = (-r2 / (4.0 * width * width)).exp();
                c64::new(s[0], s.get(1).copied().unwrap_or(0.0)) * g
            }
        }
    }
}

/// `w^(y)(x) = exp(-i <x, theta y>/2) w(x - y)` on a basis, in orbital
/// `orbital`, normalized to unit norm. On a torus the value at `x` is taken
/// from the image of `x` nearest to `y`.
pub fn seed_vector(profile: &SeedProfile, center: &[f64], c: &MagneticCocycle, basis: &Basis, orbital: usize) -> Result<Vec<c64>> {
    let period = basis.period();
    let orbitals = match basis {
        Basis::Sites(s) => s.orbitals,
        Basis::Grid(_) => 1,
    };
    if orbital >= orbitals {
        return Err(Error::InvalidParameter(format!("orbital {orbital} out of range")));
    }
    let mut v = vec![ZERO; basis.len()];
    for (i, slot) in v.iter_mut().enumerate() {
        if i % orbitals != orbital {
            continue;
        }
        let x = basis.position(i);
        let d = displacement(center, &x, period.as_deref());
        let w = profile.eval(&d);
        if w == ZERO {
            continue;
        }
        let image: Vec<f64> = center.iter().zip(&d).map(|(a, b)| a + b).collect();
        let mut value = c.phase(&image, center, 0.5) * w;
        let wrap: Vec<f64> = image.iter().zip(&x).map(|(a, b)| a - b).collect();
        if wrap.iter().any(|a| a.abs() > 1e-9) {
            value /= c.torus_factor(&x, &wrap);
        }
        *slot = value;
    }
    let n = linalg::norm(&v);
    if n == 0.0 {
        return Err(Error::InvalidParameter(format!("seed at {center:?} vanishes on the basis")));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(v)
}

/// Normalized, even C-infinity bump of radius `width <= r/2` centred at a
/// point of the pattern.
pub fn make_bump_seed(set: &DeloneSet, center: &[f64], width: f64, basis: &Basis) -> Result<Vec<c64>> {
    if width > 0.5 * set.r * (1.0 + 1e-12) {
        return Err(Error::WidthTooLarge { width, limit: 0.5 * set.r });
    }
    let period = set.period();
    if !set.points.iter().any(|p| crate::pointsets::distance(p, center, period.as_deref()) < 1e-9) {
        return Err(Error::InvalidParameter(format!("bump centre {center:?} is not a point of the pattern")));
    }
    seed_vector(&SeedProfile::Bump { width }, center, &MagneticCocycle::zero(set.dim), basis, 0)
}

/// One seed of a family: a profile placed in one orbital.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub profile: SeedProfile,
    #[serde(default)]
    pub orbital: usize,
}

/// Family of vectors `P U_y w_j` with labels.
#[derive(Clone, Debug)]
pub struct Family {
    /// Projected vectors, one column each.
    pub vectors: CMat,
    pub seeds: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
}

impl Family {
    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Points of `set` nearest to the nodes of a coarse grid of spacing `cell`
/// anchored at the window corner; `cell = [1, 1]` on the unit lattice keeps
/// every site. Only nodes inside the window eroded by `margin` are used.
pub fn coarse_centers(set: &DeloneSet, cell: &[f64], margin: f64) -> Result<Vec<Vec<f64>>> {
    let w = if set.periodic { Some(set.window.clone()) } else { set.window.eroded(margin) };
    let w = w.ok_or(Error::EmptyWindow { relative_density: margin })?;
    let counts: Vec<usize> = set
        .window
        .edges()
        .iter()
        .zip(cell)
        .map(|(e, c)| ((e / c) - 1e-9).ceil().max(1.0) as usize)
        .collect();
    let total: usize = counts.iter().product();
    let period = set.period();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut lin in 0..total {
        let node: Vec<f64> = (0..set.dim)
            .map(|k| {
                let i = lin % counts[k];
                lin /= counts[k];
                set.window.lo[k] + i as f64 * cell[k]
            })
            .collect();
        let best = set
            .points
            .iter()
            .min_by(|a, b| {
                crate::pointsets::distance(a, &node, period.as_deref())
                    .total_cmp(&crate::pointsets::distance(b, &node, period.as_deref()))
            })
            .expect("non-empty pattern");
        if !set.periodic && !w.contains(best) {
            continue;
        }
        if !out.iter().any(|p| p == best) {
            out.push(best.clone());
        }
    }
    Ok(out)
}

/// `{P U_y w_j}` over seeds `j` and centres `y`.
pub fn translate_family(seeds: &[Seed], centers: &[Vec<f64>], c: &MagneticCocycle, p: &SpectralProjection) -> Result<Family> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("a family needs at least one seed".into()));
    }
    let labels: Vec<(usize, &Vec<f64>)> = centers.iter().flat_map(|y| (0..seeds.len()).map(move |j| (j, y))).collect();
    let raw: Vec<Vec<c64>> = labels
        .par_iter()
        .map(|(j, y)| seed_vector(&seeds[*j].profile, y, c, &p.basis, seeds[*j].orbital))
        .collect::<Result<_>>()?;
    let raw = linalg::from_columns(p.basis.len(), &raw);
    Ok(Family {
        vectors: &p.matrix * raw,
        seeds: labels.iter().map(|(j, _)| *j).collect(),
        centers: labels.iter().map(|(_, y)| (*y).clone()).collect(),
    })
}

/// Frame operator `S = C C^dagger` on `range(P)`, where `C = V^dagger F`.
#[derive(Clone, Debug)]
pub struct FrameOperator {
    pub s: CMat,
    pub coefficients: CMat,
    pub lower: f64,
    pub upper: f64,
}

pub fn frame_operator(family: &CMat, p: &SpectralProjection) -> Result<FrameOperator> {
    if p.rank == 0 {
        return Err(Error::RankZero);
    }
    let coefficients = p.range.adjoint() * family;
    let mut s = &coefficients * coefficients.adjoint();
    linalg::symmetrize(&mut s);
    let values = linalg::eigvalsh(&s);
    Ok(FrameOperator { s, coefficients, lower: values[0], upper: *values.last().unwrap() })
}

#[derive(Clone, Debug)]
pub struct TranslateFrame {
    /// Normalized family, one column per member.
    pub vectors: CMat,
    pub seeds: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Frame bounds of the family before normalization.
    pub bounds: (f64, f64),
    /// Extreme eigenvalues of the frame operator after normalization.
    pub parseval_bounds: (f64, f64),
}

/// `g~ = S^{-1/2} P g`.
pub fn parseval_normalize(family: &Family, p: &SpectralProjection) -> Result<TranslateFrame> {
    let op = frame_operator(&family.vectors, p)?;
    if !(op.lower > 1e-8 * op.upper) {
        return Err(Error::NotAFrame { lower: op.lower, upper: op.upper });
    }
    let inv_sqrt = linalg::hermitian_function(&op.s, |x| 1.0 / x.sqrt());
    let vectors = &p.range * (inv_sqrt * &op.coefficients);
    let after = frame_operator(&vectors, p)?;
    Ok(TranslateFrame {
        vectors,
        seeds: family.seeds.clone(),
        centers: family.centers.clone(),
        bounds: (op.lower, op.upper),
        parseval_bounds: (after.lower, after.upper),
    })
}

/// Random probes `P phi` with `phi` supported where `region` holds.
pub fn interior_probes(p: &SpectralProjection, count: usize, seed: u64, region: Option<&Window>) -> Vec<Vec<c64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.basis.len();
    let inside: Vec<bool> = (0..n).map(|i| region.is_none_or(|w| w.contains(&p.basis.position(i)))).collect();
    (0..count)
        .map(|_| {
            let phi: Vec<c64> = inside
                .iter()
                .map(|&keep| {
                    let v = c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    if keep {
                        v
                    } else {
                        ZERO
                    }
                })
                .collect();
            linalg::mat_vec(&p.matrix, &phi)
        })
        .collect()
}

/// Window whose points lie at least `margin` from the boundary; `None` on a torus.
pub fn probe_region(basis: &Basis, margin: f64) -> Result<Option<Window>> {
    if basis.period().is_some() {
        return Ok(None);
    }
    basis.window().eroded(margin).map(Some).ok_or(Error::EmptyWindow { relative_density: margin })
}

/// `sum_g |<g, psi>|^2` for each probe.
pub fn frame_sums(vectors: &CMat, probes: &[Vec<c64>]) -> Vec<f64> {
    probes
        .iter()
        .map(|psi| (0..vectors.ncols()).map(|j| linalg::inner(&linalg::column(vectors, j), psi).norm_sqr()).sum())
        .collect()
}

/// `max |sum |<g, psi>|^2 - ||psi||^2| / ||psi||^2` over probes.
pub fn parseval_residual(vectors: &CMat, probes: &[Vec<c64>]) -> f64 {
    frame_sums(vectors, probes)
        .iter()
        .zip(probes)
        .map(|(s, psi)| {
            let n2 = linalg::norm(psi).powi(2);
            (s - n2).abs() / n2
        })
        .fold(0.0, f64::max)
}

/// `max ||psi - sum_g S^{-1} g <g, psi>|| / ||psi||` over probes.
pub fn dual_reconstruction_residual(family: &CMat, p: &SpectralProjection, probes: &[Vec<c64>]) -> Result<f64> {
    let op = frame_operator(family, p)?;
    let s_inv = linalg::inverse(&op.s);
    let duals = &p.range * (s_inv * &op.coefficients);
    let mut worst = 0.0f64;
    for psi in probes {
        let mut rec = vec![ZERO; psi.len()];
        for j in 0..family.ncols() {
            let g = linalg::column(family, j);
            let a = linalg::inner(&g, psi);
            for (r, d) in rec.iter_mut().zip(duals.col(j).iter()) {
                *r += d * a;
            }
        }
        let diff: Vec<c64> = rec.iter().zip(psi).map(|(a, b)| a - b).collect();
        worst = worst.max(linalg::norm(&diff) / linalg::norm(psi));
    }
    Ok(worst)
}

/// `max |sum g g^dagger - P|`.
pub fn resolution_of_identity_residual(vectors: &CMat, p: &SpectralProjection) -> f64 {
    linalg::max_abs(&(vectors * vectors.adjoint() - &p.matrix))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// `sum (1 + |x - y|^2) |w(x)|^2` of each unit-normalized member.
    pub second_moments: Vec<f64>,
    /// Exponent `a` of the fitted envelope `|w|^2 ~ |x - y|^-a`.
    pub decay_exponents: Vec<f64>,
    /// RMS residual of each log-log fit.
    pub fit_residuals: Vec<f64>,
    pub max_moment: f64,
    pub mean_moment: f64,
}

/// Moments and decay fits of a family; `bin` is the radial bin width.
pub fn localization_report(vectors: &CMat, centers: &[Vec<f64>], basis: &Basis, bin: f64) -> LocalizationReport {
    let positions = basis.positions();
    let period = basis.period();
    let rows: Vec<(f64, f64, f64)> = (0..vectors.ncols())
        .into_par_iter()
        .map(|j| {
            let col = linalg::column(vectors, j);
            let n2: f64 = col.iter().map(|v| v.norm_sqr()).sum();
            let radii: Vec<f64> = positions.iter().map(|x| norm(&displacement(&centers[j], x, period.as_deref()))).collect();
            let moment = if n2 == 0.0 {
                f64::NAN
            } else {
                col.iter().zip(&radii).map(|(v, r)| (1.0 + r * r) * v.norm_sqr()).sum::<f64>() / n2
            };
            let (exponent, residual) = decay_fit(&col, &radii, bin);
            (moment, exponent, residual)
        })
        .collect();
    let second_moments: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let max_moment = second_moments.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean_moment = second_moments.iter().sum::<f64>() / second_moments.len().max(1) as f64;
    LocalizationReport {
        decay_exponents: rows.iter().map(|r| r.1).collect(),
        fit_residuals: rows.iter().map(|r| r.2).collect(),
        second_moments,
        max_moment,
        mean_moment,
    }
}

/// Least-squares slope of `log max |w|^2` against `log r` over radial bins,
/// discarding the outermost 10% of radii.
fn decay_fit(col: &[c64], radii: &[f64], bin: f64) -> (f64, f64) {
    let rmax = radii.iter().cloned().fold(0.0, f64::max);
    let cutoff = 0.9 * rmax;
    let nbins = (cutoff / bin).floor() as usize;
    let mut envelope = vec![0.0f64; nbins + 1];
    for (v, r) in col.iter().zip(radii) {
        if *r > cutoff {
            continue;
        }
        let k = (r / bin) as usize;
        if k < envelope.len() {
            envelope[k] = envelope[k].max(v.norm_sqr());
        }
    }
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, e)| **e > 0.0)
        .map(|(k, e)| (((k as f64 + 0.5) * bin).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (-slope, residual)
}

#[derive(Clone, Debug)]
pub struct Loewdin {
    pub vectors: CMat,
    pub condition: f64,
    pub min_eigenvalue: f64,
}

/// Gram matrix `W^dagger W` and its extreme eigenvalues.
pub fn gram(vectors: &CMat) -> (CMat, f64, f64) {
    let mut g = vectors.adjoint() * vectors;
    linalg::symmetrize(&mut g);
    let values = linalg::eigvalsh(&g);
    (g, values[0], *values.last().unwrap())
}

/// `W G^{-1/2}`; fails with `GramSingular` when `min eig(G) <= eps max eig(G)`.
pub fn loewdin(vectors: &CMat, eps: f64) -> Result<Loewdin> {
    if vectors.ncols() == 0 {
        return Err(Error::RankZero);
    }
    let (g, lo, hi) = gram(vectors);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(lo > eps * hi) {
        return Err(Error::GramSingular { min_eigenvalue: lo, condition });
    }
    let inv_sqrt = linalg::hermitian_function(&g, |x| 1.0 / x.sqrt());
    Ok(Loewdin { vectors: vectors * inv_sqrt, condition, min_eigenvalue: lo })
}

/// Seeds per centre: the smallest `m >= 1` with `m * centers >= rank`.
pub fn seeds_per_center(rank: usize, centers: usize) -> usize {
    if centers == 0 {
        return 1;
    }
    rank.div_ceil(centers).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyOptions {
    /// Window edge lengths, increasing.
    pub windows: Vec<f64>,
    /// Index of the gap (among gaps wider than `min_gap`) below which `P` projects.
    #[serde(default)]
    pub gap_index: usize,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    /// Seed of the Parseval frame, translated to every point of the set.
    #[serde(default = "default_frame_seed")]
    pub frame_seed: SeedProfile,
    /// Seed of the candidate Wannier basis.
    #[serde(default = "default_basis_seed")]
    pub basis_seed: SeedProfile,
    /// Coarse-grid spacing of the basis centres; one centre per magnetic cell
    /// makes the family size equal to the rank.
    pub basis_cell: Vec<f64>,
    #[serde(default)]
    pub orbital: usize,
    #[serde(default = "default_eps")]
    pub loewdin_eps: f64,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub chern_tolerance: f64,
}

fn default_min_gap() -> f64 {
    0.5
}

fn default_frame_seed() -> SeedProfile {
    SeedProfile::Gaussian { width: 0.3 }
}

fn default_basis_seed() -> SeedProfile {
    SeedProfile::Gaussian { width: 0.5 }
}

fn default_eps() -> f64 {
    1e-10
}

fn default_fractions() -> Vec<f64> {
    crate::chern::DEFAULT_FRACTIONS.to_vec()
}

fn default_tolerance() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub window: f64,
    pub rank: usize,
    pub chern: f64,
    pub basis_size: usize,
    pub gram_min: f64,
    pub gram_max: f64,
    /// `None` when the Gram matrix has no positive lower bound.
    pub kappa: Option<f64>,
    pub gram_singular: bool,
    pub loewdin_max_moment: Option<f64>,
    pub frame_size: usize,
    pub parseval_max_moment: f64,
    pub parseval_bounds: (f64, f64),
}

/// Parseval frame and Loewdin basis of the band below the chosen gap, on
/// growing windows.
pub fn dichotomy_experiment(model: &crate::model::ModelSpec, options: &DichotomyOptions, seed: u64) -> Result<Vec<DichotomyRow>> {
    if options.windows.is_empty() {
        return Err(Error::InvalidParameter("dichotomy needs at least one window".into()));
    }
    let c = model.cocycle()?;
    let mut rows = Vec::with_capacity(options.windows.len());
    for &size in &options.windows {
        let (set, h) = model.build(size, seed)?;
        let p = match crate::spectral::projection_below_gap(&h, options.min_gap, options.gap_index) {
            Err(Error::GapClosed { .. }) => return Err(Error::GapClosed { t: size }),
            other => other?,
        };
        let chern = crate::chern::chern_top(&p, &options.fractions, options.chern_tolerance)?;
        let bin = set.r;

        let all = set.points.clone();
        let m = seeds_per_center(p.rank, all.len());
        let frame_seeds = vec![Seed { profile: options.frame_seed, orbital: options.orbital }; m];
        let family = translate_family(&frame_seeds, &all, &c, &p)?;
        let frame = parseval_normalize(&family, &p)?;
        let parseval = localization_report(&frame.vectors, &frame.centers, &p.basis, bin);

        let centers = coarse_centers(&set, &options.basis_cell, 0.0)?;
        let basis = translate_family(&[Seed { profile: options.basis_seed, orbital: options.orbital }], &centers, &c, &p)?;
        let (_, lo, hi) = gram(&basis.vectors);
        let (gram_singular, loewdin_max_moment) = match loewdin(&basis.vectors, options.loewdin_eps) {
            Ok(l) => (false, Some(localization_report(&l.vectors, &basis.centers, &p.basis, bin).max_moment)),
            Err(Error::GramSingular { .. }) => (true, None),
            Err(e) => return Err(e),
        };
        rows.push(DichotomyRow {
            window: size,
            rank: p.rank,
            chern: chern.value,
            basis_size: basis.len(),
            gram_min: lo,
            gram_max: hi,
            kappa: (!gram_singular && lo > 0.0).then(|| hi / lo),
            gram_singular,
            loewdin_max_moment,
            frame_size: frame.vectors.ncols(),
            parseval_max_moment: parseval.max_moment,
            parseval_bounds: frame.bounds,
        });
    }
    Ok(rows)
}
