//! Eigendecomposition, gap detection and gapped spectral projections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::operators::{Basis, KernelOperator};

/// Ascending eigenvalues and orthonormal eigenvectors of a Hermitian operator.
pub fn eig(h: &KernelOperator) -> Result<(Vec<f64>, CMat)> {
    check_hermitian(&h.matrix)?;
    Ok(linalg::eigh(&h.matrix))
}

pub fn eigenvalues(h: &KernelOperator) -> Result<Vec<f64>> {
    check_hermitian(&h.matrix)?;
    Ok(linalg::eigvalsh(&h.matrix))
}

fn check_hermitian(m: &CMat) -> Result<()> {
    let asymmetry = linalg::hermitian_asymmetry(m);
    if asymmetry > 1e-12 * linalg::max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// Open interval `(lo, hi)` between consecutive eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub midpoint: f64,
    pub width: f64,
    /// Number of eigenvalues below the gap.
    pub below: usize,
}

/// Maximal gaps of width at least `min_gap` in a sorted spectrum.
pub fn detect_gaps(values: &[f64], min_gap: f64) -> Vec<Gap> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] >= min_gap)
        .map(|(i, w)| Gap { lo: w[0], hi: w[1], midpoint: 0.5 * (w[0] + w[1]), width: w[1] - w[0], below: i + 1 })
        .collect()
}

/// Spectral region `[lo, hi)` selected by a projection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    /// Everything below `e`.
    pub fn below(e: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi: e }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    /// Sum of eigenvector outer products.
    EigenSum,
    /// Chebyshev expansion of a smooth step, then McWeeny purification.
    /// Without a degree, `12 ||H|| / gap_margin` (rounded up) is used.
    Chebyshev { degree: Option<usize> },
}

#[derive(Clone, Debug)]
pub struct ProjectionOptions {
    pub backend: Backend,
    /// Endpoints closer than this to an eigenvalue are rejected.
    pub endpoint_guard: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { backend: Backend::EigenSum, endpoint_guard: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralProjection {
    pub matrix: CMat,
    pub delta: Interval,
    pub gap_margin: f64,
    pub rank: usize,
    pub basis: Basis,
    pub backend: Backend,
    /// Orthonormal basis of the range, one column per eigenvector in `delta`.
    pub range: CMat,
    /// Eigenvalues inside `delta`.
    pub values: Vec<f64>,
}

impl SpectralProjection {
    pub fn idempotency_residual(&self) -> f64 {
        linalg::max_abs(&(&self.matrix * &self.matrix - &self.matrix))
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).sum()
    }
}

pub fn spectral_projection(h: &KernelOperator, delta: Interval) -> Result<SpectralProjection> {
    spectral_projection_with(h, delta, &ProjectionOptions::default())
}

pub fn spectral_projection_with(h: &KernelOperator, delta: Interval, options: &ProjectionOptions) -> Result<SpectralProjection> {
    let (values, vectors) = eig(h)?;
    projection_from_eigen(h, &values, &vectors, delta, options)
}

/// Projection onto the eigenvalues below the gap with index `gap` among the
/// gaps of width at least `min_gap`.
pub fn projection_below_gap(h: &KernelOperator, min_gap: f64, gap: usize) -> Result<SpectralProjection> {
    let (values, vectors) = eig(h)?;
    let gaps = detect_gaps(&values, min_gap);
    let g = gaps.get(gap).ok_or(Error::GapClosed { t: 0.0 })?;
    let delta = Interval::new(values[0] - 1.0, g.midpoint);
    projection_from_eigen(h, &values, &vectors, delta, &ProjectionOptions::default())
}

pub fn projection_from_eigen(
    h: &KernelOperator,
    values: &[f64],
    vectors: &CMat,
    delta: Interval,
    options: &ProjectionOptions,
) -> Result<SpectralProjection> {
    let n = values.len();
    let mut margin = f64::INFINITY;
    for endpoint in [delta.lo, delta.hi] {
        if !endpoint.is_finite() {
            continue;
        }
        let distance = values.iter().map(|v| (v - endpoint).abs()).fold(f64::INFINITY, f64::min);
        if distance < options.endpoint_guard {
            return Err(Error::EndpointInSpectrum { endpoint, distance });
        }
        margin = margin.min(distance);
    }
    let inside: Vec<usize> = (0..n).filter(|&i| delta.contains(values[i])).collect();
    let range = CMat::from_fn(n, inside.len(), |i, k| vectors[(i, inside[k])]);
    let matrix = match options.backend {
        Backend::EigenSum => {
            let mut p = &range * range.adjoint();
            linalg::symmetrize(&mut p);
            p
        }
        Backend::Chebyshev { degree } => {
            let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let degree = degree.unwrap_or_else(|| (12.0 * norm / margin).ceil() as usize).max(4);
            chebyshev_projection(&h.matrix, delta, margin, degree)
        }
    };
    Ok(SpectralProjection {
        matrix,
        delta,
        gap_margin: margin,
        rank: inside.len(),
        basis: h.basis.clone(),
        backend: options.backend,
        range,
        values: inside.iter().map(|&i| values[i]).collect(),
    })
}

/// Gershgorin bounds of the spectrum.
fn spectral_bounds(h: &CMat) -> (f64, f64) {
    let n = h.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
        lo = lo.min(h[(i, i)].re - radius);
        hi = hi.max(h[(i, i)].re + radius);
    }
    (lo, hi)
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Chebyshev coefficients of `f` on `[-1, 1]` by interpolation at `k + 1` nodes.
pub fn chebyshev_coefficients(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let k = degree + 1;
    let samples: Vec<f64> = (0..k)
        .map(|j| f((std::f64::consts::PI * (j as f64 + 0.5) / k as f64).cos()))
        .collect();
    (0..k)
        .map(|m| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(j, fj)| fj * (std::f64::consts::PI * m as f64 * (j as f64 + 0.5) / k as f64).cos())
                .sum();
            let c = 2.0 * s / k as f64;
            if m == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

fn chebyshev_projection(h: &CMat, delta: Interval, margin: f64, degree: usize) -> CMat {
    let n = h.nrows();
    let (lo, hi) = spectral_bounds(h);
    let center = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo) * 1.01 + 1e-12;
    let width = margin / 6.0;
    let step = |e: f64| {
        let up = if delta.lo.is_finite() { logistic((e - delta.lo) / width) } else { 1.0 };
        let down = if delta.hi.is_finite() { logistic((e - delta.hi) / width) } else { 0.0 };
        up - down
    };
    let coeffs = chebyshev_coefficients(|x| step(center + half * x), degree);
    let x = CMat::from_fn(n, n, |i, j| {
        let v = h[(i, j)] / half;
        if i == j {
            v - c64::new(center / half, 0.0)
        } else {
            v
        }
    });
    let mut t_prev = linalg::identity(n);
    let mut t_cur = x.clone();
    let mut p = CMat::from_fn(n, n, |i, j| if i == j { c64::new(coeffs[0], 0.0) } else { ZERO });
    if coeffs.len() > 1 {
        linalg::add_scaled(&mut p, &t_cur, coeffs[1]);
    }
    for c in coeffs.iter().skip(2) {
        let t_next = linalg::scaled(&(&x * &t_cur), 2.0) - &t_prev;
        linalg::add_scaled(&mut p, &t_next, *c);
        t_prev = t_cur;
        t_cur = t_next;
    }
    linalg::symmetrize(&mut p);
    purify(p)
}

/// McWeeny iteration `P <- 3P^2 - 2P^3` until idempotent.
pub fn purify(mut p: CMat) -> CMat {
    for _ in 0..100 {
        let p2 = &p * &p;
        let residual = linalg::max_abs(&(&p2 - &p));
        if residual < 1e-14 {
            break;
        }
        let p3 = &p2 * &p;
        p = linalg::scaled(&p2, 3.0) - linalg::scaled(&p3, 2.0);
        linalg::symmetrize(&mut p);
    }
    p
}
