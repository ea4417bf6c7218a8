//! Finite matrix representations of magnetic operators on a window: the
//! discretized continuum Schrodinger operator with a Delone potential and
//! tight-binding kernels on the sites of a pattern.

mod basis;
pub mod io;

pub use basis::{Basis, Boundary, GridBasis, SiteBasis};

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, ZERO};
use crate::magnetics::MagneticCocycle;
use crate::pointsets::{displacement, norm, CellIndex, DeloneSet};

/// Finite matrix tagged with its basis and magnetic twist.
#[derive(Clone, Debug)]
pub struct KernelOperator {
    pub matrix: CMat,
    pub basis: Basis,
    pub hermitian: bool,
    pub twist: MagneticCocycle,
}

impl KernelOperator {
    pub fn new(matrix: CMat, basis: Basis, twist: MagneticCocycle) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::BasisMismatch);
        }
        let hermitian = linalg::hermitian_asymmetry(&matrix) < 1e-12;
        Ok(Self { matrix, basis, hermitian, twist })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }

    fn same_space(&self, other: &KernelOperator) -> bool {
        self.basis == other.basis && self.twist == other.twist
    }
}

/// Matrix-valued hopping amplitude `A(s)` for a separation `s = x_target -
/// x_source`, row-major over orbitals. Hermiticity requires
/// `A(-s) = A(s)^dagger`.
#[derive(Clone)]
pub struct HoppingProfile {
    pub range: f64,
    pub orbitals: usize,
    amplitude: Arc<dyn Fn(&[f64]) -> Vec<c64> + Send + Sync>,
}

impl fmt::Debug for HoppingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoppingProfile").field("range", &self.range).field("orbitals", &self.orbitals).finish()
    }
}

impl HoppingProfile {
    pub fn new(range: f64, orbitals: usize, amplitude: impl Fn(&[f64]) -> Vec<c64> + Send + Sync + 'static) -> Self {
        Self { range, orbitals: orbitals.max(1), amplitude: Arc::new(amplitude) }
    }

    /// Single orbital with a scalar amplitude.
    pub fn scalar(range: f64, amplitude: impl Fn(&[f64]) -> c64 + Send + Sync + 'static) -> Self {
        Self::new(range, 1, move |s| vec![amplitude(s)])
    }

    /// Amplitude `t` between points at distance `spacing` (within 1%).
    pub fn nearest_neighbour(t: f64, spacing: f64) -> Self {
        let range = 1.01 * spacing;
        Self::scalar(range, move |s| {
            let d = norm(s);
            if (d - spacing).abs() <= 0.01 * spacing {
                c64::new(t, 0.0)
            } else {
                ZERO
            }
        })
    }

    /// `t exp(-decay (|s| - 1)) tau(|s|)` where `tau` is a C-infinity taper
    /// equal to 1 below `cut_in` and 0 beyond `range`.
    pub fn radial(t: f64, decay: f64, cut_in: f64, range: f64) -> Self {
        Self::scalar(range, move |s| {
            let d = norm(s);
            c64::new(t * (-decay * (d - 1.0)).exp() * smooth_taper(d, cut_in, range), 0.0)
        })
    }

    pub fn zero(orbitals: usize) -> Self {
        let m = orbitals.max(1);
        Self::new(0.0, m, move |_| vec![ZERO; m * m])
    }

    pub fn amplitude(&self, s: &[f64]) -> Vec<c64> {
        if norm(s) > self.range {
            return vec![ZERO; self.orbitals * self.orbitals];
        }
        (self.amplitude)(s)
    }
}

/// C-infinity step: 1 for `x <= a`, 0 for `x >= b`.
pub fn smooth_taper(x: f64, a: f64, b: f64) -> f64 {
    fn g(u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            (-1.0 / u).exp()
        }
    }
    if x <= a {
        return 1.0;
    }
    if x >= b {
        return 0.0;
    }
    let u = (x - a) / (b - a);
    g(1.0 - u) / (g(1.0 - u) + g(u))
}

/// Neighbourhood of a site handed to onsite-energy callbacks.
#[derive(Clone, Debug)]
pub struct LocalPattern<'a> {
    pub site: usize,
    pub position: &'a [f64],
    /// Separations to other sites within the pattern radius.
    pub neighbours: Vec<Vec<f64>>,
}

/// Onsite energies per orbital as a function of the local pattern.
pub type Onsite = Arc<dyn Fn(&LocalPattern) -> Vec<f64> + Send + Sync>;

pub fn constant_onsite(values: Vec<f64>) -> Onsite {
    Arc::new(move |_| values.clone())
}

/// Compactly supported, continuous atomic potential `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AtomicPotential {
    Zero,
    /// `amplitude * exp(1 - 1/(1 - |x/radius|^2))` inside the ball.
    Bump { amplitude: f64, radius: f64 },
    /// Gaussian shifted to vanish at `cutoff`; no cutoff means no compact support.
    Gaussian { amplitude: f64, width: f64, cutoff: Option<f64> },
}

impl AtomicPotential {
    pub fn support(&self) -> Option<f64> {
        match *self {
            AtomicPotential::Zero => Some(0.0),
            AtomicPotential::Bump { radius, .. } => Some(radius),
            AtomicPotential::Gaussian { cutoff, .. } => cutoff,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = norm(x);
        match *self {
            AtomicPotential::Zero => 0.0,
            AtomicPotential::Bump { amplitude, radius } => {
                let u = d / radius;
                if u >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            AtomicPotential::Gaussian { amplitude, width, cutoff } => {
                let g = |r: f64| (-0.5 * r * r / (width * width)).exp();
                match cutoff {
                    Some(c) if d >= c => 0.0,
                    Some(c) => amplitude * (g(d) - g(c)),
                    None => amplitude * g(d),
                }
            }
        }
    }

    /// Largest value of `|v|`.
    pub fn sup(&self) -> f64 {
        match *self {
            AtomicPotential::Zero => 0.0,
            AtomicPotential::Bump { amplitude, .. } => amplitude.abs(),
            AtomicPotential::Gaussian { amplitude, width, cutoff } => {
                let tail = cutoff.map_or(0.0, |c| (-0.5 * c * c / (width * width)).exp());
                amplitude.abs() * (1.0 - tail)
            }
        }
    }
}

/// `V(x) = sum_p v(x - p)` at each grid point.
pub fn potential_on_grid(set: &DeloneSet, v: &AtomicPotential, grid: &GridBasis) -> Result<Vec<f64>> {
    let support = v.support().ok_or(Error::PotentialNotCompact)?;
    if support == 0.0 || set.is_empty() {
        return Ok(vec![0.0; grid.len()]);
    }
    let period = if set.periodic { set.period() } else { None };
    let index = CellIndex::new(&set.points, &set.window, support.max(set.r), period.as_deref());
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            index
                .within(&x, support)
                .into_iter()
                .map(|(j, _)| v.eval(&displacement(&set.points[j], &x, period.as_deref())))
                .sum()
        })
        .collect())
}

/// Magnetic Schrodinger operator `(-i grad - A)^2 + V` on a grid, with
/// `A = -theta x / 2`, a central second-order stencil and link phases
/// `exp(-i int A.dl)` along each bond.
pub fn assemble_continuum(set: &DeloneSet, v: &AtomicPotential, c: &MagneticCocycle, grid: &GridBasis) -> Result<KernelOperator> {
    if c.dim() != grid.dim() || set.dim != grid.dim() {
        return Err(Error::BasisMismatch);
    }
    if grid.pitch > set.r / 4.0 * (1.0 + 1e-12) {
        return Err(Error::PitchTooCoarse { pitch: grid.pitch, limit: set.r / 4.0 });
    }
    let potential = potential_on_grid(set, v, grid)?;
    let period = grid.period();
    if let Some(p) = &period {
        c.check_torus(p)?;
    }
    let n = grid.len();
    let d = grid.dim();
    let h2 = grid.pitch * grid.pitch;
    let rows: Vec<Vec<(usize, c64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let idx = grid.multi_index(i);
            let x = grid.point(i);
            let mut row = vec![(i, c64::new(2.0 * d as f64 / h2 + potential[i], 0.0))];
            for k in 0..d {
                for step in [-1i64, 1] {
                    let nk = grid.shape[k] as i64;
                    let raw = idx[k] as i64 + step;
                    let mut jdx = idx.clone();
                    let mut wrap = vec![0.0; d];
                    if (0..nk).contains(&raw) {
                        jdx[k] = raw as usize;
                    } else if let Some(p) = &period {
                        let w = raw.rem_euclid(nk);
                        jdx[k] = w as usize;
                        wrap[k] = ((raw - w) / nk) as f64 * p[k];
                    } else {
                        continue;
                    }
                    let j = grid.linear_index(&jdx);
                    let q = grid.point(j);
                    let image: Vec<f64> = q.iter().zip(&wrap).map(|(a, b)| a + b).collect();
                    let mut value = c.phase(&x, &image, 0.5) * (-1.0 / h2);
                    if wrap[k] != 0.0 {
                        value *= c.torus_factor(&q, &wrap);
                    }
                    row.push((j, value));
                }
            }
            row
        })
        .collect();
    let mut m = linalg::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            m[(i, j)] += v;
        }
    }
    finish_hermitian(m, Basis::Grid(grid.clone()), c)
}

fn finish_hermitian(mut m: CMat, basis: Basis, c: &MagneticCocycle) -> Result<KernelOperator> {
    let asym = linalg::hermitian_asymmetry(&m);
    let scale = linalg::max_abs(&m).max(1.0);
    if asym > 1e-10 * scale {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    linalg::symmetrize(&mut m);
    Ok(KernelOperator { matrix: m, basis, hermitian: true, twist: c.clone() })
}

/// Radius of the neighbourhood passed to onsite callbacks.
pub fn pattern_radius(set: &DeloneSet) -> f64 {
    2.0 * set.big_r
}

/// Tight-binding kernel on the sites of `set`:
/// `M[p][q] = A(q - p) exp(-i <p, theta q>/2)` for `q != p`, onsite energies
/// on the diagonal blocks. On a periodic set hops across the boundary pick
/// up the magnetic torus factor.
pub fn assemble_tightbinding(set: &DeloneSet, hop: &HoppingProfile, c: &MagneticCocycle, onsite: &Onsite) -> Result<KernelOperator> {
    if c.dim() != set.dim {
        return Err(Error::BasisMismatch);
    }
    let limit = set.window.edges().iter().cloned().fold(f64::INFINITY, f64::min) / 4.0;
    if hop.range >= limit {
        return Err(Error::RangeTooLarge { range: hop.range, limit });
    }
    let basis = SiteBasis::new(set.clone(), hop.orbitals);
    let set = &basis.set;
    let m = basis.orbitals;
    let period = set.period();
    if let Some(p) = &period {
        c.check_torus(p)?;
    }
    let reach = hop.range.max(pattern_radius(set));
    let index = CellIndex::new(&set.points, &set.window, set.r.max(1e-9) * 2.0, period.as_deref());
    let d = set.dim;
    let images: Vec<Vec<f64>> = match &period {
        None => vec![vec![0.0; d]],
        Some(p) => {
            let total = 3usize.pow(d as u32);
            (0..total)
                .map(|mut lin| {
                    (0..d)
                        .map(|k| {
                            let o = (lin % 3) as f64 - 1.0;
                            lin /= 3;
                            o * p[k]
                        })
                        .collect()
                })
                .collect()
        }
    };
    let entries: Vec<Vec<(usize, usize, c64)>> = (0..set.len())
        .into_par_iter()
        .map(|i| {
            let x = &set.points[i];
            let near = index.within(x, reach);
            let neighbours: Vec<Vec<f64>> = near
                .iter()
                .filter(|(j, d)| *j != i && *d <= pattern_radius(set))
                .map(|(j, _)| displacement(x, &set.points[*j], period.as_deref()))
                .collect();
            let energies = onsite(&LocalPattern { site: i, position: x, neighbours });
            let mut out = Vec::new();
            for o in 0..m {
                out.push((i * m + o, i * m + o, c64::new(energies.get(o).copied().unwrap_or(0.0), 0.0)));
            }
            if hop.range > 0.0 {
                for (j, _) in near {
                    let q = &set.points[j];
                    for a in &images {
                        let image: Vec<f64> = q.iter().zip(a).map(|(u, v)| u + v).collect();
                        let s: Vec<f64> = image.iter().zip(x).map(|(u, v)| u - v).collect();
                        let dist = norm(&s);
                        if dist > hop.range || (j == i && dist == 0.0) {
                            continue;
                        }
                        let mut phase = c.phase(x, &image, 0.5);
                        if a.iter().any(|v| *v != 0.0) {
                            phase *= c.torus_factor(q, a);
                        }
                        let amp = hop.amplitude(&s);
                        for o in 0..m {
                            for p in 0..m {
                                let v = amp[o * m + p];
                                if v != ZERO {
                                    out.push((i * m + o, j * m + p, phase * v));
                                }
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    let n = basis.len();
    let mut mat = linalg::zeros(n, n);
    for (r, col, v) in entries.into_iter().flatten() {
        mat[(r, col)] += v;
    }
    finish_hermitian(mat, Basis::Sites(basis.clone()), c)
}

/// Represented product `pi(f * g) = pi(f) pi(g)`.
pub fn twisted_convolve(f: &KernelOperator, g: &KernelOperator) -> Result<KernelOperator> {
    if !f.same_space(g) {
        return Err(Error::BasisMismatch);
    }
    Ok(KernelOperator { matrix: &f.matrix * &g.matrix, basis: f.basis.clone(), hermitian: false, twist: f.twist.clone() })
}

/// Multi-indices `alpha` in `d` variables with `|alpha| <= n`.
pub fn multi_indices(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; d]];
    for _ in 0..n {
        let mut next = Vec::new();
        for a in &out {
            for k in 0..d {
                let mut b = a.clone();
                b[k] += 1;
                next.push(b);
            }
        }
        out.extend(next);
        out.sort();
        out.dedup();
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `sum_{|alpha| <= n} ||d^alpha f|| / alpha!` where `d^alpha` multiplies the
/// entry `(p, q)` by `(x_q - x_p)^alpha`.
pub fn frechet_seminorm(f: &KernelOperator, n: usize) -> f64 {
    let sep = f.basis.separations();
    let size = f.len();
    let d = f.basis.dim();
    multi_indices(d, n)
        .into_iter()
        .map(|alpha| {
            let weight: f64 = alpha.iter().map(|a| factorial(*a)).product();
            let m = CMat::from_fn(size, size, |i, j| {
                let mut w = 1.0;
                for k in 0..d {
                    w *= sep[k][i * size + j].powi(alpha[k] as i32);
                }
                f.matrix[(i, j)] * w
            });
            linalg::spectral_norm(&m) / weight
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `||(z-H1)^-1 - (z-H2)^-1|| <= vsup ||(z-H1)^-1|| ||(z-H2)^-1||` for
/// Hermitian operators differing only on the diagonal.
pub fn resolvent_distance_bound_check(h1: &KernelOperator, h2: &KernelOperator, z: c64, vsup: f64) -> Result<ResolventBoundReport> {
    if z.im == 0.0 {
        return Err(Error::RealShift);
    }
    if h1.len() != h2.len() {
        return Err(Error::BasisMismatch);
    }
    let n = h1.len();
    for j in 0..n {
        for i in 0..n {
            if i != j && (h1.matrix[(i, j)] - h2.matrix[(i, j)]).norm() > 1e-12 {
                return Err(Error::InvalidParameter("operators differ off the diagonal".into()));
            }
        }
    }
    Ok(resolvent_bound(&h1.matrix, &h2.matrix, z, vsup))
}

/// `||(z-H1)^-1 - (z-H2)^-1||` against `perturbation ||(z-H1)^-1|| ||(z-H2)^-1||`,
/// where `perturbation` bounds `||H1 - H2||`.
pub fn resolvent_bound(h1: &CMat, h2: &CMat, z: c64, perturbation: f64) -> ResolventBoundReport {
    let n = h1.nrows();
    let resolvent = |h: &CMat| {
        let shifted = CMat::from_fn(n, n, |i, j| if i == j { z - h[(i, j)] } else { -h[(i, j)] });
        linalg::inverse(&shifted)
    };
    let resolvent_norm = |h: &CMat| {
        let dist = linalg::eigvalsh(h).iter().map(|l| (z - c64::new(*l, 0.0)).norm()).fold(f64::INFINITY, f64::min);
        1.0 / dist
    };
    let diff = resolvent(h1) - resolvent(h2);
    let lhs = if linalg::max_abs(&diff) == 0.0 { 0.0 } else { linalg::spectral_norm(&diff) };
    let rhs = perturbation * resolvent_norm(h1) * resolvent_norm(h2);
    ResolventBoundReport { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-10) }
}

/// Largest change of the diagonal between two operators on the same basis.
pub fn diagonal_sup_difference(h1: &KernelOperator, h2: &KernelOperator) -> f64 {
    (0..h1.len()).map(|i| (h1.matrix[(i, i)] - h2.matrix[(i, i)]).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
