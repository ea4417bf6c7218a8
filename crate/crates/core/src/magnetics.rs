//! Constant magnetic fields: the antisymmetric field matrix, the 2-cocycle
//! `sigma(x, y) = exp(-i <x, theta y>)` and magnetic translations.
//!
//! Conventions used throughout the crate:
//! * gauge `A = -theta x / 2`, so `curl A = theta` and a unit square in the
//!   (1,2)-plane encloses flux `theta[0][1]`;
//! * `(U_a psi)(x) = exp(-i <x, theta a> / 2) psi(x - a)`, which commutes with
//!   the free Hamiltonian in this gauge and composes as
//!   `U_a U_b = exp(+i <a, theta b> / 2) U_{a+b}`;
//! * hop `q -> p` of a kernel carries `exp(-i <p, theta q> / 2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ZERO};
use crate::operators::{Basis, Boundary, GridBasis, SiteBasis};
use crate::pointsets::CellIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticCocycle {
    theta: Vec<Vec<f64>>,
}

impl MagneticCocycle {
    /// Antisymmetrizes `theta`; in one dimension the field is always zero.
    pub fn new(theta: Vec<Vec<f64>>) -> Result<Self> {
        let d = theta.len();
        if d == 0 || theta.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidParameter("theta must be a square, non-empty matrix".into()));
        }
        if theta.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("theta has non-finite entries".into()));
        }
        let mut out = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                out[i][j] = 0.5 * (theta[i][j] - theta[j][i]);
            }
        }
        Ok(Self { theta: out })
    }

    pub fn zero(d: usize) -> Self {
        Self { theta: vec![vec![0.0; d]; d] }
    }

    /// From the strict upper triangle listed row by row.
    pub fn from_upper(d: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != d * d.saturating_sub(1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "theta in dimension {d} needs {} upper-triangle entries, got {}",
                d * d.saturating_sub(1) / 2,
                upper.len()
            )));
        }
        let mut theta = vec![vec![0.0; d]; d];
        let mut it = upper.iter();
        for i in 0..d {
            for j in i + 1..d {
                let v = *it.next().unwrap();
                theta[i][j] = v;
                theta[j][i] = -v;
            }
        }
        Self::new(theta)
    }

    /// Field `b` in the (1,2)-plane of `R^2`.
    pub fn planar(b: f64) -> Self {
        Self { theta: vec![vec![0.0, b], vec![-b, 0.0]] }
    }

    /// Planar field carrying `alpha` flux quanta per unit square.
    pub fn flux(alpha: f64) -> Self {
        Self::planar(2.0 * std::f64::consts::PI * alpha)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn upper(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                out.push(self.theta[i][j]);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.theta.iter().flatten().all(|v| *v == 0.0)
    }

    /// `<x, theta y>`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.theta.iter().enumerate() {
            let mut inner = 0.0;
            for (t, yj) in row.iter().zip(y) {
                inner += t * yj;
            }
            acc += x[i] * inner;
        }
        acc
    }

    /// `exp(-i s <x, theta y>)`.
    pub fn phase(&self, x: &[f64], y: &[f64], s: f64) -> c64 {
        c64::cis(-s * self.bilinear(x, y))
    }

    /// Torus with edges `period` is compatible when every pair of periods
    /// encloses an integer number of flux quanta.
    pub fn check_torus(&self, period: &[f64]) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            for j in i + 1..d {
                let quanta = self.theta[i][j] * period[i] * period[j] / (2.0 * std::f64::consts::PI);
                if (quanta - quanta.round()).abs() > 1e-8 {
                    return Err(Error::InvalidParameter(format!(
                        "flux through the ({},{}) torus face is {quanta} quanta; periodic boundary needs an integer",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Factor relating values at `q + a` and `q` for states on the magnetic
    /// torus, `a = sum_j n_j L_j e_j`: `psi(q + a) = torus_factor(q, a) psi(q)`.
    pub fn torus_factor(&self, q: &[f64], a: &[f64]) -> c64 {
        let d = self.dim();
        let mut lambda = 0.0;
        for j in 0..d {
            for k in j + 1..d {
                lambda += a[j] * self.theta[j][k] * a[k];
            }
        }
        c64::cis(0.5 * lambda - 0.5 * self.bilinear(q, a))
    }
}

/// `sigma(x, y) = exp(-i <x, theta y>)`.
pub fn sigma(c: &MagneticCocycle, x: &[f64], y: &[f64]) -> c64 {
    c.phase(x, y, 1.0)
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|a| -a).collect()
}

/// `|sigma(x,y) sigma(x+y,z) - sigma(x,y+z) sigma(y,z)|`.
pub fn cocycle_identity_residual(c: &MagneticCocycle, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let lhs = sigma(c, x, y) * sigma(c, &add(x, y), z);
    let rhs = sigma(c, x, &add(y, z)) * sigma(c, y, z);
    (lhs - rhs).norm()
}

/// `(|sigma(x,y) - conj sigma(x+y,-y)|, |sigma(x,y) - conj sigma(-y,-x)|)`.
pub fn inverse_conjugation_residuals(c: &MagneticCocycle, x: &[f64], y: &[f64]) -> (f64, f64) {
    let s = sigma(c, x, y);
    let a = (s - sigma(c, &add(x, y), &neg(y)).conj()).norm();
    let b = (s - sigma(c, &neg(y), &neg(x)).conj()).norm();
    (a, b)
}

/// `(U_a psi)(x) = exp(-i <x, theta a>/2) psi(x - a)` on a grid or site basis.
///
/// On open bases values shifted in from outside the window are zero. On a
/// periodic basis the translate is taken on the magnetic torus, which needs a
/// flux-compatible period.
pub fn magnetic_translate(c: &MagneticCocycle, a: &[f64], psi: &[c64], basis: &Basis) -> Result<Vec<c64>> {
    if psi.len() != basis.len() {
        return Err(Error::BasisMismatch);
    }
    match basis {
        Basis::Grid(g) => translate_grid(c, a, psi, g),
        Basis::Sites(s) => translate_sites(c, a, psi, s),
    }
}

fn translate_grid(c: &MagneticCocycle, a: &[f64], psi: &[c64], grid: &GridBasis) -> Result<Vec<c64>> {
    let steps: Vec<i64> = a
        .iter()
        .map(|ak| {
            let s = ak / grid.pitch;
            ((s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)).then_some(s.round() as i64)
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::OffGrid { shift: a.to_vec(), pitch: grid.pitch })?;
    let periodic = grid.boundary == Boundary::Periodic;
    let period = grid.window.edges();
    if periodic {
        c.check_torus(&period)?;
    }
    let mut out = vec![ZERO; psi.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let idx = grid.multi_index(i);
        let x = grid.point(i);
        let mut wrap = vec![0.0; idx.len()];
        let mut src = Vec::with_capacity(idx.len());
        let mut inside = true;
        for k in 0..idx.len() {
            let n = grid.shape[k] as i64;
            let s = idx[k] as i64 - steps[k];
            if periodic {
                let w = s.rem_euclid(n);
                wrap[k] = ((s - w) / n) as f64 * period[k];
                src.push(w as usize);
            } else if s < 0 || s >= n {
                inside = false;
                break;
            } else {
                src.push(s as usize);
            }
        }
        if !inside {
            continue;
        }
        // psi(x - a) where x - a = q + wrap with q the stored point
        let j = grid.linear_index(&src);
        let mut v = psi[j];
        if periodic && wrap.iter().any(|w| *w != 0.0) {
            v *= c.torus_factor(&grid.point(j), &wrap);
        }
        *o = c.phase(&x, a, 0.5) * v;
    }
    Ok(out)
}

fn translate_sites(c: &MagneticCocycle, a: &[f64], psi: &[c64], basis: &SiteBasis) -> Result<Vec<c64>> {
    let set = &basis.set;
    let period = set.period();
    if let Some(p) = &period {
        c.check_torus(p)?;
    }
    let index = CellIndex::new(&set.points, &set.window, 2.0 * set.r, period.as_deref());
    let m = basis.orbitals;
    let mut out = vec![ZERO; psi.len()];
    for (i, x) in set.points.iter().enumerate() {
        let target: Vec<f64> = x.iter().zip(a).map(|(u, v)| u - v).collect();
        if period.is_none() && !set.window.contains(&target) {
            continue;
        }
        let hit = index.within(&target, 0.5 * set.r).into_iter().min_by(|p, q| p.1.total_cmp(&q.1));
        let Some((j, _)) = hit else {
            return Err(Error::NoMatchingSites { shift: a.to_vec() });
        };
        let mut factor = c.phase(x, a, 0.5);
        if let Some(p) = &period {
            // x - a = q + wrap with q the stored site
            let q = &set.points[j];
            let wrap: Vec<f64> = target
                .iter()
                .zip(q)
                .zip(p)
                .map(|((t, qk), l)| ((t - qk) / l).round() * l)
                .collect();
            if wrap.iter().any(|w| *w != 0.0) {
                factor *= c.torus_factor(q, &wrap);
            }
        }
        for o in 0..m {
            out[i * m + o] = factor * psi[j * m + o];
        }
    }
    Ok(out)
}
