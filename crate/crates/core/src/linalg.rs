//! Thin dense linear-algebra layer over `faer`.
//!
//! All routines run sequentially so that results are bitwise reproducible
//! regardless of the rayon pool the caller happens to be in.

use faer::linalg::solvers::DenseSolveCore;
use faer::Side;

pub use faer::c64;
pub use faer::Mat;

/// Dense complex matrix used throughout the crate.
pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn zeros(rows: usize, cols: usize) -> CMat {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

/// Largest entrywise modulus of `a - a^dagger`.
pub fn hermitian_asymmetry(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Replaces `a` by `(a + a^dagger)/2`.
pub fn symmetrize(a: &mut CMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in j..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
        a[(j, j)] = c64::new(a[(j, j)].re, 0.0);
    }
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max(a[(i, j)].norm());
        }
    }
    worst
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm_l2()
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    a - b
}

pub fn scaled(a: &CMat, s: f64) -> CMat {
    a * faer::Scale(c64::new(s, 0.0))
}

/// `acc += s * a`.
pub fn add_scaled(acc: &mut CMat, a: &CMat, s: f64) {
    *acc += a * faer::Scale(c64::new(s, 0.0));
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matrix whose columns are the orthonormal eigenvectors.
pub fn eigh(a: &CMat) -> (Vec<f64>, CMat) {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .expect("self-adjoint eigendecomposition did not converge");
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..a.nrows()).map(|i| s[i].re).collect();
    (values, evd.U().to_owned())
}

pub fn eigvalsh(a: &CMat) -> Vec<f64> {
    let mut values: Vec<f64> = a
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("self-adjoint eigendecomposition did not converge")
        .into_iter()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `f(a)` for Hermitian `a` by spectral calculus.
pub fn hermitian_function(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = eigh(a);
    let n = a.nrows();
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    &scaled * vectors.adjoint()
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Deterministic, non-degenerate start vector for power iterations.
fn start_vector(n: usize) -> Vec<c64> {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((state >> 11) as f64) / ((1u64 << 53) as f64);
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((state >> 11) as f64) / ((1u64 << 53) as f64);
            c64::new(1.0 + a, b - 0.5)
        })
        .collect()
}

fn apply(a: &CMat, v: &[c64], out: &mut [c64]) {
    out.iter_mut().for_each(|o| *o = ZERO);
    for (j, &vj) in v.iter().enumerate() {
        if vj == ZERO {
            continue;
        }
        let col = a.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * vj;
        }
    }
}

fn apply_adjoint(a: &CMat, v: &[c64], out: &mut [c64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let col = a.col(j);
        let mut acc = ZERO;
        for (i, &vi) in v.iter().enumerate() {
            acc += col[i].conj() * vi;
        }
        *o = acc;
    }
}

fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on `a^dagger a`, stopping when
/// the relative change of the estimate drops below `tol`.
pub fn spectral_norm_tol(a: &CMat, tol: f64) -> f64 {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    if max_abs(a) == 0.0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![ZERO; m];
    let mut u = vec![ZERO; n];
    let mut sigma = 0.0;
    for _ in 0..20_000 {
        apply(a, &v, &mut w);
        let next = vec_norm(&w);
        apply_adjoint(a, &w, &mut u);
        let nu = vec_norm(&u);
        if nu == 0.0 {
            return next;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = *ui / nu;
        }
        if (next - sigma).abs() <= tol * next {
            // one more half-step estimate from the refreshed vector
            apply(a, &v, &mut w);
            return vec_norm(&w).max(next);
        }
        sigma = next;
    }
    sigma
}

pub fn spectral_norm(a: &CMat) -> f64 {
    spectral_norm_tol(a, 1e-9)
}

/// Column `j` of `a` as a vector.
pub fn column(a: &CMat, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_columns(n: usize, columns: &[Vec<c64>]) -> CMat {
    Mat::from_fn(n, columns.len(), |i, j| columns[j][i])
}

pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[c64]) -> f64 {
    vec_norm(v)
}

pub fn mat_vec(a: &CMat, v: &[c64]) -> Vec<c64> {
    let mut out = vec![ZERO; a.nrows()];
    apply(a, v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = Mat::from_fn(4, 4, |i, j| if i == j { c64::new(i as f64 - 3.5, 0.0) } else { ZERO });
        assert!((spectral_norm(&a) - 3.5).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let a = Mat::from_fn(7, 5, |i, j| c64::new(((i * 3 + j * 7) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64));
        let s = a.singular_values().unwrap();
        let top = s.iter().cloned().fold(0.0f64, f64::max);
        assert!((spectral_norm(&a) - top).abs() < 1e-7 * top);
    }

    #[test]
    fn eigh_is_ascending_and_orthonormal() {
        let a = Mat::from_fn(6, 6, |i, j| {
            let v = c64::new((i + j) as f64, i as f64 - j as f64);
            if i == j { c64::new(2.0 * i as f64, 0.0) } else { v * 0.1 }
        });
        let mut h = a.clone();
        symmetrize(&mut h);
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let g = adjoint(&vecs) * &vecs;
        assert!(max_abs(&(g - identity(6))) < 1e-12);
    }
}
