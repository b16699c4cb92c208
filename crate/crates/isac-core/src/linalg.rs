//! Dense complex linear-algebra helpers shared across the crate.
//!
//! Everything here is small and deterministic: fixed starting vectors for
//! the power iteration, pairwise summation for order-independent reductions,
//! and eigen-based helpers for Hermitian matrices. Problem dimensions in
//! this crate stay modest (matrices up to a few hundred rows), so dense
//! `nalgebra` storage is used throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix, the crate's working type.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Shorthand complex constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Returns ½(A + Aᴴ), projecting float drift back onto the Hermitian
/// manifold. The input must be square.
pub fn hermitian_part(a: &CMat) -> CMat {
    assert_eq!(a.nrows(), a.ncols(), "hermitian_part needs a square matrix");
    (a + a.adjoint()).scale(0.5)
}

/// Hermitian positive-semidefinite square root via eigendecomposition.
///
/// Eigenvalues in `[-clamp_tol·λ_max, 0)` are treated as float noise and
/// clamped to zero; anything more negative means the input was not PSD and
/// is reported as a numerical failure.
pub fn hermitian_sqrt(a: &CMat, clamp_tol: f64) -> Result<CMat> {
    let eig = hermitian_part(a).symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = -clamp_tol * lambda_max.max(1.0);
    let mut roots = DVector::<f64>::zeros(eig.eigenvalues.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < floor {
            return Err(Error::Numerical(format!(
                "hermitian_sqrt: eigenvalue {lambda:.3e} below PSD tolerance {floor:.3e}"
            )));
        }
        roots[i] = lambda.max(0.0).sqrt();
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= c(roots[j], 0.0);
    }
    Ok(&scaled * v.adjoint())
}

/// Cholesky factorization of a Hermitian matrix with an explicit
/// positive-definiteness check, returning the lower factor L (real positive
/// diagonal) with LLᴴ = A, or `None` when A is not strictly positive
/// definite.
///
/// This exists because `nalgebra`'s checked `Cholesky::new` cannot reject
/// indefinite *complex* matrices: its pivot test takes `try_sqrt` of each
/// pivot, and every complex number has a square root, so the decomposition
/// "succeeds" with garbage factors. Anything that uses a Cholesky as a
/// PD test on complex matrices must go through this function instead.
pub fn hermitian_cholesky(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = a.lower_triangle();
    for j in 0..n {
        let mut d = l[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let s = d.sqrt();
        l[(j, j)] = c(s, 0.0);
        for i in (j + 1)..n {
            let mut v = l[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / s;
        }
    }
    Some(l)
}

/// Inverse of a Hermitian positive-definite matrix through
/// [`hermitian_cholesky`]; `None` when the matrix is not strictly PD.
pub fn pd_inverse(a: &CMat) -> Option<CMat> {
    let l = hermitian_cholesky(a)?;
    let id = CMat::identity(a.nrows(), a.nrows());
    let y = l.solve_lower_triangular(&id)?;
    l.adjoint().solve_upper_triangular(&y)
}

/// Deterministic, generically-positioned start vector for power iterations.
fn power_iteration_start(dim: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    for k in 0..dim {
        // Irrational strides keep the entries incommensurate with any
        // structured eigenbasis; no randomness, so solver paths are
        // reproducible bit for bit.
        let a = 1.0 + ((k as f64) * 0.618_033_988_749_894_9).fract();
        let b = 0.25 + ((k as f64) * 0.381_966_011_250_105_2).fract();
        v[k] = c(a, b);
    }
    let n = v.norm();
    v.unscale(n)
}

/// Largest eigenvalue of a Hermitian positive-semidefinite operator by
/// power iteration, with a deterministic start (or a caller-provided warm
/// start). Returns the final Rayleigh quotient and the iterate.
///
/// For a PSD operator the dominant eigenvalue in magnitude *is* the largest
/// eigenvalue, so plain power iteration converges to it. The returned value
/// approaches λ_max from below; callers needing a certified upper bound
/// should combine it with [`psd_top_eigenvalue_upper_bound`].
pub fn top_eigenvalue_psd<F>(
    apply: F,
    dim: usize,
    tol: f64,
    max_iter: usize,
    warm_start: Option<&CVec>,
) -> (f64, CVec)
where
    F: Fn(&CVec) -> CVec,
{
    let mut v = match warm_start {
        Some(w) if w.len() == dim && w.norm() > 0.0 => w.unscale(w.norm()),
        _ => power_iteration_start(dim),
    };
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let av = apply(&v);
        let norm = av.norm();
        if norm == 0.0 {
            // Operator annihilates the iterate: 0 is the best estimate.
            return (0.0, v);
        }
        let next = av.unscale(norm);
        let lambda_next = next.dotc(&apply(&next)).re;
        let converged = (lambda_next - lambda).abs() <= tol * lambda_next.abs().max(1e-300);
        v = next;
        lambda = lambda_next;
        if converged {
            break;
        }
    }
    (lambda.max(0.0), v)
}

/// Certified upper bound on the top eigenvalue of a Hermitian PSD matrix:
/// the smallest of trace, Frobenius norm, and the Gershgorin row bound.
/// Each is a true upper bound, so the minimum is too.
pub fn psd_top_eigenvalue_upper_bound(a: &CMat) -> f64 {
    let trace = a.trace().re;
    let fro = a.norm();
    let gershgorin = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    trace.min(fro).min(gershgorin).max(0.0)
}

/// Pairwise (cascade) summation: splits recursively and adds halves.
///
/// The summation tree depends only on the slice length, never on thread
/// count or chunk scheduling, so reductions built on it are reproducible and
/// carry O(log n) rounding error instead of O(n).
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        1 => x[0],
        2 => x[0] + x[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
        }
    }
}

/// Sample mean and standard error (sample std over √n; 0 for n = 1).
pub fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    assert!(!x.is_empty(), "mean_and_stderr needs at least one value");
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = x.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let sample_var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (sample_var / n).sqrt())
}
