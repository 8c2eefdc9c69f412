//! Dense complex-matrix primitives: Hermitian log-determinants,
//! pseudoinverses, the 2x2 LQ transform and MMSE-type regularized inverses.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Singular values below `DEFAULT_RANK_TOL * sigma_max` are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative eigenvalue floor below which a Hermitian matrix is rejected as
/// not PSD. Values in `[-PSD_CLAMP * lambda_max, 0)` are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from real row-major entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
    CMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `max|A - A^H| <= 1e-10 * max|A|`.
pub fn is_hermitian(a: &CMatrix) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = max_abs(a);
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// Symmetrizes round-off: returns `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

fn check_hermitian(a: &CMatrix, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Contract(format!(
            "{what}: expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_hermitian(a) {
        return Err(Error::Contract(format!("{what}: matrix is not Hermitian")));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix with round-off negatives clamped to 0.
fn clamped_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = hermitian_part(a).symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut values = Vec::with_capacity(eig.eigenvalues.len());
    for &v in eig.eigenvalues.iter() {
        if v < -PSD_CLAMP * lambda_max.max(f64::MIN_POSITIVE) {
            return Err(Error::NegativeEigenvalue { eigenvalue: v });
        }
        values.push(v.max(0.0));
    }
    Ok((values, eig.eigenvectors))
}

/// `log2 det(A)` for Hermitian PSD `A`.
///
/// Tries a Cholesky factorization first; if that fails or a pivot is tiny
/// the eigenvalues are computed, clamped at `-1e-9 * lambda_max`, and summed
/// in the log domain. Eigenvalues at round-off level count as zero, so a
/// singular matrix gives `-inf`.
pub fn logdet_hermitian_psd(a: &CMatrix) -> Result<f64> {
    check_hermitian(a, "logdet")?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let n = a.nrows();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].re.abs()));
    if let Some(chol) = hermitian_part(a).cholesky() {
        let l = chol.l_dirty();
        // complex Cholesky does not fail on negative pivots; accept only
        // clearly positive real ones
        let pivots: Vec<f64> = (0..n).map(|i| l[(i, i)]).map(|d| if d.im.abs() <= 1e-12 * d.re.abs() { d.re } else { -1.0 }).collect();
        if pivots.iter().all(|&d| d > 0.0 && d.is_finite() && d * d > 1e-12 * scale) {
            return Ok(2.0 * pivots.iter().map(|d| d.log2()).sum::<f64>());
        }
    }
    let (values, _) = clamped_eigen(a)?;
    let lambda_max = values.iter().fold(0.0f64, |m, &v| m.max(v));
    let noise = n as f64 * f64::EPSILON * lambda_max;
    Ok(values.iter().map(|&v| if v <= noise { f64::NEG_INFINITY } else { v.log2() }).sum())
}

/// `log2 det(I + A)` for Hermitian PSD `A`.
pub fn logdet_identity_plus(a: &CMatrix) -> Result<f64> {
    let n = a.nrows();
    logdet_hermitian_psd(&(identity(n) + a))
}

/// Moore-Penrose pseudoinverse through the SVD. Singular values below
/// `rank_tol * sigma_max` are dropped; the zero matrix maps to the zero
/// matrix of transposed shape.
pub fn pseudo_inverse(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if !(rank_tol > 0.0) {
        return Err(Error::Precondition(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(CMatrix::zeros(n, m));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    if sigma_max == 0.0 {
        return Ok(CMatrix::zeros(n, m));
    }
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let mut out = CMatrix::zeros(n, m);
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s <= rank_tol * sigma_max {
            continue;
        }
        let v_col = v_t.row(idx).adjoint();
        let u_row = u.column(idx).adjoint();
        out += (v_col * u_row) * c(1.0 / s, 0.0);
    }
    Ok(out)
}

/// Result of the 2x2 LQ transform `H = L Q`.
#[derive(Debug, Clone)]
pub struct Lq {
    pub l: CMatrix,
    pub q: CMatrix,
}

impl Lq {
    /// Normalized coefficients `(f, g) = (L21/L11, L22/L11)` of the
    /// equivalent triangular channel `[[1, 0], [f, g]]`.
    pub fn normalized(&self) -> (Complex64, Complex64) {
        let l11 = self.l[(0, 0)];
        (self.l[(1, 0)] / l11, self.l[(1, 1)] / l11)
    }
}

/// LQ decomposition of a 2x2 matrix with a nonzero first row. `L` is lower
/// triangular with a real nonnegative diagonal and `Q` is unitary.
pub fn lq_decompose(h: &CMatrix) -> Result<Lq> {
    if h.shape() != (2, 2) {
        return Err(Error::Contract(format!(
            "lq_decompose expects a 2x2 matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let norm1 = (h[(0, 0)].norm_sqr() + h[(0, 1)].norm_sqr()).sqrt();
    if norm1 == 0.0 {
        return Err(Error::Precondition(
            "first row is zero; swap the roles of the two users".into(),
        ));
    }
    let q1 = [h[(0, 0)] / norm1, h[(0, 1)] / norm1];
    // Orthogonal complement of q1 in C^2, then rotate its phase so that
    // L22 = h2 q2^H is real and nonnegative.
    let mut q2 = [-q1[1].conj(), q1[0].conj()];
    let h2 = [h[(1, 0)], h[(1, 1)]];
    let l22 = h2[0] * q2[0].conj() + h2[1] * q2[1].conj();
    if l22.norm() > 0.0 {
        let phase = l22 / l22.norm();
        q2 = [q2[0] * phase, q2[1] * phase];
    }
    let l21 = h2[0] * q1[0].conj() + h2[1] * q1[1].conj();
    let l22 = h2[0] * q2[0].conj() + h2[1] * q2[1].conj();
    let l = CMatrix::from_row_slice(2, 2, &[c(norm1, 0.0), c(0.0, 0.0), l21, c(l22.re.max(0.0), 0.0)]);
    let q = CMatrix::from_row_slice(2, 2, &[q1[0], q1[1], q2[0], q2[1]]);
    Ok(Lq { l, q })
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn inverse_hermitian_pd(a: &CMatrix) -> Result<CMatrix> {
    check_hermitian(a, "inverse")?;
    match hermitian_part(a).cholesky() {
        Some(chol) => Ok(hermitian_part(&chol.inverse())),
        None => Err(Error::Numerical("matrix is not positive definite".into())),
    }
}

/// `(p^{-1} I + G^H G)^{-1}` for an `r x m` matrix `G` (an empty `G` gives
/// `p I`).
///
/// Evaluated through the thin SVD `G = U S V^H` as
/// `p (I - V V^H) + V diag(1 / (p^{-1} + s_i^2)) V^H`, which keeps the
/// null-space directions exact at large `p`.
pub fn regularized_gram_inverse(g: &CMatrix, m: usize, p: f64) -> CMatrix {
    let mut out = identity(m) * c(p, 0.0);
    if g.nrows() == 0 {
        return out;
    }
    let svd = g.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        let v = v_t.row(idx).adjoint();
        let proj = &v * v.adjoint();
        let weight = 1.0 / (1.0 / p + s * s) - p;
        out += proj * c(weight, 0.0);
    }
    hermitian_part(&out)
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues below
/// `-neg_tol` (absolute) are an error, the rest are clamped at zero.
pub fn hermitian_sqrt_psd(a: &CMatrix, neg_tol: f64) -> Result<CMatrix> {
    check_hermitian(a, "sqrt")?;
    let eig = hermitian_part(a).symmetric_eigen();
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (idx, &v) in eig.eigenvalues.iter().enumerate() {
        if v < -neg_tol {
            return Err(Error::NegativeEigenvalue { eigenvalue: v });
        }
        let col = eig.eigenvectors.column(idx);
        out += (col * col.adjoint()) * c(v.max(0.0).sqrt(), 0.0);
    }
    Ok(out)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn eigen_range(a: &CMatrix) -> (f64, f64) {
    let eig = hermitian_part(a).symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Loewner order check `A <= B` up to `tol * max(1, |B|)`.
pub fn loewner_le(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let scale = max_abs(b).max(1.0);
    let (lo, _) = eigen_range(&(b - a));
    lo >= -tol * scale
}

pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    frobenius_sq(a).sqrt()
}
