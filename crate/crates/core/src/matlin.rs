//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Every tolerance here is
//! relative to the Frobenius norm of the input so that checks do not depend
//! on the scale of the correlation matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative cutoff applied to singular values / eigenvalues when forming
/// projectors and pseudo-inverses.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Relative Hermitian-symmetry tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative tolerance below zero still accepted as a PSD eigenvalue.
pub const PSD_TOL: f64 = 1e-10;
/// Condition-number ceiling for `solve_hpd`.
pub const MAX_CONDITION: f64 = 1e14;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn cmatrix(rows: usize, cols: usize, row_major: &[C64]) -> Result<CMatrix> {
    if row_major.len() != rows * cols {
        return Err(Error::DimMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            row_major.len()
        )));
    }
    if row_major.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(CMatrix::from_row_slice(rows, cols, row_major))
}

/// Real diagonal matrix.
pub fn rdiag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Real part of the trace.
pub fn trace_re(a: &CMatrix) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `tr(A * B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `‖a − b‖_F / max(‖b‖_F, floor)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn check_hermitian(a: &CMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let asymmetry = (a - a.adjoint()).norm();
    let tolerance = HERMITIAN_TOL * a.norm();
    if asymmetry > tolerance {
        return Err(Error::NotHermitian { asymmetry, tolerance });
    }
    Ok(())
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(a: &CMatrix) -> CMatrix {
    // nalgebra stores column-major, so the raw slice is already vec(a).
    CMatrix::from_column_slice(a.len(), 1, a.as_slice())
}

/// Block-diagonal assembly of (possibly rectangular) blocks.
pub fn blkdiag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Real eigenvalues, sorted in descending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEig {
    /// The first `n` eigenvectors as an `dim × n` matrix.
    pub fn leading_vectors(&self, n: usize) -> CMatrix {
        self.vectors.columns(0, n).into_owned()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = rdiag(&self.values);
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Rotates a vector so its largest-modulus entry (first one on ties) is real
/// and positive. Makes eigenvector output reproducible.
fn normalize_phase(v: &mut nalgebra::DVectorViewMut<'_, C64>) {
    let mut best = 0;
    let mut best_mod = -1.0;
    for (k, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mod * (1.0 + 1e-12) {
            best = k;
            best_mod = m;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best].conj() / best_mod;
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Hermitian eigen-decomposition with eigenvalues sorted descending.
pub fn herm_eig(a: &CMatrix) -> Result<HermEig> {
    check_hermitian(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermEig { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the decomposition's own order on exact ties.
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        normalize_phase(&mut vectors.column_mut(dst));
    }
    Ok(HermEig { values, vectors })
}

fn psd_eig(a: &CMatrix) -> Result<HermEig> {
    let mut eig = herm_eig(a)?;
    let floor = -PSD_TOL * a.norm();
    if let Some(&min) = eig.values.last() {
        if min < floor {
            return Err(Error::NotPsd { eigenvalue: min });
        }
    }
    for v in eig.values.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(eig)
}

fn spectral_fn(eig: &HermEig, f: impl Fn(f64) -> f64) -> CMatrix {
    let vals: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    let mut scaled = eig.vectors.clone();
    for (j, &v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    scaled * eig.vectors.adjoint()
}

/// Principal square root of a Hermitian PSD matrix.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = psd_eig(a)?;
    Ok(spectral_fn(&eig, f64::sqrt))
}

/// Square root and inverse square root of a Hermitian positive definite
/// matrix.
pub fn hpd_sqrt_pair(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let eig = psd_eig(a)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min <= max / MAX_CONDITION || min <= 0.0 {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(Error::Singular { condition });
    }
    Ok((spectral_fn(&eig, f64::sqrt), spectral_fn(&eig, |l| 1.0 / l.sqrt())))
}

/// Largest eigenvalue of a Hermitian PSD matrix (its spectral norm).
pub fn psd_spectral_norm(a: &CMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.values.first().copied().unwrap_or(0.0).max(0.0))
}

/// Orthonormal basis of the column space of `a`, using the relative
/// singular-value cutoff.
pub fn range_basis(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return CMatrix::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return CMatrix::zeros(m, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > PINV_CUTOFF * smax)
        .collect();
    let mut basis = CMatrix::zeros(m, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    basis
}

/// Orthogonal projector onto the column space of `a`, i.e. `a (a* a)^+ a*`.
pub fn range_projector(a: &CMatrix) -> CMatrix {
    let v = range_basis(a);
    &v * v.adjoint()
}

/// Solves `a x = b` for Hermitian positive definite `a` by Cholesky.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimMismatch(format!(
            "solve_hpd: a is {}x{}, b is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    let diag = chol.l_dirty().diagonal();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in diag.iter() {
        lo = lo.min(z.re);
        hi = hi.max(z.re);
    }
    // cond(a) is at least (max L_kk / min L_kk)^2; cheap and monotone in the
    // smallest pivot.
    let condition = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    Ok(chol.solve(b))
}

pub fn row_norm_sqr(a: &CMatrix, row: usize) -> f64 {
    a.row(row).iter().map(|z| z.norm_sqr()).sum()
}

pub fn col_norm_sqr(a: &CMatrix, col: usize) -> f64 {
    a.column(col).iter().map(|z| z.norm_sqr()).sum()
}
