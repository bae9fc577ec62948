//! Small dense linear-algebra helpers shared by the phase-space and invariant code.
//!
//! Everything here works on `nalgebra` dynamic matrices; the dimensions involved
//! are tiny (2d × 2d with d rarely above 3), so clarity wins over blocking.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{AtTime, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// The canonical symplectic form `[[0, 1], [-1, 0]]` for `d` degrees of freedom.
pub fn symplectic_form(d: usize) -> Matrix {
    let mut s = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        s[(i, d + i)] = 1.0;
        s[(d + i, i)] = -1.0;
    }
    s
}

/// Assemble a 2×2 block matrix from four equally sized square blocks.
pub fn block2(ul: &Matrix, ur: &Matrix, ll: &Matrix, lr: &Matrix) -> Matrix {
    let d = ul.nrows();
    let mut out = Matrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(ul);
    out.view_mut((0, d), (d, d)).copy_from(ur);
    out.view_mut((d, 0), (d, d)).copy_from(ll);
    out.view_mut((d, d), (d, d)).copy_from(lr);
    out
}

/// Stack two vectors of equal length.
pub fn stack(top: &Vector, bottom: &Vector) -> Vector {
    Vector::from_iterator(top.len() + bottom.len(), top.iter().chain(bottom.iter()).copied())
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// ‖M − Mᵀ‖ relative to ‖M‖ (absolute when M vanishes).
pub fn asymmetry(m: &Matrix) -> f64 {
    let num = (m - m.transpose()).norm();
    let den = m.norm();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

pub fn ensure_square(m: &Matrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

pub fn ensure_symmetric(m: &Matrix, what: &'static str, tol: f64) -> Result<()> {
    let residual = asymmetry(m);
    if residual > tol {
        return Err(Error::NotSymmetric { what, residual });
    }
    Ok(())
}

pub fn is_positive_definite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite()) && Cholesky::new(m.clone()).is_some()
}

/// Symmetric eigendecomposition with eigenvalues in ascending order and
/// eigenvectors as the matching columns.
pub fn sym_eigen(m: &Matrix) -> (Vector, Matrix) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Real power of a symmetric positive-definite matrix via its eigendecomposition.
pub fn spd_power(m: &Matrix, power: f64, what: &'static str) -> Result<Matrix> {
    let (values, vectors) = sym_eigen(m);
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotPositiveDefinite { what, at: AtTime::default() });
    }
    let scaled = Vector::from_iterator(values.len(), values.iter().map(|v| v.powf(power)));
    Ok(&vectors * Matrix::from_diagonal(&scaled) * vectors.transpose())
}

pub fn to_complex(m: &Matrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Symplectic eigenvalues of a covariance matrix, ascending, one per mode.
///
/// For K = Σ^{1/2} 𝒮 Σ^{1/2} (real antisymmetric) the spectrum of −K² is
/// {ν₁², ν₁², …, ν_d², ν_d²}.
pub fn symplectic_eigenvalues(sigma: &Matrix) -> Result<Vector> {
    let n = sigma.nrows();
    if n % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: n + 1, found: n });
    }
    let root = spd_power(sigma, 0.5, "covariance")?;
    let k = &root * symplectic_form(n / 2) * &root;
    let (values, _) = sym_eigen(&(-(&k * &k)));
    Ok(Vector::from_iterator(
        n / 2,
        (0..n / 2).map(|i| 0.5 * (values[2 * i].max(0.0).sqrt() + values[2 * i + 1].max(0.0).sqrt())),
    ))
}
