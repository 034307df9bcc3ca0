//! Dense complex linear algebra helpers shared across the crate.
//!
//! Thin wrappers over nalgebra with the conventions the rest of the crate
//! relies on: Hermitian eigendecompositions come back sorted descending,
//! positive-semidefinite matrix functions clamp rounding-level negative
//! eigenvalues instead of propagating them, and the structure matrices of the
//! two phase-space representations are built in one place.
//!
//! Representation conventions. A state of `n` modes is described either by
//! the quadrature vector (x_1..x_n, p_1..p_n) with symplectic form
//! Omega = [[0, I], [-I, 0]], or by the ladder vector (a_1..a_n, a†_1..a†_n)
//! with form K = diag(I, -I). The unitary U = (1/sqrt 2) [[I, iI], [I, -iI]]
//! maps the first to the second and satisfies U (i Omega) U† = K.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// K = diag(I_n, -I_n): the symplectic form of the ladder representation.
pub fn k_matrix(n: usize) -> CMat {
    let mut k = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        k[(i, i)] = cr(1.0);
        k[(n + i, n + i)] = cr(-1.0);
    }
    k
}

/// Omega = [[0, I], [-I, 0]]: the symplectic form of the quadrature representation.
pub fn omega_matrix(n: usize) -> RMat {
    let mut w = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

/// U = (1/sqrt 2) [[I, iI], [I, -iI]]: quadrature-to-ladder basis change.
pub fn u_transform(n: usize) -> CMat {
    let s = 1.0 / 2.0_f64.sqrt();
    let mut u = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        u[(i, i)] = cr(s);
        u[(i, n + i)] = c(0.0, s);
        u[(n + i, i)] = cr(s);
        u[(n + i, n + i)] = c(0.0, -s);
    }
    u
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius norm.
#[inline]
pub fn frob(m: &CMat) -> f64 {
    m.norm()
}

/// Hermitian part (m + m†)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
///
/// The input is replaced by its Hermitian part before factorization, so the
/// caller is responsible for having checked that the anti-Hermitian residue
/// is noise. Returns (eigenvalues, eigenvectors as columns).
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigh expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let se = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Hermitian square root of a positive semidefinite matrix.
///
/// Eigenvalues in [-clamp, 0) are treated as rounding noise and clamped to
/// zero; anything below -clamp is an error.
pub fn sqrtm_psd(m: &CMat, clamp: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(m)?;
    let mut roots = Vec::with_capacity(vals.len());
    for &v in &vals {
        if v < -clamp {
            return Err(Error::Numerical(format!(
                "matrix square root of a non-PSD matrix: eigenvalue {v:.3e} below -{clamp:.1e}"
            )));
        }
        roots.push(cr(v.max(0.0).sqrt()));
    }
    let d = CMat::from_diagonal(&CVec::from_vec(roots));
    Ok(&vecs * d * vecs.adjoint())
}

/// Square root and inverse square root of a positive definite matrix from a
/// single factorization.
pub fn sqrtm_and_inv_sqrtm(m: &CMat) -> Result<(CMat, CMat)> {
    let (vals, vecs) = eigh(m)?;
    let min = vals.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Err(Error::Numerical(format!(
            "matrix is not positive definite: minimum eigenvalue {min:.3e}"
        )));
    }
    let root = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|v| cr(v.sqrt())),
    ));
    let inv_root = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|v| cr(1.0 / v.sqrt())),
    ));
    Ok((
        &vecs * root * vecs.adjoint(),
        &vecs * inv_root * vecs.adjoint(),
    ))
}

pub fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

/// Determinant that must be real: the imaginary part is checked against
/// `imag_tol` scaled by the magnitude, then dropped.
pub fn det_re(m: &CMat, imag_tol: f64, what: &str) -> Result<f64> {
    let d = det(m);
    if d.im.abs() > imag_tol * d.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "{what}: determinant {d} has a non-negligible imaginary part"
        )));
    }
    Ok(d.re)
}

pub fn inv(m: &CMat, what: &str) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical(format!("{what}: matrix is singular")))
}

/// Solve m x = b for a square m.
pub fn solve(m: &CMat, b: &CMat, what: &str) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular system")))
}

/// Solve m x = b for a single right-hand-side vector.
pub fn solve_vec(m: &CMat, b: &CVec, what: &str) -> Result<CVec> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical(format!("{what}: singular system")))
}

/// Trace that must be real: the imaginary part is checked against `imag_tol`
/// scaled by the magnitude, then dropped.
pub fn trace_re(m: &CMat, imag_tol: f64, what: &str) -> Result<f64> {
    let t = m.trace();
    if t.im.abs() > imag_tol * t.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "{what}: trace {t} has a non-negligible imaginary part"
        )));
    }
    Ok(t.re)
}

/// Matrix exponential.
pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Real quadratic form v† m v of a Hermitian m; the imaginary residue is dropped.
pub fn quad_form_re(m: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}
