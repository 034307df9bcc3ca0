//! Symplectic spectra and Williamson normal forms in the ladder representation.
//!
//! For a physical covariance sigma the matrix K sigma has real eigenvalues in
//! +/- pairs; the positive half are the symplectic eigenvalues lambda_i >= 1.
//! Williamson's theorem factors sigma = S D S† with S symplectic
//! (S K S† = K, same block structure [[alpha, beta], [conj beta, conj alpha]])
//! and D = diag(lambda_1..lambda_n, lambda_1..lambda_n), lambdas sorted
//! descending.
//!
//! Everything is reduced to Hermitian eigenproblems: K sigma is similar to the
//! Hermitian matrix G = sigma^{1/2} K sigma^{1/2}, whose eigenvectors w map to
//! eigenvectors v = sigma^{-1/2} w of K sigma. Columns of S are then K v_i for
//! the positive branch, after K-normalization (v† K v = 1) and gauge fixing.
//!
//! Gauge convention: the overall phase of each column is fixed by making its
//! largest-magnitude alpha-block entry real and positive (ties broken by the
//! lowest row index). Degenerate eigenvalue groups (gap < tol.degen) are
//! K-orthogonalized by modified Gram-Schmidt in sorted order and the result
//! carries a `degenerate` gauge tag; consumers that need smooth factors across
//! nearby decompositions must check that tag.

use crate::error::{Error, Result};
use crate::linalg::{cr, eigh, frob, k_matrix, sqrtm_and_inv_sqrtm, CMat, CVec, RMat};
use crate::state::Tolerances;
use num_complex::Complex64 as C64;

/// Symplectic eigenvalues of a covariance matrix, sorted descending, along
/// with the worst +/- pairing residual (relative per pair).
pub fn symplectic_eigenvalues_with_pairing(
    sigma: &CMat,
    _tol: &Tolerances,
) -> Result<(Vec<f64>, f64)> {
    let n2 = sigma.nrows();
    if n2 % 2 != 0 || sigma.ncols() != n2 {
        return Err(Error::Dimension(format!(
            "covariance must be 2n x 2n, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let n = n2 / 2;
    let (root, _) = sqrtm_and_inv_sqrtm(sigma)?;
    let g = &root * k_matrix(n) * &root;
    let (vals, _) = eigh(&g)?;
    if vals[n - 1] <= 0.0 || vals[n] >= 0.0 {
        return Err(Error::Structure(
            "eigenvalues of K sigma do not split into n positive and n negative".into(),
        ));
    }
    let mut pairing = 0.0_f64;
    for i in 0..n {
        let (pos, neg) = (vals[i], vals[n2 - 1 - i]);
        pairing = pairing.max((pos + neg).abs() / pos.max(1.0));
    }
    Ok((vals[..n].to_vec(), pairing))
}

/// Symplectic eigenvalues sorted descending, with the pairing residual
/// enforced against `tol.pair`.
pub fn symplectic_eigenvalues(sigma: &CMat, tol: &Tolerances) -> Result<Vec<f64>> {
    let (lambdas, pairing) = symplectic_eigenvalues_with_pairing(sigma, tol)?;
    if pairing > tol.pair {
        return Err(Error::Structure(format!(
            "+/- pairing residual {pairing:.3e} exceeds {:.3e}",
            tol.pair
        )));
    }
    Ok(lambdas)
}

/// Closed form for two modes: with A = K sigma,
/// lambda_{1,2} = (1/2) sqrt(tr[A^2] ± sqrt((tr[A^2])^2 - 16 det A)).
/// Returned descending.
pub fn symplectic_eigenvalues_two_mode(sigma: &CMat) -> Result<[f64; 2]> {
    if sigma.nrows() != 4 || sigma.ncols() != 4 {
        return Err(Error::Dimension(format!(
            "two-mode closed form needs a 4x4 covariance, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let a = k_matrix(2) * sigma;
    let tr_a2 = (&a * &a).trace();
    if tr_a2.im.abs() > 1e-9 * tr_a2.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "tr[(K sigma)^2] = {tr_a2} is not real"
        )));
    }
    let det_a = a.lu().determinant();
    if det_a.im.abs() > 1e-9 * det_a.re.abs().max(1.0) {
        return Err(Error::Numerical(format!("det(K sigma) = {det_a} is not real")));
    }
    let t = tr_a2.re;
    let disc = (t * t - 16.0 * det_a.re).max(0.0).sqrt();
    let l1 = 0.5 * (t + disc).max(0.0).sqrt();
    let l2 = 0.5 * (t - disc).max(0.0).sqrt();
    Ok([l1, l2])
}

/// A validated symplectic matrix of the ladder representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    m: CMat,
}

impl SymplecticMatrix {
    /// Validate S K S† = K and the [[alpha, beta], [conj beta, conj alpha]]
    /// block structure, then wrap.
    pub fn new(m: CMat, tol: &Tolerances) -> Result<Self> {
        let n2 = m.nrows();
        if n2 % 2 != 0 || m.ncols() != n2 {
            return Err(Error::Dimension(format!(
                "symplectic matrix must be 2n x 2n, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = n2 / 2;
        let scale = frob(&m).powi(2).max(1.0);
        let k = k_matrix(n);
        let res = frob(&(&m * &k * m.adjoint() - &k));
        if res > tol.symp * scale {
            return Err(Error::Structure(format!(
                "S K S† - K residual {res:.3e} exceeds {:.3e}",
                tol.symp * scale
            )));
        }
        let alpha: CMat = m.view((0, 0), (n, n)).into();
        let beta: CMat = m.view((0, n), (n, n)).into();
        let alpha_c: CMat = m.view((n, n), (n, n)).into();
        let beta_c: CMat = m.view((n, 0), (n, n)).into();
        let block = frob(&(&alpha_c - alpha.map(|z| z.conj())))
            .hypot(frob(&(&beta_c - beta.map(|z| z.conj()))));
        if block > tol.symp * scale.sqrt().max(1.0) {
            return Err(Error::Structure(format!(
                "conjugate block residual {block:.3e}"
            )));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn alpha(&self) -> CMat {
        let n = self.modes();
        self.m.view((0, 0), (n, n)).into()
    }

    pub fn beta(&self) -> CMat {
        let n = self.modes();
        self.m.view((0, n), (n, n)).into()
    }

    /// S^{-1} = K S† K, exact for symplectic S.
    pub fn inverse(&self) -> CMat {
        let k = k_matrix(self.modes());
        &k * self.m.adjoint() * &k
    }
}

/// Record of the gauge-fixing applied to a Williamson factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTag {
    /// True when at least two symplectic eigenvalues fell in one degenerate
    /// group; the factors are then deterministic but not unique, and
    /// finite-difference consumers must refuse them.
    pub degenerate: bool,
    /// Index ranges (into the sorted eigenvalue list) of the degenerate groups.
    pub groups: Vec<(usize, usize)>,
}

/// Williamson factorization sigma = S D S†.
#[derive(Debug, Clone)]
pub struct WilliamsonFactors {
    pub s: SymplecticMatrix,
    /// Symplectic eigenvalues, sorted descending.
    pub lambdas: Vec<f64>,
    pub gauge: GaugeTag,
}

impl WilliamsonFactors {
    /// D = diag(lambda_1..lambda_n, lambda_1..lambda_n).
    pub fn d_matrix(&self) -> CMat {
        let n = self.lambdas.len();
        let mut d = CMat::zeros(2 * n, 2 * n);
        for (i, &l) in self.lambdas.iter().enumerate() {
            d[(i, i)] = cr(l);
            d[(n + i, n + i)] = cr(l);
        }
        d
    }

    /// S D S†.
    pub fn reconstruct(&self) -> CMat {
        self.s.matrix() * self.d_matrix() * self.s.matrix().adjoint()
    }
}

fn k_inner(n: usize, a: &CVec, b: &CVec) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        acc += a[i].conj() * b[i] - a[n + i].conj() * b[n + i];
    }
    acc
}

/// Williamson decomposition with the deterministic gauge described in the
/// module docs. Fails if the covariance is not positive definite, if the
/// K-Gram within a degenerate group loses rank, or if the reconstruction
/// residual exceeds tol.recon (relative).
pub fn williamson_decompose(sigma: &CMat, tol: &Tolerances) -> Result<WilliamsonFactors> {
    let n2 = sigma.nrows();
    if n2 % 2 != 0 || sigma.ncols() != n2 {
        return Err(Error::Dimension(format!(
            "covariance must be 2n x 2n, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let n = n2 / 2;
    let (root, inv_root) = sqrtm_and_inv_sqrtm(sigma)?;
    let g = &root * k_matrix(n) * &root;
    let (vals, w) = eigh(&g)?;
    if vals[n - 1] <= 0.0 || vals[n] >= 0.0 {
        return Err(Error::Structure(
            "eigenvalues of K sigma do not split into n positive and n negative".into(),
        ));
    }
    let lambdas: Vec<f64> = vals[..n].to_vec();

    // Positive-branch eigenvectors of K sigma.
    let mut vs: Vec<CVec> = (0..n).map(|i| &inv_root * CVec::from(w.column(i))).collect();

    // Degenerate groups over the sorted (descending) eigenvalues.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for i in 1..=n {
        if i == n || lambdas[i - 1] - lambdas[i] > tol.degen {
            groups.push((start, i));
            start = i;
        }
    }
    let degenerate = groups.iter().any(|&(a, b)| b - a > 1);

    // K-orthonormalize: modified Gram-Schmidt inside each group (the K-Gram
    // restricted to a positive-branch eigenspace is positive definite), then
    // K-normalize every column.
    for &(a, b) in &groups {
        for j in a..b {
            for k in a..j {
                let overlap = k_inner(n, &vs[k], &vs[j]);
                let proj = &vs[k] * overlap;
                vs[j] -= proj;
            }
            let nrm = k_inner(n, &vs[j], &vs[j]).re;
            if nrm <= 1e-12 {
                return Err(Error::Numerical(format!(
                    "K-norm collapsed to {nrm:.3e} while orthogonalizing a degenerate group"
                )));
            }
            let scale = cr(1.0 / nrm.sqrt());
            vs[j] *= scale;
        }
    }

    // Gauge: rotate each column so its largest-magnitude alpha entry is real
    // positive; ties resolved by the lowest row index.
    for v in &mut vs {
        let mut best = 0usize;
        for row in 1..n {
            if v[row].norm() > v[best].norm() {
                best = row;
            }
        }
        let mag = v[best].norm();
        if mag <= 1e-14 {
            return Err(Error::Numerical(
                "alpha block of a Williamson column vanished".into(),
            ));
        }
        let phase = v[best] / cr(mag);
        let rot = phase.conj();
        *v *= rot;
    }

    // Assemble S = [[alpha, beta], [conj beta, conj alpha]] from columns
    // S_{:,i} = K v_i: alpha_{:,i} = x_i, beta_{:,i} = -conj(y_i).
    let mut s = CMat::zeros(n2, n2);
    for (i, v) in vs.iter().enumerate() {
        for row in 0..n {
            let x = v[row];
            let y = v[n + row];
            s[(row, i)] = x;
            s[(n + row, n + i)] = x.conj();
            s[(row, n + i)] = -y.conj();
            s[(n + row, i)] = -y;
        }
    }

    let s = SymplecticMatrix::new(s, tol)?;
    let factors = WilliamsonFactors {
        s,
        lambdas,
        gauge: GaugeTag {
            degenerate,
            groups: groups.into_iter().filter(|&(a, b)| b - a > 1).collect(),
        },
    };
    let res = frob(&(factors.reconstruct() - sigma));
    if res > tol.recon * frob(sigma).max(1.0) {
        return Err(Error::Numerical(format!(
            "Williamson reconstruction residual {res:.3e} exceeds {:.3e}",
            tol.recon * frob(sigma).max(1.0)
        )));
    }
    Ok(factors)
}

/// Map a ladder-representation symplectic matrix to the quadrature
/// representation: S_R = [[Re(alpha+beta), -Im(alpha-beta)],
/// [Im(alpha+beta), Re(alpha-beta)]].
pub fn symplectic_to_real(s: &SymplecticMatrix) -> RMat {
    let n = s.modes();
    let alpha = s.alpha();
    let beta = s.beta();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (alpha[(i, j)], beta[(i, j)]);
            out[(i, j)] = a.re + b.re;
            out[(i, n + j)] = -(a.im - b.im);
            out[(n + i, j)] = a.im + b.im;
            out[(n + i, n + j)] = a.re - b.re;
        }
    }
    out
}

/// Inverse of [`symplectic_to_real`]: with S_R = [[a, b], [g, d]],
/// alpha = (a + d + i g - i b)/2 and beta = (a - d + i g + i b)/2.
pub fn symplectic_from_real(sr: &RMat, tol: &Tolerances) -> Result<SymplecticMatrix> {
    let n2 = sr.nrows();
    if n2 % 2 != 0 || sr.ncols() != n2 {
        return Err(Error::Dimension(format!(
            "symplectic matrix must be 2n x 2n, got {}x{}",
            sr.nrows(),
            sr.ncols()
        )));
    }
    let n = n2 / 2;
    let mut out = CMat::zeros(n2, n2);
    for i in 0..n {
        for j in 0..n {
            let a = sr[(i, j)];
            let b = sr[(i, n + j)];
            let g = sr[(n + i, j)];
            let d = sr[(n + i, n + j)];
            let alpha = C64::new((a + d) / 2.0, (g - b) / 2.0);
            let beta = C64::new((a - d) / 2.0, (g + b) / 2.0);
            out[(i, j)] = alpha;
            out[(i, n + j)] = beta;
            out[(n + i, j)] = beta.conj();
            out[(n + i, n + j)] = alpha.conj();
        }
    }
    SymplecticMatrix::new(out, tol)
}
