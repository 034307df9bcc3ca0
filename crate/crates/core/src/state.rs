//! Gaussian states in the ladder (complex) representation and conversions to
//! the quadrature (real) representation.
//!
//! A Gaussian state of `n` modes is stored as the pair (d, sigma) of first and
//! second moments of the ladder vector A = (a_1..a_n, a†_1..a†_n):
//!
//! ```text
//!   d_i      = <A_i>
//!   sigma_ij = <{Delta A_i, Delta A†_j}>,   Delta A = A - d
//! ```
//!
//! so the vacuum has d = 0, sigma = I. The structure this forces:
//! d = (d~, conj d~), sigma = [[X, Y], [conj Y, conj X]] with X Hermitian and
//! Y symmetric, sigma Hermitian overall, and physicality means every
//! symplectic eigenvalue of sigma is >= 1.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{c, cr, frob, CMat, CVec, RMat, RVec};
use crate::williamson;

/// Default numerical tolerances.
///
/// Residual tolerances marked "relative" are scaled by max(1, norm of the
/// object they test) at the point of use.
pub mod tol {
    /// Hermiticity and block-structure residual of sigma (relative).
    pub const HERM: f64 = 1e-10;
    /// Symplectic-identity residual S K S† - K (relative).
    pub const SYMP: f64 = 1e-10;
    /// Physicality slack: lambda_min >= 1 - PHYS.
    pub const PHYS: f64 = 1e-8;
    /// +/- pairing of the eigenvalues of K sigma (relative per pair).
    pub const PAIR: f64 = 1e-8;
    /// Williamson reconstruction residual (relative to norm of sigma).
    pub const RECON: f64 = 1e-9;
    /// Symplectic eigenvalues closer than this share a degenerate gauge group.
    pub const DEGEN: f64 = 1e-8;
    /// A mode with lambda within PURE of 1 counts as pure.
    pub const PURE: f64 = 1e-9;
    /// Iso-thermal detection: residual of A^2 - nu^2 I (relative).
    pub const ISO: f64 = 1e-8;
}

/// Bundle of the tolerances above, so call sites can override selectively.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub herm: f64,
    pub symp: f64,
    pub phys: f64,
    pub pair: f64,
    pub recon: f64,
    pub degen: f64,
    pub pure_mode: f64,
    pub iso: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: tol::HERM,
            symp: tol::SYMP,
            phys: tol::PHYS,
            pair: tol::PAIR,
            recon: tol::RECON,
            degen: tol::DEGEN,
            pure_mode: tol::PURE,
            iso: tol::ISO,
        }
    }
}

/// One structural check of a validation report.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of [`GaussianState::validate`]: every check with its measured
/// residual, plus the symplectic spectrum when it could be computed.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub symplectic_eigenvalues: Option<Vec<f64>>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|ch| ch.passed)
    }

    fn push(&mut self, name: &'static str, residual: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name,
            residual,
            tolerance,
            passed: residual <= tolerance,
        });
    }
}

/// Gaussian state in the ladder representation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: usize,
    d: CVec,
    sigma: CMat,
}

impl GaussianState {
    /// Build a state and check structure and physicality with default tolerances.
    pub fn new(modes: usize, d: CVec, sigma: CMat) -> Result<Self> {
        Self::new_with_tol(modes, d, sigma, &Tolerances::default())
    }

    pub fn new_with_tol(modes: usize, d: CVec, sigma: CMat, tol: &Tolerances) -> Result<Self> {
        let state = Self { modes, d, sigma };
        let report = state.validate(tol);
        if let Some(bad) = report.checks.iter().find(|ch| !ch.passed) {
            if bad.name == "physical" {
                let lambda_min = report
                    .symplectic_eigenvalues
                    .as_ref()
                    .and_then(|ls| ls.last().copied())
                    .unwrap_or(f64::NAN);
                return Err(Error::Unphysical {
                    lambda_min,
                    tol: tol.phys,
                });
            }
            return Err(Error::Structure(format!(
                "{} residual {:.3e} exceeds {:.3e}",
                bad.name, bad.residual, bad.tolerance
            )));
        }
        Ok(state)
    }

    /// Vacuum of `n` modes: d = 0, sigma = I.
    pub fn vacuum(n: usize) -> Self {
        Self {
            modes: n,
            d: CVec::zeros(2 * n),
            sigma: CMat::identity(2 * n, 2 * n),
        }
    }

    /// Product of thermal states with the given mean occupation numbers;
    /// mode i has symplectic eigenvalue 1 + 2 n_th[i].
    pub fn thermal(n_th: &[f64]) -> Result<Self> {
        let n = n_th.len();
        let mut sigma = CMat::identity(2 * n, 2 * n);
        for (i, &occ) in n_th.iter().enumerate() {
            if occ < 0.0 {
                return Err(Error::Input(format!(
                    "thermal occupation must be non-negative, got {occ}"
                )));
            }
            sigma[(i, i)] = cr(1.0 + 2.0 * occ);
            sigma[(n + i, n + i)] = cr(1.0 + 2.0 * occ);
        }
        Ok(Self {
            modes: n,
            d: CVec::zeros(2 * n),
            sigma,
        })
    }

    /// Coherent state: vacuum covariance with displacement alpha per mode.
    pub fn coherent(alphas: &[C64]) -> Self {
        let n = alphas.len();
        let mut st = Self::vacuum(n);
        for (i, &a) in alphas.iter().enumerate() {
            st.d[i] = a;
            st.d[n + i] = a.conj();
        }
        st
    }

    /// Assemble a state from its mode-space blocks: sigma = [[X, Y], [conj Y,
    /// conj X]] and d = (d_tilde, conj d_tilde). Validated like [`Self::new`],
    /// with the given tolerances.
    pub fn from_blocks(
        d_tilde: &[C64],
        x: &CMat,
        y: &CMat,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = d_tilde.len();
        if x.nrows() != n || x.ncols() != n || y.nrows() != n || y.ncols() != n {
            return Err(Error::Dimension(format!(
                "blocks must be {n}x{n} to match {n} displacement entries"
            )));
        }
        let mut sigma = CMat::zeros(2 * n, 2 * n);
        let mut d = CVec::zeros(2 * n);
        for i in 0..n {
            d[i] = d_tilde[i];
            d[n + i] = d_tilde[i].conj();
            for j in 0..n {
                sigma[(i, j)] = x[(i, j)];
                sigma[(n + i, n + j)] = x[(i, j)].conj();
                sigma[(i, n + j)] = y[(i, j)];
                sigma[(n + i, j)] = y[(i, j)].conj();
            }
        }
        Self::new_with_tol(n, d, sigma, tol)
    }

    /// Replace the displacement, keeping the covariance. `d_tilde` holds the
    /// first N entries; the conjugate half is filled in.
    pub fn with_displacement_tilde(mut self, d_tilde: &[C64]) -> Result<Self> {
        if d_tilde.len() != self.modes {
            return Err(Error::Dimension(format!(
                "expected {} displacement entries, got {}",
                self.modes,
                d_tilde.len()
            )));
        }
        for (i, &v) in d_tilde.iter().enumerate() {
            self.d[i] = v;
            self.d[self.modes + i] = v.conj();
        }
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn displacement(&self) -> &CVec {
        &self.d
    }

    /// First-mode half of the displacement, (d~)_i = <a_i>.
    pub fn displacement_tilde(&self) -> CVec {
        CVec::from_iterator(self.modes, (0..self.modes).map(|i| self.d[i]))
    }

    pub fn covariance(&self) -> &CMat {
        &self.sigma
    }

    /// X = <{Delta a, Delta a†}> block (Hermitian part of the covariance).
    pub fn x_block(&self) -> CMat {
        self.sigma.view((0, 0), (self.modes, self.modes)).into()
    }

    /// Y = <{Delta a, Delta a}> block (symmetric).
    pub fn y_block(&self) -> CMat {
        self.sigma
            .view((0, self.modes), (self.modes, self.modes))
            .into()
    }

    /// All structural and physicality checks, with measured residuals.
    pub fn validate(&self, tol: &Tolerances) -> ValidationReport {
        let n = self.modes;
        let mut report = ValidationReport {
            checks: Vec::new(),
            symplectic_eigenvalues: None,
        };

        let dim_ok = self.d.len() == 2 * n && self.sigma.nrows() == 2 * n && self.sigma.ncols() == 2 * n;
        report.push("dimensions", if dim_ok { 0.0 } else { 1.0 }, 0.5);
        if !dim_ok {
            return report;
        }

        let scale = frob(&self.sigma).max(1.0);
        report.push(
            "hermitian",
            frob(&(&self.sigma - self.sigma.adjoint())),
            tol.herm * scale,
        );

        // sigma = [[X, Y], [conj Y, conj X]]
        let x = self.x_block();
        let y = self.y_block();
        let xc: CMat = self.sigma.view((n, n), (n, n)).into();
        let yc: CMat = self.sigma.view((n, 0), (n, n)).into();
        let block_res = frob(&(&xc - x.map(|z| z.conj()))).hypot(frob(&(&yc - y.map(|z| z.conj()))));
        report.push("conjugate-blocks", block_res, tol.herm * scale);

        let dscale = self.d.norm().max(1.0);
        let mut d_res = 0.0_f64;
        for i in 0..n {
            d_res = d_res.max((self.d[n + i] - self.d[i].conj()).norm());
        }
        report.push("conjugate-displacement", d_res, tol.herm * dscale);

        match williamson::symplectic_eigenvalues_with_pairing(&self.sigma, tol) {
            Ok((lambdas, pairing_res)) => {
                report.push("pairing", pairing_res, tol.pair);
                let lambda_min = lambdas.last().copied().unwrap_or(f64::NAN);
                report.push("physical", (1.0 - lambda_min).max(0.0), tol.phys);
                report.symplectic_eigenvalues = Some(lambdas);
            }
            Err(_) => {
                // Covariance not PD: physicality fails outright.
                report.push("physical", f64::INFINITY, tol.phys);
            }
        }
        report
    }

    /// Symplectic eigenvalues of the covariance, sorted descending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        williamson::symplectic_eigenvalues(&self.sigma, &Tolerances::default())
    }

    /// Mean photon number of each mode: <a†_i a_i> = (X_ii - 1)/2 + |d~_i|^2.
    pub fn mean_photon_numbers(&self) -> Vec<f64> {
        (0..self.modes)
            .map(|i| (self.sigma[(i, i)].re - 1.0) / 2.0 + self.d[i].norm_sqr())
            .collect()
    }

    /// Push the state through a symplectic map: d -> S d, sigma -> S sigma S†.
    pub fn transformed(&self, s: &CMat) -> Result<Self> {
        if s.nrows() != 2 * self.modes || s.ncols() != 2 * self.modes {
            return Err(Error::Dimension(format!(
                "symplectic matrix is {}x{}, state has {} modes",
                s.nrows(),
                s.ncols(),
                self.modes
            )));
        }
        Ok(Self {
            modes: self.modes,
            d: s * &self.d,
            sigma: s * &self.sigma * s.adjoint(),
        })
    }

    /// Convert to the quadrature representation.
    ///
    /// With sigma = [[X, Y], [conj Y, conj X]] the quadrature covariance is
    /// [[Re(X + Y), Im(Y) - Im(X)], [Im(X) + Im(Y), Re(X - Y)]] and the
    /// quadrature mean is (sqrt2 Re d~, sqrt2 Im d~).
    pub fn to_real(&self) -> RealGaussianState {
        let n = self.modes;
        let x = self.x_block();
        let y = self.y_block();
        let mut sig = RMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let (xij, yij) = (x[(i, j)], y[(i, j)]);
                sig[(i, j)] = xij.re + yij.re;
                sig[(i, n + j)] = yij.im - xij.im;
                sig[(n + i, j)] = xij.im + yij.im;
                sig[(n + i, n + j)] = xij.re - yij.re;
            }
        }
        let mut d = RVec::zeros(2 * n);
        let s = 2.0_f64.sqrt();
        for i in 0..n {
            d[i] = s * self.d[i].re;
            d[n + i] = s * self.d[i].im;
        }
        RealGaussianState { d, sigma: sig }
    }

    /// Convert from the quadrature representation (inverse of [`to_real`]).
    ///
    /// With sigma_R = [[A, B], [B^T, C]]: X = (A + C)/2 + i (B^T - B)/2 and
    /// Y = (A - C)/2 + i (B + B^T)/2.
    pub fn from_real(real: &RealGaussianState) -> Result<Self> {
        let n2 = real.sigma.nrows();
        if n2 % 2 != 0 || real.sigma.ncols() != n2 || real.d.len() != n2 {
            return Err(Error::Dimension(format!(
                "quadrature state has sigma {}x{} and d of length {}",
                real.sigma.nrows(),
                real.sigma.ncols(),
                real.d.len()
            )));
        }
        let n = n2 / 2;
        let scale = real.sigma.norm().max(1.0);
        let asym = (&real.sigma - real.sigma.transpose()).norm();
        if asym > tol::HERM * scale {
            return Err(Error::Structure(format!(
                "quadrature covariance asymmetry {asym:.3e}"
            )));
        }
        let mut sigma = CMat::zeros(n2, n2);
        for i in 0..n {
            for j in 0..n {
                let a = real.sigma[(i, j)];
                let b = real.sigma[(i, n + j)];
                let g = real.sigma[(n + i, j)];
                let cc = real.sigma[(n + i, n + j)];
                let x = c((a + cc) / 2.0, (g - b) / 2.0);
                let y = c((a - cc) / 2.0, (g + b) / 2.0);
                sigma[(i, j)] = x;
                sigma[(i, n + j)] = y;
                sigma[(n + i, j)] = y.conj();
                sigma[(n + i, n + j)] = x.conj();
            }
        }
        let s = 1.0 / 2.0_f64.sqrt();
        let mut d = CVec::zeros(n2);
        for i in 0..n {
            let v = c(real.d[i] * s, real.d[n + i] * s);
            d[i] = v;
            d[n + i] = v.conj();
        }
        Self::new(n, d, sigma)
    }
}

/// Gaussian state in the quadrature representation (x_1..x_n, p_1..p_n),
/// normalized so the vacuum covariance is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGaussianState {
    pub d: RVec,
    pub sigma: RMat,
}

impl RealGaussianState {
    pub fn new(d: RVec, sigma: RMat) -> Result<Self> {
        let st = Self { d, sigma };
        // Round-trip through the ladder form runs the full validation.
        GaussianState::from_real(&st)?;
        Ok(st)
    }

    pub fn modes(&self) -> usize {
        self.d.len() / 2
    }
}
