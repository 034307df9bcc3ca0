//! Uhlmann fidelity between two-mode Gaussian states, in closed form, and a
//! fidelity-based quantum Fisher information estimate.
//!
//! With A = K sigma and the three determinant invariants
//!
//! * Delta  = det(sigma_1 + sigma_2),
//! * Gamma  = det(I + K sigma_1 K sigma_2),
//! * Lambda = det(sigma_1 + K) det(sigma_2 + K),
//!
//! the fidelity of two two-mode states is
//!
//! F = 4 exp(-delta_d† (sigma_1 + sigma_2)^{-1} delta_d)
//!     / ((sqrt(Gamma) + sqrt(Lambda)) - sqrt((sqrt(Gamma) + sqrt(Lambda))^2 - Delta)).
//!
//! All three invariants are nonnegative for physical states; tiny negative
//! values from rounding are clamped to zero, anything materially negative is
//! reported as a numerical error.

use crate::error::{Error, Result};
use crate::family::{FdConfig, StateFamily};
use crate::linalg::{det_re, k_matrix, solve_vec, CMat, CVec};
use crate::state::GaussianState;

/// Relative clamp for invariants that must be nonnegative.
const DET_CLAMP: f64 = 1e-12;
/// Imaginary part allowed in the determinant invariants, relative.
const DET_IMAG_TOL: f64 = 1e-8;

/// A fidelity value together with the determinant invariants behind it.
#[derive(Debug, Clone, Copy)]
pub struct FidelityBreakdown {
    /// The fidelity F in [0, 1].
    pub value: f64,
    /// det(sigma_1 + sigma_2).
    pub delta: f64,
    /// det(I + K sigma_1 K sigma_2).
    pub gamma: f64,
    /// det(sigma_1 + K) det(sigma_2 + K).
    pub lambda: f64,
    /// The displacement exponent -delta_d† (sigma_1 + sigma_2)^{-1} delta_d.
    pub exponent: f64,
}

fn clamp_nonneg(x: f64, scale: f64, what: &str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -DET_CLAMP * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!(
            "{what} is negative beyond rounding: {x:.6e} (scale {scale:.3e})"
        )))
    }
}

/// Uhlmann fidelity of two two-mode Gaussian states.
pub fn two_mode_fidelity(
    rho1: &GaussianState,
    rho2: &GaussianState,
) -> Result<FidelityBreakdown> {
    if rho1.modes() != 2 || rho2.modes() != 2 {
        return Err(Error::NotApplicable(format!(
            "the closed-form fidelity covers exactly two modes, got {} and {}",
            rho1.modes(),
            rho2.modes()
        )));
    }
    let k = k_matrix(2);
    let s1 = rho1.covariance();
    let s2 = rho2.covariance();
    let sum = s1 + s2;

    let delta_raw = det_re(&sum, DET_IMAG_TOL, "det(sigma_1 + sigma_2)")?;
    let gamma_raw = det_re(
        &(CMat::identity(4, 4) + &k * s1 * &k * s2),
        DET_IMAG_TOL,
        "det(I + K sigma_1 K sigma_2)",
    )?;
    let l1 = det_re(&(s1 + &k), DET_IMAG_TOL, "det(sigma_1 + K)")?;
    let l2 = det_re(&(s2 + &k), DET_IMAG_TOL, "det(sigma_2 + K)")?;
    let lambda_raw = l1 * l2;

    let scale = delta_raw.abs().max(gamma_raw.abs()).max(lambda_raw.abs());
    let delta = clamp_nonneg(delta_raw, scale, "det(sigma_1 + sigma_2)")?;
    let gamma = clamp_nonneg(gamma_raw, scale, "det(I + K sigma_1 K sigma_2)")?;
    let lambda = clamp_nonneg(lambda_raw, scale, "det(sigma_1 + K) det(sigma_2 + K)")?;

    let root_sum = gamma.sqrt() + lambda.sqrt();
    let under = clamp_nonneg(
        root_sum * root_sum - delta,
        scale,
        "(sqrt(Gamma) + sqrt(Lambda))^2 - Delta",
    )?;
    let denom = root_sum - under.sqrt();
    if denom <= 0.0 {
        return Err(Error::Numerical(format!(
            "fidelity denominator is not positive: {denom:.6e}"
        )));
    }

    let delta_d: CVec = rho2.displacement() - rho1.displacement();
    let exponent = if delta_d.norm() == 0.0 {
        0.0
    } else {
        let x = solve_vec(&sum, &delta_d, "sigma_1 + sigma_2")?;
        let q = delta_d.dotc(&x); // delta_d† (sum)^{-1} delta_d
        if q.im.abs() > 1e-8 * q.re.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "displacement quadratic form is not real: {q}"
            )));
        }
        -q.re
    };

    let value = 4.0 / denom * exponent.exp();
    Ok(FidelityBreakdown {
        // Rounding can push F a hair above 1 for near-identical states.
        value: value.min(1.0),
        delta,
        gamma,
        lambda,
        exponent,
    })
}

/// Append a vacuum mode so one-mode states can use the two-mode fidelity.
fn extend_with_vacuum(state: &GaussianState) -> Result<GaussianState> {
    let x = state.x_block();
    let y = state.y_block();
    let dt = state.displacement_tilde();
    let mut sigma = CMat::identity(4, 4);
    sigma[(0, 0)] = x[(0, 0)];
    sigma[(2, 2)] = x[(0, 0)].conj();
    sigma[(0, 2)] = y[(0, 0)];
    sigma[(2, 0)] = y[(0, 0)].conj();
    let mut d = CVec::zeros(4);
    d[0] = dt[0];
    d[2] = dt[0].conj();
    GaussianState::new(2, d, sigma)
}

/// Fisher information from the Bures metric by symmetric finite differences:
/// H(eps) is estimated as the average of 8 (1 - sqrt(F(rho(eps), rho(eps +/- h)))) / h^2.
///
/// One-mode families are padded with a vacuum mode (fidelity is unchanged);
/// only one- and two-mode families are supported.
pub fn bures_qfi_fd(family: &StateFamily, eps: f64, fd: &FdConfig) -> Result<f64> {
    let h = fd.h2(eps);
    let center = family.state_at(eps)?;
    let plus = family.state_at(eps + h)?;
    let minus = family.state_at(eps - h)?;
    let (center, plus, minus) = match family.modes() {
        1 => (
            extend_with_vacuum(&center)?,
            extend_with_vacuum(&plus)?,
            extend_with_vacuum(&minus)?,
        ),
        2 => (center, plus, minus),
        n => {
            return Err(Error::NotApplicable(format!(
                "fidelity-based QFI covers one or two modes, got {n}"
            )))
        }
    };
    let f_plus = two_mode_fidelity(&center, &plus)?.value;
    let f_minus = two_mode_fidelity(&center, &minus)?.value;
    let est_plus = 8.0 * (1.0 - f_plus.sqrt()) / (h * h);
    let est_minus = 8.0 * (1.0 - f_minus.sqrt()) / (h * h);
    Ok(0.5 * (est_plus + est_minus))
}
