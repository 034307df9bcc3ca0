//! Quantum Fisher information (QFI) of one-parameter Gaussian families.
//!
//! All routes work on A = K sigma and split the information into a
//! displacement part 2 d'† sigma^{-1} d' and a covariance part. The routes
//! are interchangeable where their preconditions overlap:
//!
//! * [`qfi_two_mode`]: closed form in determinant/trace invariants of A and
//!   A' plus a symplectic-eigenvalue correction; exactly two modes, strictly
//!   mixed.
//! * [`qfi_two_mode_williamson`]: the same quantity written on Williamson
//!   data (D, P1 = S^{-1} S'); exactly two modes, strictly mixed.
//! * [`qfi_multimode_williamson`]: exact mode-pair sum over the blocks of
//!   P1, any mode count; handles pure modes through a convention (below).
//! * [`qfi_series`]: geometric series in A^{-1} with a rigorous remainder
//!   bound; any mode count, strictly mixed.
//! * [`qfi_isothermal`]: shortcut for A^2 = nu^2 I families whose A
//!   anticommutes with A' to first order; two equivalent expressions are
//!   compared as a built-in cross-check.
//! * [`qfi_pure_point`]: all modes pure; uses sigma'' to capture information
//!   carried by second-order heating.
//! * [`qfi_regularized`]: states with some pure modes, as the limit
//!   lim_{nu->1+} H(nu sigma) plus the second-derivative terms of the pure
//!   modes; analytic route through the multimode sum, numeric fallback by a
//!   Richardson-extrapolated nu-ladder.
//! * [`qfi_auto`]: dispatch by spectrum shape.
//!
//! At a pure mode (lambda_i = 1) the classical term lambda_i'^2 /
//! (lambda_i^2 - 1) is a 0/0 limit whose value is lambda_i'' for smooth
//! families. [`PureConvention::SecondDerivative`] uses that limit;
//! [`PureConvention::Zero`] drops the term, counting only the unitary part.

use crate::error::{Error, Result};
use crate::family::{DerivativeTier, FdConfig, P1Blocks, StateFamily};
use crate::linalg::{cr, det_re, frob, k_matrix, solve, solve_vec, trace_re, CMat, CVec};
use crate::state::Tolerances;

/// Imaginary residue allowed in traces and quadratic forms that must be
/// real, relative to their magnitude. Generous enough for FD-tier inputs.
const REAL_TOL: f64 = 1e-6;

/// Value to assign the classical term of a pure mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PureConvention {
    /// The smooth limit: lambda'' of the pure mode.
    #[default]
    SecondDerivative,
    /// Drop the term.
    Zero,
}

/// The concrete route that produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMethod {
    TwoMode,
    TwoModeWilliamson,
    Multimode,
    Series,
    IsoThermal,
    PurePoint,
    Regularized,
}

impl std::fmt::Display for QfiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            QfiMethod::TwoMode => "two-mode",
            QfiMethod::TwoModeWilliamson => "two-mode-williamson",
            QfiMethod::Multimode => "multimode",
            QfiMethod::Series => "series",
            QfiMethod::IsoThermal => "iso-thermal",
            QfiMethod::PurePoint => "pure-point",
            QfiMethod::Regularized => "regularized",
        };
        f.write_str(name)
    }
}

/// Knobs shared by all routes.
#[derive(Debug, Clone)]
pub struct QfiConfig {
    pub tolerances: Tolerances,
    pub fd: FdConfig,
    /// Absolute target for the series remainder bound.
    pub series_tol: f64,
    /// Hard cap on the series order.
    pub series_max_order: usize,
    pub pure_convention: PureConvention,
}

impl Default for QfiConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            fd: FdConfig::default(),
            series_tol: 1e-10,
            series_max_order: 1_000_000,
            pure_convention: PureConvention::default(),
        }
    }
}

/// Diagnostic trail of an estimate.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Symplectic eigenvalues at the evaluation point, descending.
    pub lambdas: Vec<f64>,
    /// Provenance of the derivative data.
    pub tier: Option<DerivativeTier>,
    /// Series truncation order, when the series route ran.
    pub series_order: Option<usize>,
    /// (nu, H(nu sigma)) evaluations of the regularization ladder.
    pub nu_ladder: Option<Vec<(f64, f64)>>,
    /// Human-readable dispatch note.
    pub route: String,
    pub warnings: Vec<String>,
}

/// A QFI value with provenance.
#[derive(Debug, Clone)]
pub struct QfiEstimate {
    pub value: f64,
    pub method: QfiMethod,
    /// Rigorous truncation bound for the series route; None means the route
    /// is exact up to floating-point error.
    pub error_bound: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// 2 d'† sigma^{-1} d', the displacement part of the information.
fn displacement_term(sigma: &CMat, d_dot: &CVec) -> Result<f64> {
    if d_dot.iter().all(|z| z.norm() == 0.0) {
        return Ok(0.0);
    }
    let x = solve_vec(sigma, d_dot, "covariance")?;
    let q = d_dot.dotc(&x);
    if q.im.abs() > REAL_TOL * q.re.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "displacement quadratic form is not real: {q}"
        )));
    }
    Ok(2.0 * q.re)
}

fn guard_mixed(lambdas: &[f64], tol: &Tolerances) -> Result<()> {
    let lambda_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_min <= 1.0 + tol.pure_mode {
        return Err(Error::PurePoint { lambda_min });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Two-mode closed form on covariance data
// ---------------------------------------------------------------------------

struct TwoModeParts {
    sigma: CMat,
    sigma_dot: CMat,
    lambdas: [f64; 2],
    lambda_dots: [f64; 2],
    d_dot: CVec,
}

/// The two-mode closed form, on raw parts so the regularization ladder can
/// feed scaled data through it.
fn two_mode_from_parts(p: &TwoModeParts) -> Result<f64> {
    let k = k_matrix(2);
    let a = &k * &p.sigma;
    let a_dot = &k * &p.sigma_dot;
    let [l1, l2] = p.lambdas;
    let [ld1, ld2] = p.lambda_dots;

    let det_a = det_re(&a, REAL_TOL, "det A")?;
    let denom = 2.0 * (det_a - 1.0);
    if denom <= 0.0 {
        return Err(Error::PurePoint {
            lambda_min: l1.min(l2),
        });
    }

    let a_inv_dot = solve(&a, &a_dot, "A")?;
    let term_inv = det_a * trace_re(&(&a_inv_dot * &a_inv_dot), REAL_TOL, "tr[(A^-1 A')^2]")?;

    let one_plus_a2 = CMat::identity(4, 4) + &a * &a;
    let det_one_plus = det_re(&one_plus_a2, REAL_TOL, "det(I + A^2)")?;
    if det_one_plus < 0.0 {
        return Err(Error::Numerical(format!(
            "det(I + A^2) is negative: {det_one_plus:.6e}"
        )));
    }
    let b = solve(&one_plus_a2, &a_dot, "I + A^2")?;
    let term_reg = det_one_plus.sqrt() * trace_re(&(&b * &b), REAL_TOL, "tr[((I+A^2)^-1 A')^2]")?;

    // Correction restoring the classical sensitivity of the symplectic
    // spectrum; vanishes smoothly when the two eigenvalues coincide.
    let correction = 4.0
        * (l1 * l1 - l2 * l2)
        * (-ld1 * ld1 / (l1.powi(4) - 1.0) + ld2 * ld2 / (l2.powi(4) - 1.0));

    let disp = displacement_term(&p.sigma, &p.d_dot)?;
    Ok((term_inv + term_reg + correction) / denom + disp)
}

/// QFI of a two-mode family from determinant/trace invariants of the
/// covariance and its derivative. Requires both modes strictly mixed.
pub fn qfi_two_mode(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    if family.modes() != 2 {
        return Err(Error::NotApplicable(format!(
            "the two-mode closed form needs exactly 2 modes, got {}",
            family.modes()
        )));
    }
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let lambdas = family.lambdas_at(eps, &cfg.tolerances)?;
    guard_mixed(&lambdas, &cfg.tolerances)?;
    let ld = bundle
        .lambda_dot
        .as_ref()
        .ok_or_else(|| Error::Derivatives("missing symplectic eigenvalue derivatives".into()))?;
    let value = two_mode_from_parts(&TwoModeParts {
        sigma: state.covariance().clone(),
        sigma_dot: bundle.sigma_dot.clone(),
        lambdas: [lambdas[0], lambdas[1]],
        lambda_dots: [ld[0], ld[1]],
        d_dot: bundle.d_dot.clone(),
    })?;
    Ok(QfiEstimate {
        value,
        method: QfiMethod::TwoMode,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas,
            tier: Some(bundle.tier),
            route: "two-mode closed form".into(),
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Two-mode closed form on Williamson data
// ---------------------------------------------------------------------------

/// QFI of a two-mode family written on Williamson data: the diagonal form
/// D, its derivative, and P1 = S^{-1} S'. Requires both modes strictly
/// mixed and a nondegenerate (or generator/analytic) factorization.
pub fn qfi_two_mode_williamson(
    family: &StateFamily,
    eps: f64,
    cfg: &QfiConfig,
) -> Result<QfiEstimate> {
    if family.modes() != 2 {
        return Err(Error::NotApplicable(format!(
            "the two-mode Williamson form needs exactly 2 modes, got {}",
            family.modes()
        )));
    }
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let factors = family.williamson_at(eps, &cfg.tolerances)?;
    let lambdas = factors.lambdas.clone();
    guard_mixed(&lambdas, &cfg.tolerances)?;
    let p1 = family.p1_matrix(eps, &cfg.fd, &cfg.tolerances)?;
    let ld = bundle
        .lambda_dot
        .as_ref()
        .ok_or_else(|| Error::Derivatives("missing symplectic eigenvalue derivatives".into()))?;

    let k = k_matrix(2);
    let p = p1.full();
    let d0 = CMat::from_diagonal(&CVec::from_vec(vec![
        cr(lambdas[0]),
        cr(lambdas[1]),
        cr(lambdas[0]),
        cr(lambdas[1]),
    ]));
    let d0_inv = CMat::from_diagonal(&CVec::from_vec(vec![
        cr(1.0 / lambdas[0]),
        cr(1.0 / lambdas[1]),
        cr(1.0 / lambdas[0]),
        cr(1.0 / lambdas[1]),
    ]));
    let det_d0 = (lambdas[0] * lambdas[1]).powi(2);
    let denom = det_d0 - 1.0;

    let tr_p2 = trace_re(&(&p * &p), REAL_TOL, "tr[P1^2]")?;
    let tr_mixed = trace_re(
        &(&d0_inv * &k * &p * &d0 * &k * &p),
        REAL_TOL,
        "tr[D^-1 K P1 D K P1]",
    )?;

    let c_mat = CMat::identity(4, 4) + &d0 * &d0;
    let det_c = ((1.0 + lambdas[0] * lambdas[0]) * (1.0 + lambdas[1] * lambdas[1])).powi(2);
    let c_inv_p = solve(&c_mat, &p, "I + D^2")?;
    let tr_c1 = trace_re(&(&c_inv_p * &c_inv_p), REAL_TOL, "tr[(C^-1 P1)^2]")?;
    let dkp = &d0 * &k * &p;
    let c_inv_dkp = solve(&c_mat, &dkp, "I + D^2")?;
    let tr_c2 = trace_re(&(&c_inv_dkp * &c_inv_dkp), REAL_TOL, "tr[(C^-1 D K P1)^2]")?;
    let tr_c3 = trace_re(&(solve(&c_mat, &(&p * &p), "I + D^2")?), REAL_TOL, "tr[C^-1 P1^2]")?;

    let covariance_part =
        (det_d0 * (tr_p2 - tr_mixed) + det_c.sqrt() * (tr_c1 + tr_c2 - tr_c3)) / denom;

    // Classical part: 1/2 tr[(D+K)^{-1} D^{-1} D'^2] = sum_i lambda_i'^2 / (lambda_i^2 - 1).
    let classical: f64 = (0..2)
        .map(|i| ld[i] * ld[i] / (lambdas[i] * lambdas[i] - 1.0))
        .sum();

    let disp = displacement_term(state.covariance(), &bundle.d_dot)?;
    Ok(QfiEstimate {
        value: covariance_part + classical + disp,
        method: QfiMethod::TwoModeWilliamson,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas,
            tier: Some(p1.tier.min(bundle.tier)),
            route: "two-mode closed form on Williamson data".into(),
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Exact multimode sum on Williamson data
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn multimode_from_parts(
    lambdas: &[f64],
    lambda_dots: &[f64],
    lambda_ddots: Option<&[f64]>,
    p1: &P1Blocks,
    sigma: &CMat,
    d_dot: &CVec,
    convention: PureConvention,
    pure_tol: f64,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let n = lambdas.len();
    let is_pure = |i: usize| lambdas[i] <= 1.0 + pure_tol;

    let mut unitary = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (li, lj) = (lambdas[i], lambdas[j]);
            // Both modes pure: the (li - lj)^2 / (li lj - 1) weight is a 0/0
            // limit that vanishes along physical paths.
            if !(is_pure(i) && is_pure(j)) {
                let w_r = (li - lj).powi(2) / (li * lj - 1.0);
                unitary += w_r * p1.r[(i, j)].norm_sqr();
            }
            let w_q = (li + lj).powi(2) / (li * lj + 1.0);
            unitary += w_q * p1.q[(i, j)].norm_sqr();
        }
    }

    let mut classical = 0.0;
    for i in 0..n {
        if is_pure(i) {
            if lambda_dots[i].abs() > 1e-6 {
                warnings.push(format!(
                    "mode {i} looks pure (lambda = {}) but its eigenvalue derivative is {:.3e}; \
                     the pure-mode convention assumes it vanishes",
                    lambdas[i], lambda_dots[i]
                ));
            }
            match convention {
                PureConvention::SecondDerivative => {
                    let ldd = lambda_ddots.ok_or_else(|| {
                        Error::Derivatives(
                            "pure-mode terms need second eigenvalue derivatives".into(),
                        )
                    })?;
                    classical += ldd[i];
                }
                PureConvention::Zero => {}
            }
        } else {
            classical += lambda_dots[i] * lambda_dots[i] / (lambdas[i] * lambdas[i] - 1.0);
        }
    }

    let disp = displacement_term(sigma, d_dot)?;
    Ok(unitary + classical + disp)
}

/// Exact QFI for any mode count from Williamson data: a weighted sum over
/// the blocks of P1 = S^{-1} S', the classical sensitivity of the symplectic
/// spectrum, and the displacement part. Pure modes follow the configured
/// convention.
pub fn qfi_multimode_williamson(
    family: &StateFamily,
    eps: f64,
    cfg: &QfiConfig,
) -> Result<QfiEstimate> {
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let factors = family.williamson_at(eps, &cfg.tolerances)?;
    let p1 = family.p1_matrix(eps, &cfg.fd, &cfg.tolerances)?;
    let ld = bundle
        .lambda_dot
        .as_ref()
        .ok_or_else(|| Error::Derivatives("missing symplectic eigenvalue derivatives".into()))?;
    let mut warnings = Vec::new();
    let value = multimode_from_parts(
        &factors.lambdas,
        ld,
        bundle.lambda_ddot.as_deref(),
        &p1,
        state.covariance(),
        &bundle.d_dot,
        cfg.pure_convention,
        cfg.tolerances.pure_mode,
        &mut warnings,
    )?;
    Ok(QfiEstimate {
        value,
        method: QfiMethod::Multimode,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas: factors.lambdas.clone(),
            tier: Some(p1.tier.min(bundle.tier)),
            route: "multimode Williamson sum".into(),
            warnings,
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Geometric series
// ---------------------------------------------------------------------------

/// Rigorous bound on the tail beyond `order` terms of the series route:
/// tr[(A A')^2] / (2 lambda_min^(2 order + 2) (lambda_min^2 - 1)).
pub fn series_remainder_bound(lambda_min: f64, trace_aa_dot_sq: f64, order: usize) -> f64 {
    let log_decay = -(2.0 * order as f64 + 2.0) * lambda_min.ln();
    trace_aa_dot_sq.abs() / (2.0 * (lambda_min * lambda_min - 1.0)) * log_decay.exp()
}

/// QFI by the geometric series in A^{-1}, truncated once the remainder
/// bound drops below `cfg.series_tol`. Requires a strictly mixed spectrum.
pub fn qfi_series(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let lambdas = family.lambdas_at(eps, &cfg.tolerances)?;
    guard_mixed(&lambdas, &cfg.tolerances)?;
    let lambda_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);

    let k = k_matrix(family.modes());
    let a = &k * state.covariance();
    let a_dot = &k * &bundle.sigma_dot;
    let trace_aa = trace_re(&(&a * &a_dot * &a * &a_dot), REAL_TOL, "tr[(A A')^2]")?;

    let lu = a.clone().lu();
    let mut b = lu
        .solve(&a_dot)
        .ok_or_else(|| Error::Numerical("A is singular".into()))?;
    let mut sum = 0.0;
    let mut order = 0;
    loop {
        order += 1;
        sum += 0.5 * trace_re(&(&b * &b), REAL_TOL, "series term")?;
        let bound = series_remainder_bound(lambda_min, trace_aa, order);
        if bound <= cfg.series_tol {
            let disp = displacement_term(state.covariance(), &bundle.d_dot)?;
            return Ok(QfiEstimate {
                value: sum + disp,
                method: QfiMethod::Series,
                error_bound: Some(bound),
                diagnostics: Diagnostics {
                    lambdas,
                    tier: Some(bundle.tier),
                    series_order: Some(order),
                    route: format!("series truncated at order {order}"),
                    ..Default::default()
                },
            });
        }
        if order >= cfg.series_max_order {
            return Err(Error::SeriesTruncation {
                order,
                bound,
                tol: cfg.series_tol,
            });
        }
        b = lu
            .solve(&b)
            .ok_or_else(|| Error::Numerical("A is singular".into()))?;
    }
}

// ---------------------------------------------------------------------------
// Iso-thermal shortcut
// ---------------------------------------------------------------------------

/// QFI shortcut for iso-thermal families: A^2 = nu^2 I with nu > 1, and A
/// anticommuting with A' to first order. Two equivalent expressions are
/// evaluated and must agree to 1e-10 relative.
pub fn qfi_isothermal(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let two_n = 2 * family.modes();
    let k = k_matrix(family.modes());
    let a = &k * state.covariance();
    let a_dot = &k * &bundle.sigma_dot;

    let a2 = &a * &a;
    let nu2 = trace_re(&a2, REAL_TOL, "tr[A^2]")? / two_n as f64;
    if nu2 <= 0.0 {
        return Err(Error::Numerical(format!("tr[A^2]/2n = {nu2:.6e} <= 0")));
    }
    let iso_res = frob(&(&a2 - CMat::identity(two_n, two_n) * cr(nu2)));
    if iso_res > cfg.tolerances.iso * nu2 * (two_n as f64).sqrt() {
        return Err(Error::NotApplicable(format!(
            "family is not iso-thermal: ||A^2 - nu^2 I|| = {iso_res:.3e}"
        )));
    }
    let nu = nu2.sqrt();
    if nu <= 1.0 + cfg.tolerances.pure_mode {
        return Err(Error::PurePoint { lambda_min: nu });
    }
    let anti = frob(&(&a * &a_dot + &a_dot * &a));
    let anti_scale = frob(&a) * frob(&a_dot);
    if anti > cfg.tolerances.iso * anti_scale.max(1.0) {
        return Err(Error::NotApplicable(format!(
            "A and A' do not anticommute to first order (residual {anti:.3e}); \
             the iso-thermal shortcut does not apply"
        )));
    }

    let a_inv_dot = solve(&a, &a_dot, "A")?;
    let h1 = nu2 / (2.0 * (1.0 + nu2))
        * trace_re(&(&a_inv_dot * &a_inv_dot), REAL_TOL, "tr[(A^-1 A')^2]")?;
    let h2 = -1.0 / (2.0 * (1.0 + nu2)) * trace_re(&(&a_dot * &a_dot), REAL_TOL, "tr[A'^2]")?;
    if (h1 - h2).abs() > 1e-10 * h1.abs().max(1.0) {
        return Err(Error::Numerical(format!(
            "iso-thermal cross-check failed: {h1:.12e} vs {h2:.12e}"
        )));
    }

    let disp = displacement_term(state.covariance(), &bundle.d_dot)?;
    Ok(QfiEstimate {
        value: h1 + disp,
        method: QfiMethod::IsoThermal,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas: vec![nu; family.modes()],
            tier: Some(bundle.tier),
            route: format!("iso-thermal shortcut at nu = {nu}"),
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Pure point
// ---------------------------------------------------------------------------

/// QFI at a point where every mode is pure. Uses
/// H = 1/2 tr[A^{-1} A''] - 1/4 tr[(A^{-1} A')^2] + 2 d'† sigma^{-1} d'
/// under the second-derivative convention; dropping sigma'' (the zero
/// convention) leaves the purely unitary part 1/4 tr[(A^{-1} A')^2] plus the
/// displacement term.
pub fn qfi_pure_point(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let lambdas = family.lambdas_at(eps, &cfg.tolerances)?;
    let lambda_max = lambdas.iter().cloned().fold(1.0, f64::max);
    if lambda_max > 1.0 + cfg.tolerances.pure_mode {
        return Err(Error::NotApplicable(format!(
            "pure-point route needs all modes pure; largest symplectic eigenvalue is {lambda_max}"
        )));
    }

    let k = k_matrix(family.modes());
    let a = &k * state.covariance();
    let a_dot = &k * &bundle.sigma_dot;
    let lu = a.clone().lu();
    let b = lu
        .solve(&a_dot)
        .ok_or_else(|| Error::Numerical("A is singular".into()))?;
    let quarter_unitary = 0.25 * trace_re(&(&b * &b), REAL_TOL, "tr[(A^-1 A')^2]")?;

    let value = match cfg.pure_convention {
        PureConvention::Zero => quarter_unitary,
        PureConvention::SecondDerivative => {
            let sigma_ddot = bundle.sigma_ddot.as_ref().ok_or_else(|| {
                Error::Derivatives("pure-point route needs a second covariance derivative".into())
            })?;
            let a_ddot = &k * sigma_ddot;
            let c = lu
                .solve(&a_ddot)
                .ok_or_else(|| Error::Numerical("A is singular".into()))?;
            0.5 * trace_re(&c, REAL_TOL, "tr[A^-1 A'']")? - quarter_unitary
        }
    };
    let disp = displacement_term(state.covariance(), &bundle.d_dot)?;
    Ok(QfiEstimate {
        value: value + disp,
        method: QfiMethod::PurePoint,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas,
            tier: Some(bundle.tier),
            route: "pure point".into(),
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Regularization for mixed spectra containing pure modes
// ---------------------------------------------------------------------------

fn embed_two_mode_parts(p: &TwoModeParts) -> TwoModeParts {
    // Already two modes: nothing to do. Used only on one-mode input.
    debug_assert_eq!(p.sigma.nrows(), 2);
    let mut sigma = CMat::identity(4, 4);
    sigma[(0, 0)] = p.sigma[(0, 0)];
    sigma[(2, 2)] = p.sigma[(1, 1)];
    sigma[(0, 2)] = p.sigma[(0, 1)];
    sigma[(2, 0)] = p.sigma[(1, 0)];
    let mut sigma_dot = CMat::zeros(4, 4);
    sigma_dot[(0, 0)] = p.sigma_dot[(0, 0)];
    sigma_dot[(2, 2)] = p.sigma_dot[(1, 1)];
    sigma_dot[(0, 2)] = p.sigma_dot[(0, 1)];
    sigma_dot[(2, 0)] = p.sigma_dot[(1, 0)];
    let mut d_dot = CVec::zeros(4);
    d_dot[0] = p.d_dot[0];
    d_dot[2] = p.d_dot[1];
    TwoModeParts {
        sigma,
        sigma_dot,
        lambdas: [p.lambdas[0], 1.0],
        lambda_dots: [p.lambda_dots[0], 0.0],
        d_dot,
    }
}

/// QFI at a point whose spectrum mixes pure and mixed modes, defined as
/// lim_{nu -> 1+} H(nu sigma) plus the configured pure-mode terms.
///
/// The analytic route evaluates the limit directly through the multimode
/// sum. When P1 is unobtainable (degenerate gauge, failed stencil
/// alignment), a nu-ladder nu_k = 1 + 1e-3 2^{-k}, k = 0..6, is evaluated
/// through the two-mode closed form on scaled data and Richardson
/// extrapolated; that fallback covers at most two modes.
pub fn qfi_regularized(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    match qfi_multimode_williamson(family, eps, cfg) {
        Ok(mut est) => {
            est.method = QfiMethod::Regularized;
            est.diagnostics.route = "regularized limit via the multimode sum".into();
            Ok(est)
        }
        Err(first_err @ (Error::DegenerateGauge | Error::Derivatives(_) | Error::Structure(_))) => {
            qfi_regularized_ladder(family, eps, cfg).map_err(|ladder_err| {
                Error::NoRoute(format!(
                    "multimode route failed ({first_err}); nu-ladder fallback failed ({ladder_err})"
                ))
            })
        }
        Err(e) => Err(e),
    }
}

/// The numeric regularization route on its own: H(nu_k sigma) is evaluated
/// through the two-mode closed form on scaled data at the geometric ladder
/// nu_k = 1 + 1e-3 2^{-k}, k = 0..6, Richardson-extrapolated to nu = 1, and
/// the pure-mode second-derivative terms are added per the convention.
/// Normally reached as the fallback inside [`qfi_regularized`]; public so the
/// two regularization paths can be compared directly.
pub fn qfi_regularized_ladder(
    family: &StateFamily,
    eps: f64,
    cfg: &QfiConfig,
) -> Result<QfiEstimate> {
    let n = family.modes();
    if n > 2 {
        return Err(Error::NotApplicable(format!(
            "the nu-ladder fallback covers at most two modes, got {n}"
        )));
    }
    let (state, bundle) = family.evaluate_with_derivatives(eps, &cfg.fd)?;
    let lambdas = family.lambdas_at(eps, &cfg.tolerances)?;
    let ld = bundle
        .lambda_dot
        .as_ref()
        .ok_or_else(|| Error::Derivatives("missing symplectic eigenvalue derivatives".into()))?;

    let base = TwoModeParts {
        sigma: state.covariance().clone(),
        sigma_dot: bundle.sigma_dot.clone(),
        lambdas: [lambdas[0], *lambdas.get(1).unwrap_or(&1.0)],
        lambda_dots: [ld[0], *ld.get(1).unwrap_or(&0.0)],
        d_dot: bundle.d_dot.clone(),
    };
    let base = if n == 1 { embed_two_mode_parts(&base) } else { base };

    // Scaling sigma -> nu sigma multiplies eigenvalues and their derivatives
    // by nu and leaves the displacement data unchanged.
    let mut rungs = Vec::with_capacity(7);
    for k in 0..=6u32 {
        let nu = 1.0 + 1e-3 * 0.5f64.powi(k as i32);
        let h = two_mode_from_parts(&TwoModeParts {
            sigma: &base.sigma * cr(nu),
            sigma_dot: &base.sigma_dot * cr(nu),
            lambdas: [base.lambdas[0] * nu, base.lambdas[1] * nu],
            lambda_dots: [base.lambda_dots[0] * nu, base.lambda_dots[1] * nu],
            d_dot: base.d_dot.clone(),
        })?;
        rungs.push((nu, h));
    }

    // Richardson extrapolation for nodes in geometric ratio 2:
    // T[k][j] = (2^j T[k][j-1] - T[k-1][j-1]) / (2^j - 1).
    let mut t: Vec<f64> = rungs.iter().map(|&(_, h)| h).collect();
    let m = t.len();
    for j in 1..m {
        for k in (j..m).rev() {
            let w = 2f64.powi(j as i32);
            t[k] = (w * t[k] - t[k - 1]) / (w - 1.0);
        }
    }
    let limit = t[m - 1];

    let mut warnings = Vec::new();
    let mut pure_terms = 0.0;
    if cfg.pure_convention == PureConvention::SecondDerivative {
        let ldd = bundle.lambda_ddot.as_ref().ok_or_else(|| {
            Error::Derivatives("pure-mode terms need second eigenvalue derivatives".into())
        })?;
        for i in 0..n {
            if lambdas[i] <= 1.0 + cfg.tolerances.pure_mode {
                if ld[i].abs() > 1e-6 {
                    warnings.push(format!(
                        "mode {i} looks pure but its eigenvalue derivative is {:.3e}",
                        ld[i]
                    ));
                }
                pure_terms += ldd[i];
            }
        }
    }

    Ok(QfiEstimate {
        value: limit + pure_terms,
        method: QfiMethod::Regularized,
        error_bound: None,
        diagnostics: Diagnostics {
            lambdas,
            tier: Some(bundle.tier),
            nu_ladder: Some(rungs),
            route: "regularized limit via Richardson-extrapolated nu-ladder".into(),
            warnings,
            ..Default::default()
        },
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Compute the QFI by the most specific applicable route:
/// all modes pure -> pure point; some pure -> regularized; iso-thermal ->
/// shortcut; two mixed modes -> two-mode closed form; otherwise the
/// multimode sum, with the series as last resort.
pub fn qfi_auto(family: &StateFamily, eps: f64, cfg: &QfiConfig) -> Result<QfiEstimate> {
    let lambdas = family.lambdas_at(eps, &cfg.tolerances)?;
    let pure_count = lambdas
        .iter()
        .filter(|&&l| l <= 1.0 + cfg.tolerances.pure_mode)
        .count();

    if pure_count == lambdas.len() {
        let mut est = qfi_pure_point(family, eps, cfg)?;
        est.diagnostics.route = format!("auto: all modes pure -> {}", est.diagnostics.route);
        return Ok(est);
    }
    if pure_count > 0 {
        let mut est = qfi_regularized(family, eps, cfg)?;
        est.diagnostics.route = format!(
            "auto: {pure_count}/{} modes pure -> {}",
            lambdas.len(),
            est.diagnostics.route
        );
        return Ok(est);
    }

    match qfi_isothermal(family, eps, cfg) {
        Ok(mut est) => {
            est.diagnostics.route = format!("auto: {}", est.diagnostics.route);
            return Ok(est);
        }
        Err(Error::NotApplicable(_)) => {}
        Err(e) => return Err(e),
    }

    if family.modes() == 2 {
        let mut est = qfi_two_mode(family, eps, cfg)?;
        est.diagnostics.route = format!("auto: {}", est.diagnostics.route);
        return Ok(est);
    }

    match qfi_multimode_williamson(family, eps, cfg) {
        Ok(mut est) => {
            est.diagnostics.route = format!("auto: {}", est.diagnostics.route);
            Ok(est)
        }
        Err(mm_err @ (Error::DegenerateGauge | Error::Derivatives(_))) => {
            match qfi_series(family, eps, cfg) {
                Ok(mut est) => {
                    est.diagnostics.route = format!(
                        "auto: multimode unavailable ({mm_err}) -> {}",
                        est.diagnostics.route
                    );
                    Ok(est)
                }
                Err(series_err) => Err(Error::NoRoute(format!(
                    "multimode route failed ({mm_err}); series fallback failed ({series_err})"
                ))),
            }
        }
        Err(e) => Err(e),
    }
}
