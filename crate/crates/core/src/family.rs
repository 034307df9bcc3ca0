//! One-parameter families epsilon -> (d(eps), sigma(eps)) and their
//! derivative data.
//!
//! A family carries one of three derivative providers, in decreasing order of
//! trust:
//!
//! * analytic: closures for sigma'(eps) and d'(eps), optionally sigma'',
//!   Williamson factors with S'(eps), and eigenvalue derivatives;
//! * generator: the family is a one-parameter symplectic orbit
//!   sigma(eps) = E sigma_0 E†, d(eps) = E d_0 + eps v with E = exp(X eps),
//!   X in the symplectic algebra (X† = -K X K). Everything is then exact:
//!   sigma' = X sigma + sigma X†, the symplectic eigenvalues are constant,
//!   the transported factors are S(eps) = E S_0, and P1 = S^{-1} S' equals
//!   S_0^{-1} X S_0 for all eps;
//! * finite differences on a state closure, with central stencils
//!   (step ~ eps_mach^{1/3} for first derivatives, ~ eps_mach^{1/4} for
//!   second ones, both scaled by max(1, |eps|)).
//!
//! The matrix P1 = S^{-1} S' has block form [[R, Q], [conj Q, conj R]] with R
//! skew-Hermitian and Q symmetric, equivalently P1† = -K P1 K. In
//! finite-difference mode the stencil factorizations are aligned to the
//! center one by a diagonal phase gauge before differencing; degenerate
//! spectra are refused because their gauge is not unique.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{cr, expm, frob, k_matrix, CMat, CVec};
use crate::state::{GaussianState, Tolerances};
use crate::williamson::{self, GaugeTag, SymplecticMatrix, WilliamsonFactors};

/// Finite-difference step policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct FdConfig {
    /// Step for first derivatives; None selects cbrt(eps_mach) * max(1, |eps|).
    pub step_first: Option<f64>,
    /// Step for second derivatives; None selects eps_mach^(1/4) * max(1, |eps|).
    pub step_second: Option<f64>,
}

impl FdConfig {
    pub fn h1(&self, eps: f64) -> f64 {
        self.step_first
            .unwrap_or_else(|| f64::EPSILON.cbrt() * eps.abs().max(1.0))
    }

    pub fn h2(&self, eps: f64) -> f64 {
        self.step_second
            .unwrap_or_else(|| f64::EPSILON.powf(0.25) * eps.abs().max(1.0))
    }
}

/// Provenance of derivative data, ordered by trust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DerivativeTier {
    FiniteDifference,
    Generator,
    Analytic,
}

/// Derivatives of a family at one parameter value.
///
/// `fd_filled` lists the quantities that fell back to finite differences
/// because the provider had nothing better.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub sigma_dot: CMat,
    pub d_dot: CVec,
    pub sigma_ddot: Option<CMat>,
    pub lambda_dot: Option<Vec<f64>>,
    pub lambda_ddot: Option<Vec<f64>>,
    pub s_dot: Option<CMat>,
    pub tier: DerivativeTier,
    pub fd_filled: Vec<&'static str>,
}

/// Blocks of P1 = S^{-1} S'.
#[derive(Debug, Clone)]
pub struct P1Blocks {
    /// Skew-Hermitian n x n block.
    pub r: CMat,
    /// Symmetric n x n block.
    pub q: CMat,
    pub tier: DerivativeTier,
}

impl P1Blocks {
    /// Assemble the full 2n x 2n matrix [[R, Q], [conj Q, conj R]].
    pub fn full(&self) -> CMat {
        let n = self.r.nrows();
        let mut p = CMat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = self.r[(i, j)];
                p[(i, n + j)] = self.q[(i, j)];
                p[(n + i, j)] = self.q[(i, j)].conj();
                p[(n + i, n + j)] = self.r[(i, j)].conj();
            }
        }
        p
    }
}

type StateFn = dyn Fn(f64) -> Result<GaussianState> + Send + Sync;
type MatFn = dyn Fn(f64) -> CMat + Send + Sync;
type VecFn = dyn Fn(f64) -> CVec + Send + Sync;
type FactorsFn = dyn Fn(f64) -> (CMat, Vec<f64>) + Send + Sync;
type RealsFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

struct AnalyticFamily {
    state: Box<StateFn>,
    sigma_dot: Box<MatFn>,
    d_dot: Box<VecFn>,
    sigma_ddot: Option<Box<MatFn>>,
    factors: Option<Box<FactorsFn>>,
    s_dot: Option<Box<MatFn>>,
    lambda_dot: Option<Box<RealsFn>>,
    lambda_ddot: Option<Box<RealsFn>>,
}

struct GeneratorFamily {
    base: GaussianState,
    base_factors: WilliamsonFactors,
    generator: CMat,
    /// Constant extra displacement rate (v, conj v); zero unless the family
    /// is a displacement channel.
    rate: CVec,
}

enum Provider {
    Analytic(AnalyticFamily),
    Generator(GeneratorFamily),
    FiniteDifference(Box<StateFn>),
}

/// A one-parameter family of Gaussian states.
pub struct StateFamily {
    modes: usize,
    provider: Provider,
}

impl StateFamily {
    /// Analytic provider: the state and its first derivatives as closures.
    pub fn analytic(
        modes: usize,
        state: impl Fn(f64) -> Result<GaussianState> + Send + Sync + 'static,
        sigma_dot: impl Fn(f64) -> CMat + Send + Sync + 'static,
        d_dot: impl Fn(f64) -> CVec + Send + Sync + 'static,
    ) -> Self {
        Self {
            modes,
            provider: Provider::Analytic(AnalyticFamily {
                state: Box::new(state),
                sigma_dot: Box::new(sigma_dot),
                d_dot: Box::new(d_dot),
                sigma_ddot: None,
                factors: None,
                s_dot: None,
                lambda_dot: None,
                lambda_ddot: None,
            }),
        }
    }

    pub fn with_sigma_ddot(mut self, f: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Self {
        if let Provider::Analytic(a) = &mut self.provider {
            a.sigma_ddot = Some(Box::new(f));
        }
        self
    }

    /// Analytic Williamson data: eps -> (S(eps), lambdas(eps)) plus S'(eps).
    pub fn with_factors(
        mut self,
        factors: impl Fn(f64) -> (CMat, Vec<f64>) + Send + Sync + 'static,
        s_dot: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Self {
        if let Provider::Analytic(a) = &mut self.provider {
            a.factors = Some(Box::new(factors));
            a.s_dot = Some(Box::new(s_dot));
        }
        self
    }

    pub fn with_lambda_derivatives(
        mut self,
        lambda_dot: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        lambda_ddot: Option<Box<RealsFn>>,
    ) -> Self {
        if let Provider::Analytic(a) = &mut self.provider {
            a.lambda_dot = Some(Box::new(lambda_dot));
            a.lambda_ddot = lambda_ddot;
        }
        self
    }

    /// Generator provider: sigma(eps) = exp(X eps) sigma exp(X eps)†.
    pub fn generator(base: GaussianState, x: CMat) -> Result<Self> {
        Self::generator_with_rate(base, x, None)
    }

    /// Displacement channel: constant covariance, d(eps) = d + eps (v, conj v).
    pub fn displacement_channel(base: GaussianState, v_tilde: &[C64]) -> Result<Self> {
        let n = base.modes();
        let x = CMat::zeros(2 * n, 2 * n);
        Self::generator_with_rate(base, x, Some(v_tilde))
    }

    /// Generator provider with an extra constant displacement rate.
    pub fn generator_with_rate(
        base: GaussianState,
        x: CMat,
        rate_tilde: Option<&[C64]>,
    ) -> Result<Self> {
        let n = base.modes();
        if x.nrows() != 2 * n || x.ncols() != 2 * n {
            return Err(Error::Dimension(format!(
                "generator is {}x{} but the state has {n} modes",
                x.nrows(),
                x.ncols()
            )));
        }
        let k = k_matrix(n);
        let scale = frob(&x).max(1.0);
        let algebra_res = frob(&(x.adjoint() + &k * &x * &k));
        if algebra_res > 1e-10 * scale {
            return Err(Error::Structure(format!(
                "generator is not in the symplectic algebra: X† + K X K residual {algebra_res:.3e}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let block_res = (x[(n + i, n + j)] - x[(i, j)].conj()).norm()
                    + (x[(n + i, j)] - x[(i, n + j)].conj()).norm();
                if block_res > 1e-10 * scale {
                    return Err(Error::Structure(
                        "generator lacks the conjugate block structure".into(),
                    ));
                }
            }
        }
        let rate = match rate_tilde {
            None => CVec::zeros(2 * n),
            Some(v) => {
                if v.len() != n {
                    return Err(Error::Dimension(format!(
                        "displacement rate has {} entries for {n} modes",
                        v.len()
                    )));
                }
                let mut r = CVec::zeros(2 * n);
                for (i, &vi) in v.iter().enumerate() {
                    r[i] = vi;
                    r[n + i] = vi.conj();
                }
                r
            }
        };
        let base_factors = williamson::williamson_decompose(base.covariance(), &Tolerances::default())?;
        Ok(Self {
            modes: n,
            provider: Provider::Generator(GeneratorFamily {
                base,
                base_factors,
                generator: x,
                rate,
            }),
        })
    }

    /// Finite-difference provider: just a state closure.
    pub fn finite_difference(
        modes: usize,
        state: impl Fn(f64) -> Result<GaussianState> + Send + Sync + 'static,
    ) -> Self {
        Self {
            modes,
            provider: Provider::FiniteDifference(Box::new(state)),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn tier(&self) -> DerivativeTier {
        match &self.provider {
            Provider::Analytic(_) => DerivativeTier::Analytic,
            Provider::Generator(_) => DerivativeTier::Generator,
            Provider::FiniteDifference(_) => DerivativeTier::FiniteDifference,
        }
    }

    /// The state at one parameter value.
    pub fn state_at(&self, eps: f64) -> Result<GaussianState> {
        match &self.provider {
            Provider::Analytic(a) => (a.state)(eps),
            Provider::FiniteDifference(f) => f(eps),
            Provider::Generator(g) => {
                let e = expm(&(&g.generator * cr(eps)));
                let sigma = &e * g.base.covariance() * e.adjoint();
                let d = &e * g.base.displacement() + &g.rate * cr(eps);
                GaussianState::new(self.modes, d, sigma)
            }
        }
    }

    /// Symplectic eigenvalues at eps, sorted descending.
    pub fn lambdas_at(&self, eps: f64, tol: &Tolerances) -> Result<Vec<f64>> {
        match &self.provider {
            Provider::Generator(g) => Ok(g.base_factors.lambdas.clone()),
            Provider::Analytic(a) if a.factors.is_some() => {
                Ok(a.factors.as_ref().unwrap()(eps).1)
            }
            _ => williamson::symplectic_eigenvalues(self.state_at(eps)?.covariance(), tol),
        }
    }

    /// State plus the full derivative bundle at eps.
    ///
    /// Quantities the provider cannot produce analytically are filled by
    /// central finite differences and listed in `fd_filled`. Second
    /// derivatives default to finite differences even for analytic families
    /// unless a sigma'' closure was supplied.
    pub fn evaluate_with_derivatives(
        &self,
        eps: f64,
        fd: &FdConfig,
    ) -> Result<(GaussianState, DerivativeBundle)> {
        let tolerances = Tolerances::default();
        let state = self.state_at(eps)?;
        let h1 = fd.h1(eps);
        let h2 = fd.h2(eps);
        let mut fd_filled = Vec::new();

        let (sigma_dot, d_dot, s_dot) = match &self.provider {
            Provider::Analytic(a) => {
                let s_dot = a.s_dot.as_ref().map(|f| f(eps));
                ((a.sigma_dot)(eps), (a.d_dot)(eps), s_dot)
            }
            Provider::Generator(g) => {
                let x = &g.generator;
                let sigma_dot = x * state.covariance() + state.covariance() * x.adjoint();
                let d_dot = x * state.displacement() + &g.rate;
                let e = expm(&(x * cr(eps)));
                let s_dot = x * &e * g.base_factors.s.matrix();
                (sigma_dot, d_dot, Some(s_dot))
            }
            Provider::FiniteDifference(f) => {
                let plus = f(eps + h1)?;
                let minus = f(eps - h1)?;
                fd_filled.push("sigma_dot");
                fd_filled.push("d_dot");
                let sigma_dot = (plus.covariance() - minus.covariance()) * cr(0.5 / h1);
                let d_dot = (plus.displacement() - minus.displacement()) * cr(0.5 / h1);
                (sigma_dot, d_dot, None)
            }
        };

        let sigma_ddot = match &self.provider {
            Provider::Analytic(a) if a.sigma_ddot.is_some() => {
                Some(a.sigma_ddot.as_ref().unwrap()(eps))
            }
            Provider::Generator(g) => {
                let x = &g.generator;
                Some(x * &sigma_dot + &sigma_dot * x.adjoint())
            }
            _ => {
                fd_filled.push("sigma_ddot");
                let plus = self.state_at(eps + h2)?;
                let minus = self.state_at(eps - h2)?;
                let ddot = (plus.covariance() + minus.covariance()
                    - state.covariance() * cr(2.0))
                    * cr(1.0 / (h2 * h2));
                Some(ddot)
            }
        };

        let (lambda_dot, lambda_ddot) = match &self.provider {
            Provider::Generator(_) => {
                // A symplectic orbit keeps the symplectic spectrum constant.
                (Some(vec![0.0; self.modes]), Some(vec![0.0; self.modes]))
            }
            Provider::Analytic(a) if a.lambda_dot.is_some() => {
                let ld = a.lambda_dot.as_ref().unwrap()(eps);
                let ldd = a.lambda_ddot.as_ref().map(|f| f(eps));
                let ldd = match ldd {
                    Some(v) => Some(v),
                    None => {
                        fd_filled.push("lambda_ddot");
                        Some(self.lambda_ddot_fd(eps, h2, &tolerances)?)
                    }
                };
                (Some(ld), ldd)
            }
            _ => {
                fd_filled.push("lambda_dot");
                fd_filled.push("lambda_ddot");
                let lp = self.lambdas_at(eps + h1, &tolerances)?;
                let lm = self.lambdas_at(eps - h1, &tolerances)?;
                let ld: Vec<f64> = lp
                    .iter()
                    .zip(&lm)
                    .map(|(p, m)| (p - m) / (2.0 * h1))
                    .collect();
                (Some(ld), Some(self.lambda_ddot_fd(eps, h2, &tolerances)?))
            }
        };

        Ok((
            state,
            DerivativeBundle {
                sigma_dot,
                d_dot,
                sigma_ddot,
                lambda_dot,
                lambda_ddot,
                s_dot,
                tier: self.tier(),
                fd_filled,
            },
        ))
    }

    fn lambda_ddot_fd(&self, eps: f64, h2: f64, tol: &Tolerances) -> Result<Vec<f64>> {
        let lp = self.lambdas_at(eps + h2, tol)?;
        let l0 = self.lambdas_at(eps, tol)?;
        let lm = self.lambdas_at(eps - h2, tol)?;
        Ok((0..l0.len())
            .map(|i| (lp[i] - 2.0 * l0[i] + lm[i]) / (h2 * h2))
            .collect())
    }

    /// Williamson factors at eps.
    ///
    /// Generator families transport the base factors, S(eps) = exp(X eps) S_0,
    /// which is exact and smooth in eps (but not in the canonical gauge of
    /// [`williamson::williamson_decompose`]). Analytic families with a factors
    /// closure are checked for reconstruction; anything else decomposes fresh.
    pub fn williamson_at(&self, eps: f64, tol: &Tolerances) -> Result<WilliamsonFactors> {
        match &self.provider {
            Provider::Generator(g) => {
                let e = expm(&(&g.generator * cr(eps)));
                let s = SymplecticMatrix::new(e * g.base_factors.s.matrix(), tol)?;
                Ok(WilliamsonFactors {
                    s,
                    lambdas: g.base_factors.lambdas.clone(),
                    gauge: g.base_factors.gauge.clone(),
                })
            }
            Provider::Analytic(a) if a.factors.is_some() => {
                let (s, lambdas) = a.factors.as_ref().unwrap()(eps);
                let s = SymplecticMatrix::new(s, tol)?;
                let n = lambdas.len();
                let mut groups: Vec<(usize, usize)> = Vec::new();
                let mut start = 0usize;
                for i in 1..=n {
                    if i == n || (lambdas[i - 1] - lambdas[i]).abs() > tol.degen {
                        if i - start > 1 {
                            groups.push((start, i));
                        }
                        start = i;
                    }
                }
                let factors = WilliamsonFactors {
                    s,
                    lambdas,
                    gauge: GaugeTag {
                        degenerate: !groups.is_empty(),
                        groups,
                    },
                };
                let sigma = self.state_at(eps)?;
                let res = frob(&(factors.reconstruct() - sigma.covariance()));
                if res > tol.recon * frob(sigma.covariance()).max(1.0) {
                    return Err(Error::Structure(format!(
                        "supplied factors do not reconstruct the covariance: residual {res:.3e}"
                    )));
                }
                Ok(factors)
            }
            _ => williamson::williamson_decompose(self.state_at(eps)?.covariance(), tol),
        }
    }

    /// P1 = S^{-1} S' at eps, as validated blocks.
    ///
    /// Analytic and generator tiers are exact. The finite-difference tier
    /// factorizes at eps and eps +/- h, aligns the stencil gauges to the
    /// center by the diagonal phase that minimizes the Frobenius distance,
    /// and differences; it refuses degenerate spectra.
    pub fn p1_matrix(&self, eps: f64, fd: &FdConfig, tol: &Tolerances) -> Result<P1Blocks> {
        match &self.provider {
            Provider::Generator(g) => {
                let s0 = g.base_factors.s.matrix();
                let s0_inv = g.base_factors.s.inverse();
                let p1 = s0_inv * &g.generator * s0;
                split_p1(&p1, 1e-8, self.tier())
            }
            Provider::Analytic(a) if a.s_dot.is_some() && a.factors.is_some() => {
                let factors = self.williamson_at(eps, tol)?;
                let s_dot = a.s_dot.as_ref().unwrap()(eps);
                let p1 = factors.s.inverse() * s_dot;
                split_p1(&p1, 1e-8, self.tier())
            }
            _ => {
                let h = fd.h1(eps);
                let center = self.williamson_at(eps, tol)?;
                let plus = williamson::williamson_decompose(
                    self.state_at(eps + h)?.covariance(),
                    tol,
                )?;
                let minus = williamson::williamson_decompose(
                    self.state_at(eps - h)?.covariance(),
                    tol,
                )?;
                if center.gauge.degenerate || plus.gauge.degenerate || minus.gauge.degenerate {
                    return Err(Error::DegenerateGauge);
                }
                let sp = align_gauge(center.s.matrix(), plus.s.matrix())?;
                let sm = align_gauge(center.s.matrix(), minus.s.matrix())?;
                let s_dot = (sp - sm) * cr(0.5 / h);
                let p1 = center.s.inverse() * s_dot;
                // Structural tolerance is dominated by the O(h^2) stencil error.
                split_p1(&p1, 1e-4, DerivativeTier::FiniteDifference)
            }
        }
    }
}

/// Post-multiply `s` by the diagonal symplectic gauge G = diag(g, conj g)
/// with |g_i| = 1 minimizing the Frobenius distance to `s_ref`.
fn align_gauge(s_ref: &CMat, s: &CMat) -> Result<CMat> {
    let n = s.nrows() / 2;
    let mut out = s.clone();
    for i in 0..n {
        let a = s.column(i);
        let b = s_ref.column(i);
        let overlap = a.dotc(&b); // a† b
        let mag = overlap.norm();
        if mag < 1e-8 * a.norm() * b.norm() {
            return Err(Error::Derivatives(format!(
                "gauge alignment failed: stencil column {i} is nearly orthogonal to the center"
            )));
        }
        let g = overlap / cr(mag);
        for row in 0..2 * n {
            out[(row, i)] *= g;
            out[(row, n + i)] *= g.conj();
        }
    }
    Ok(out)
}

/// Validate the block structure of a computed P1 and split it into (R, Q).
///
/// Checks P1† = -K P1 K and the conjugate-block relation within `rel_tol`
/// (relative to the magnitude of P1), then returns the exactly symmetrized
/// blocks: R <- (R - R†)/2, Q <- (Q + Q^T)/2.
fn split_p1(p1: &CMat, rel_tol: f64, tier: DerivativeTier) -> Result<P1Blocks> {
    let n = p1.nrows() / 2;
    let k = k_matrix(n);
    let scale = frob(p1).max(1.0);
    let res = frob(&(p1.adjoint() + &k * p1 * &k));
    if res > rel_tol * scale {
        return Err(Error::Structure(format!(
            "P1 violates P1† = -K P1 K: residual {res:.3e} vs {:.3e}",
            rel_tol * scale
        )));
    }
    let r: CMat = p1.view((0, 0), (n, n)).into();
    let q: CMat = p1.view((0, n), (n, n)).into();
    let rc: CMat = p1.view((n, n), (n, n)).into();
    let qc: CMat = p1.view((n, 0), (n, n)).into();
    let block_res = frob(&(&rc - r.map(|z| z.conj()))).hypot(frob(&(&qc - q.map(|z| z.conj()))));
    if block_res > rel_tol * scale {
        return Err(Error::Structure(format!(
            "P1 lacks the conjugate block structure: residual {block_res:.3e}"
        )));
    }
    Ok(P1Blocks {
        r: (&r - r.adjoint()) * cr(0.5),
        q: (&q + q.transpose()) * cr(0.5),
        tier,
    })
}

/// Free-function form of [`StateFamily::evaluate_with_derivatives`].
pub fn evaluate_with_derivatives(
    family: &StateFamily,
    eps: f64,
    fd: &FdConfig,
) -> Result<(GaussianState, DerivativeBundle)> {
    family.evaluate_with_derivatives(eps, fd)
}

/// Free-function form of [`StateFamily::p1_matrix`].
pub fn p1_matrix(family: &StateFamily, eps: f64, fd: &FdConfig, tol: &Tolerances) -> Result<P1Blocks> {
    family.p1_matrix(eps, fd, tol)
}
