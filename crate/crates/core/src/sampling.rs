//! Seeded random construction of symplectic-algebra elements, symplectic
//! matrices, physical states, and derivative families.
//!
//! Everything takes an explicit ChaCha generator so test suites are
//! reproducible: the same seed always yields the same objects, across
//! platforms.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::family::StateFamily;
use crate::linalg::{c, cr, expm, CMat, CVec};
use crate::state::GaussianState;

/// The deterministic generator used throughout the test suites.
pub type SeededRng = ChaCha8Rng;

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[lo, hi)`, for callers that build their own scenarios
/// around the samplers without depending on the RNG crates directly.
pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn unit(rng: &mut SeededRng) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Random skew-Hermitian n x n matrix (entries of magnitude ~ scale).
pub fn random_skew_hermitian(rng: &mut SeededRng, n: usize, scale: f64) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(0.0, scale * unit(rng));
        for j in (i + 1)..n {
            let z = c(scale * unit(rng), scale * unit(rng));
            m[(i, j)] = z;
            m[(j, i)] = -z.conj();
        }
    }
    m
}

/// Random complex symmetric n x n matrix.
pub fn random_symmetric(rng: &mut SeededRng, n: usize, scale: f64) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(scale * unit(rng), scale * unit(rng));
        for j in (i + 1)..n {
            let z = c(scale * unit(rng), scale * unit(rng));
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
    }
    m
}

/// Random symplectic-algebra element X = [[R, Q], [conj Q, conj R]] with
/// R skew-Hermitian and Q symmetric, i.e. X† = -K X K.
pub fn random_algebra_element(rng: &mut SeededRng, modes: usize, scale: f64) -> CMat {
    let r = random_skew_hermitian(rng, modes, scale);
    let q = random_symmetric(rng, modes, scale);
    let mut x = CMat::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        for j in 0..modes {
            x[(i, j)] = r[(i, j)];
            x[(i, modes + j)] = q[(i, j)];
            x[(modes + i, j)] = q[(i, j)].conj();
            x[(modes + i, modes + j)] = r[(i, j)].conj();
        }
    }
    x
}

/// Random symplectic matrix exp(X) for a random algebra element X.
pub fn random_symplectic(rng: &mut SeededRng, modes: usize, scale: f64) -> CMat {
    expm(&random_algebra_element(rng, modes, scale))
}

/// Random displacement vector in the mode (tilde) convention.
pub fn random_displacement(rng: &mut SeededRng, modes: usize, scale: f64) -> Vec<C64> {
    (0..modes)
        .map(|_| c(scale * unit(rng), scale * unit(rng)))
        .collect()
}

/// Random physical state: a thermal spectrum drawn from `lambda_range`,
/// conjugated by a random symplectic matrix, with a random displacement.
pub fn random_state(
    rng: &mut SeededRng,
    modes: usize,
    lambda_range: (f64, f64),
    disp_scale: f64,
) -> Result<GaussianState> {
    let n_th: Vec<f64> = (0..modes)
        .map(|_| (rng.random_range(lambda_range.0..lambda_range.1) - 1.0) / 2.0)
        .collect();
    let s = random_symplectic(rng, modes, 0.4);
    let d = random_displacement(rng, modes, disp_scale);
    GaussianState::thermal(&n_th)?
        .transformed(&s)?
        .with_displacement_tilde(&d)
}

/// Random pure state: a random symplectic orbit of the vacuum.
pub fn random_pure_state(
    rng: &mut SeededRng,
    modes: usize,
    disp_scale: f64,
) -> Result<GaussianState> {
    let s = random_symplectic(rng, modes, 0.4);
    let d = random_displacement(rng, modes, disp_scale);
    GaussianState::vacuum(modes)
        .transformed(&s)?
        .with_displacement_tilde(&d)
}

/// Random generator-tier family: a random algebra orbit through a random
/// mixed state, with a random constant displacement rate.
pub fn random_generator_family(
    rng: &mut SeededRng,
    modes: usize,
    lambda_range: (f64, f64),
    disp_scale: f64,
) -> Result<StateFamily> {
    let base = random_state(rng, modes, lambda_range, disp_scale)?;
    let x = random_algebra_element(rng, modes, 0.4);
    let rate = random_displacement(rng, modes, disp_scale);
    StateFamily::generator_with_rate(base, x, Some(&rate))
}

/// Random analytic family with full Williamson data:
///
///   sigma(eps) = S(eps) D(eps) S(eps)†,  S(eps) = exp(X eps) S0,
///   lambda_i(eps) = lambda_i + v_i eps,  d~(eps) = d0 + eps w,
///
/// where X is a random algebra element, S0 a random symplectic matrix, and
/// the spectrum slopes v_i are small enough to keep the family physical on
/// eps in [-0.5, 0.5]. All derivative closures are exact:
/// sigma' = X sigma + sigma X† + S D' S†, S' = X S, lambda_i' = v_i,
/// and sigma'' follows from differentiating once more.
pub fn random_analytic_family(
    rng: &mut SeededRng,
    modes: usize,
    lambda_range: (f64, f64),
    disp_scale: f64,
) -> Result<StateFamily> {
    let n = modes;
    let s0 = random_symplectic(rng, n, 0.35);
    let x = random_algebra_element(rng, n, 0.4);
    let mut l0: Vec<f64> = (0..n)
        .map(|_| rng.random_range(lambda_range.0..lambda_range.1))
        .collect();
    l0.sort_by(|a, b| b.partial_cmp(a).expect("finite spectrum"));
    // Slopes capped so lambda stays above 1 well beyond the stencil reach.
    let max_slope = 0.8 * (lambda_range.0 - 1.0).min(1.0);
    let v: Vec<f64> = (0..n).map(|_| max_slope * unit(rng)).collect();
    let d0 = random_displacement(rng, n, disp_scale);
    let w = random_displacement(rng, n, disp_scale);

    let lambdas_of = {
        let (l0, v) = (l0.clone(), v.clone());
        move |eps: f64| -> Vec<f64> { l0.iter().zip(&v).map(|(l, s)| l + s * eps).collect() }
    };
    let s_of = {
        let (x, s0) = (x.clone(), s0.clone());
        move |eps: f64| -> CMat { expm(&(&x * cr(eps))) * &s0 }
    };
    let diag_of = move |vals: &[f64]| -> CMat {
        let n = vals.len();
        let mut d = CMat::zeros(2 * n, 2 * n);
        for (i, &val) in vals.iter().enumerate() {
            d[(i, i)] = cr(val);
            d[(n + i, n + i)] = cr(val);
        }
        d
    };
    let sigma_of = {
        let (lambdas_of, s_of, diag_of) = (lambdas_of.clone(), s_of.clone(), diag_of);
        move |eps: f64| -> CMat {
            let s = s_of(eps);
            let m = &s * diag_of(&lambdas_of(eps)) * s.adjoint();
            // Symmetrize away round-off so validation sees an exact Hermitian.
            (&m + m.adjoint()) * cr(0.5)
        }
    };
    let d_full_of = {
        let (d0, w) = (d0.clone(), w.clone());
        move |eps: f64| -> CVec {
            let mut d = CVec::zeros(2 * n);
            for i in 0..n {
                let z = d0[i] + w[i] * eps;
                d[i] = z;
                d[n + i] = z.conj();
            }
            d
        }
    };
    // sigma' = X sigma + sigma X† + T with T = S D' S†.
    let t_of = {
        let (s_of, v) = (s_of.clone(), v.clone());
        move |eps: f64| -> CMat {
            let s = s_of(eps);
            let n = v.len();
            let mut dd = CMat::zeros(2 * n, 2 * n);
            for (i, &slope) in v.iter().enumerate() {
                dd[(i, i)] = cr(slope);
                dd[(n + i, n + i)] = cr(slope);
            }
            &s * dd * s.adjoint()
        }
    };
    let sigma_dot_of = {
        let (x, sigma_of, t_of) = (x.clone(), sigma_of.clone(), t_of.clone());
        move |eps: f64| -> CMat {
            let sig = sigma_of(eps);
            &x * &sig + &sig * x.adjoint() + t_of(eps)
        }
    };

    let state_fn = {
        let (sigma_of, d_full_of) = (sigma_of.clone(), d_full_of);
        move |eps: f64| GaussianState::new(n, d_full_of(eps), sigma_of(eps))
    };
    let d_dot_fn = {
        let w = w.clone();
        move |_eps: f64| -> CVec {
            let mut d = CVec::zeros(2 * n);
            for i in 0..n {
                d[i] = w[i];
                d[n + i] = w[i].conj();
            }
            d
        }
    };
    let sigma_ddot_fn = {
        let (x, sigma_dot_of, t_of) = (x.clone(), sigma_dot_of.clone(), t_of);
        // sigma'' = X (sigma' + T) + (sigma' + T) X†.
        move |eps: f64| -> CMat {
            let m = sigma_dot_of(eps) + t_of(eps);
            &x * &m + &m * x.adjoint()
        }
    };
    let factors_fn = {
        let (s_of, lambdas_of) = (s_of.clone(), lambdas_of.clone());
        move |eps: f64| (s_of(eps), lambdas_of(eps))
    };
    let s_dot_fn = {
        let (x, s_of) = (x.clone(), s_of);
        move |eps: f64| -> CMat { &x * s_of(eps) }
    };
    let lambda_dot_fn = {
        let v = v.clone();
        move |_eps: f64| v.clone()
    };

    Ok(StateFamily::analytic(n, state_fn, sigma_dot_of, d_dot_fn)
        .with_sigma_ddot(sigma_ddot_fn)
        .with_factors(factors_fn, s_dot_fn)
        .with_lambda_derivatives(lambda_dot_fn, Some(Box::new(move |_eps: f64| vec![0.0; n]))))
}
