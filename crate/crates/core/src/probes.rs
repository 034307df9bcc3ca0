//! Probe states, estimation channels, and the closed-form optimization
//! results for squeezing-strength estimation.
//!
//! A probe mode is a displaced, rotated, squeezed thermal state: its
//! covariance is R(theta) S(r) D S(r)† R(theta)† with D = (1 + 2 n_th) I,
//! the displacement set last. Probes can optionally be entangled by a
//! two-mode squeezer acting after the per-mode operations.
//!
//! The estimation channel is a one-parameter Gaussian orbit (squeeze,
//! rotate, displace, two-mode squeeze); [`apply_channel_family`] packages
//! probe and channel as a generator-tier family, so every QFI route gets
//! exact derivative data.
//!
//! For the squeezing channel on a single-mode probe the QFI is available in
//! closed form:
//!
//! H = 4 lambda^2/(lambda^2 + 1) (cosh^4 r + sinh^4 r
//!       - 2 cos(4 theta) cosh^2 r sinh^2 r)
//!   + (4 d^2 / lambda) (cosh 2r + cos(2 (theta - phi)) sinh 2r)
//!
//! with lambda = 1 + 2 n_th and displacement d e^{i phi}. Both angle factors
//! are maximal at theta = phi = pi/4, giving
//!
//! H_max = 4 lambda^2 cosh^2(2r) / (lambda^2 + 1) + 4 d^2 e^{2r} / lambda,
//!
//! the basis for the enhancement-order, optimal-temperature, and
//! photon-budget analyses below.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::family::StateFamily;
use crate::linalg::{c, cr, CMat, RMat};
use crate::state::GaussianState;

/// One probe mode: occupation, squeezing strength, squeezing orientation,
/// and displacement d e^{i phi}.
#[derive(Debug, Clone, Copy)]
pub struct ProbeMode {
    pub n_th: f64,
    pub r: f64,
    pub theta: f64,
    pub displacement: C64,
}

impl ProbeMode {
    pub fn vacuum() -> Self {
        Self {
            n_th: 0.0,
            r: 0.0,
            theta: 0.0,
            displacement: C64::ZERO,
        }
    }
}

/// A full probe: one entry per mode, plus an optional two-mode squeeze
/// (strength between modes 0 and 1) applied after the per-mode stages.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    pub modes: Vec<ProbeMode>,
    pub tms: Option<f64>,
}

impl ProbeSpec {
    pub fn single(mode: ProbeMode) -> Self {
        Self {
            modes: vec![mode],
            tms: None,
        }
    }

    /// Symplectic eigenvalue 1 + 2 n_th of mode `i`.
    pub fn lambda(&self, i: usize) -> f64 {
        1.0 + 2.0 * self.modes[i].n_th
    }
}

/// A one-parameter estimation channel.
#[derive(Debug, Clone, Copy)]
pub enum ChannelSpec {
    /// Single-mode squeeze along the fixed axis: a -> cosh(eps) a - sinh(eps) a†.
    Squeeze { mode: usize },
    /// Phase rotation a -> e^{-i eps} a.
    Rotate { mode: usize },
    /// Displacement d~ -> d~ + eps rate.
    Displace { mode: usize, rate: C64 },
    /// Two-mode squeeze between a pair of modes.
    TwoModeSqueeze { modes: (usize, usize) },
}

impl ChannelSpec {
    fn check_mode(mode: usize, n: usize) -> Result<()> {
        if mode >= n {
            return Err(Error::Input(format!(
                "channel acts on mode {mode} but the probe has {n} modes"
            )));
        }
        Ok(())
    }

    /// The phase-space generator X of the channel orbit exp(X eps).
    pub fn generator(&self, n: usize) -> Result<CMat> {
        let mut x = CMat::zeros(2 * n, 2 * n);
        match *self {
            ChannelSpec::Squeeze { mode } => {
                Self::check_mode(mode, n)?;
                x[(mode, n + mode)] = cr(-1.0);
                x[(n + mode, mode)] = cr(-1.0);
            }
            ChannelSpec::Rotate { mode } => {
                Self::check_mode(mode, n)?;
                x[(mode, mode)] = c(0.0, -1.0);
                x[(n + mode, n + mode)] = c(0.0, 1.0);
            }
            ChannelSpec::Displace { mode, .. } => {
                Self::check_mode(mode, n)?;
            }
            ChannelSpec::TwoModeSqueeze { modes: (i, j) } => {
                Self::check_mode(i, n)?;
                Self::check_mode(j, n)?;
                if i == j {
                    return Err(Error::Input(
                        "two-mode squeezing needs two distinct modes".into(),
                    ));
                }
                x[(i, n + j)] = cr(1.0);
                x[(j, n + i)] = cr(1.0);
                x[(n + i, j)] = cr(1.0);
                x[(n + j, i)] = cr(1.0);
            }
        }
        Ok(x)
    }

    /// The constant displacement rate of the channel, if it has one.
    pub fn displacement_rate(&self, n: usize) -> Result<Option<Vec<C64>>> {
        match *self {
            ChannelSpec::Displace { mode, rate } => {
                Self::check_mode(mode, n)?;
                let mut v = vec![C64::ZERO; n];
                v[mode] = rate;
                Ok(Some(v))
            }
            _ => Ok(None),
        }
    }
}

/// Symplectic matrix of the per-mode stage R(theta) S(r) on `mode`.
fn mode_symplectic(n: usize, mode: usize, r: f64, theta: f64) -> CMat {
    let mut s = CMat::identity(2 * n, 2 * n);
    let (ch, sh) = (r.cosh(), r.sinh());
    let phase = C64::from_polar(1.0, -theta);
    // R(theta) S(r) restricted to the mode's 2x2 ladder block.
    s[(mode, mode)] = phase * ch;
    s[(mode, n + mode)] = phase * (-sh);
    s[(n + mode, mode)] = phase.conj() * (-sh);
    s[(n + mode, n + mode)] = phase.conj() * ch;
    s
}

/// Build the probe state from its description.
pub fn build_probe(spec: &ProbeSpec) -> Result<GaussianState> {
    let n = spec.modes.len();
    if n == 0 {
        return Err(Error::Input("probe needs at least one mode".into()));
    }
    let occupations: Vec<f64> = spec.modes.iter().map(|m| m.n_th).collect();
    let mut state = GaussianState::thermal(&occupations)?;
    for (i, mode) in spec.modes.iter().enumerate() {
        if mode.r != 0.0 || mode.theta != 0.0 {
            state = state.transformed(&mode_symplectic(n, i, mode.r, mode.theta))?;
        }
    }
    if let Some(xi) = spec.tms {
        if n < 2 {
            return Err(Error::Input(
                "two-mode squeezing needs at least two probe modes".into(),
            ));
        }
        let x = ChannelSpec::TwoModeSqueeze { modes: (0, 1) }.generator(n)?;
        state = state.transformed(&crate::linalg::expm(&(x * cr(xi))))?;
    }
    let displacement: Vec<C64> = spec.modes.iter().map(|m| m.displacement).collect();
    state.with_displacement_tilde(&displacement)
}

/// Wrap a probe state and a channel into a generator-tier one-parameter
/// family, so all derivative data is exact.
pub fn apply_channel_family(probe: &GaussianState, channel: &ChannelSpec) -> Result<StateFamily> {
    let n = probe.modes();
    let x = channel.generator(n)?;
    match channel.displacement_rate(n)? {
        Some(rate) => StateFamily::generator_with_rate(probe.clone(), x, Some(&rate)),
        None => StateFamily::generator(probe.clone(), x),
    }
}

/// Build the probe and attach the channel in one step.
pub fn probe_family(spec: &ProbeSpec, channel: &ChannelSpec) -> Result<StateFamily> {
    apply_channel_family(&build_probe(spec)?, channel)
}

// ---------------------------------------------------------------------------
// Closed forms for the squeezing channel on a single-mode probe
// ---------------------------------------------------------------------------

/// QFI of the squeezing channel on the probe (lambda, r, theta, d e^{i phi}),
/// in closed form. Independent of the channel parameter.
pub fn squeezing_qfi_at_angles(lambda: f64, r: f64, theta: f64, d_mag: f64, phi: f64) -> f64 {
    let (ch, sh) = (r.cosh(), r.sinh());
    let covariance_factor =
        ch.powi(4) + sh.powi(4) - 2.0 * (4.0 * theta).cos() * ch * ch * sh * sh;
    let unitary = 4.0 * lambda * lambda / (lambda * lambda + 1.0) * covariance_factor;
    let disp = 4.0 * d_mag * d_mag / lambda
        * ((2.0 * r).cosh() + (2.0 * (theta - phi)).cos() * (2.0 * r).sinh());
    unitary + disp
}

/// Closed-form QFI of the squeezing channel for a single-mode probe spec.
pub fn squeezing_channel_qfi_closed(spec: &ProbeSpec) -> Result<f64> {
    if spec.modes.len() != 1 || spec.tms.is_some() {
        return Err(Error::NotApplicable(
            "the squeezing-channel closed form covers single-mode probes".into(),
        ));
    }
    let m = &spec.modes[0];
    Ok(squeezing_qfi_at_angles(
        spec.lambda(0),
        m.r,
        m.theta,
        m.displacement.norm(),
        m.displacement.arg(),
    ))
}

/// The closed form at the optimal angles theta = phi = pi/4:
/// H = 4 lambda^2 cosh^2(2r)/(lambda^2 + 1) + 4 d^2 e^{2r} / lambda.
pub fn squeezing_channel_qfi_optimal(lambda: f64, r: f64, d_mag: f64) -> f64 {
    let c2r = (2.0 * r).cosh();
    4.0 * lambda * lambda * c2r * c2r / (lambda * lambda + 1.0)
        + 4.0 * d_mag * d_mag * (2.0 * r).exp() / lambda
}

/// Grid-search the closed form over (theta, phi) in [0, pi]^2 on a
/// `grid_n` x `grid_n` lattice; returns (theta, phi, value). Ties within
/// 1e-12 relative keep the earliest (lowest theta, then lowest phi) point,
/// so symmetric maxima resolve deterministically.
pub fn optimal_probe_angles(lambda: f64, r: f64, d_mag: f64, grid_n: usize) -> (f64, f64, f64) {
    let step = std::f64::consts::PI / (grid_n - 1) as f64;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..grid_n {
        let theta = i as f64 * step;
        for j in 0..grid_n {
            let phi = j as f64 * step;
            let h = squeezing_qfi_at_angles(lambda, r, theta, d_mag, phi);
            if h > best.2 * (1.0 + 1e-12) + 1e-300 {
                best = (theta, phi, h);
            }
        }
    }
    best
}

/// Squeezing strength at which the optimal-probe enhancement factor
/// cosh^2(2r) reaches 10^k: r = asinh sqrt((10^{k/2} - 1) / 2).
pub fn enhancement_squeezing_for_orders(k: f64) -> f64 {
    ((10f64.powf(k / 2.0) - 1.0) / 2.0).sqrt().asinh()
}

/// Two-decimal large-k approximation of [`enhancement_squeezing_for_orders`]
/// (the exact slope is ln(10)/4, the exact intercept ln(2)/2):
/// r(k) ~ 0.35 + 0.58 k, good to 2% for k >= 2.
pub fn enhancement_asymptote(k: f64) -> f64 {
    0.35 + 0.58 * k
}

/// How the optimal-angle QFI behaves as a function of the probe temperature
/// at fixed squeezing and displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThermalTrend {
    /// The interior stationary point is the global maximum.
    InteriorMaximum,
    /// The pure boundary lambda = 1 beats any stationary point.
    PureBoundary,
    /// No displacement: the QFI increases in lambda toward the finite
    /// supremum 4 cosh^2(2r); no maximizer exists.
    IncreasingInTemperature,
}

/// Result of optimizing the probe temperature at fixed r and displacement.
#[derive(Debug, Clone, Copy)]
pub struct ThermalOptimum {
    /// Optimal symplectic eigenvalue lambda = 1 + 2 n_th (infinite when the
    /// supremum is approached, never attained).
    pub lambda: f64,
    /// Optimal thermal occupation.
    pub n_th: f64,
    /// The QFI at the optimum (or its supremum).
    pub qfi: f64,
    /// Monotonicity diagnosis.
    pub trend: ThermalTrend,
    /// The stationary point on the decreasing branch of
    /// lambda^3/(lambda^2+1)^2, when one exists.
    pub stationary: Option<f64>,
}

/// Maximize the optimal-angle QFI over the probe temperature at fixed
/// squeezing r >= 0 and displacement magnitude d.
///
/// dH/dlambda has the sign of f(lambda) - c with f(lambda) =
/// lambda^3/(lambda^2+1)^2 and c = d^2 e^{2r} / (2 cosh^2 2r). f rises from
/// 1/4 at lambda = 1 to its global maximum 3 sqrt(3)/16 at lambda = sqrt(3)
/// and then decays to zero, so:
///
/// * d = 0: H increases for all lambda; the supremum 4 cosh^2(2r) sits at
///   infinite temperature and no stationary point exists.
/// * c above the maximum of f: H decreases on all of [1, inf); the boundary
///   lambda = 1 wins and no stationary point exists.
/// * otherwise the unique stationary point on the decreasing branch is a
///   local maximum, found by bisection to 1e-12; it is compared against the
///   boundary value, which can still win for c between f(1) = 1/4 and the
///   maximum of f.
pub fn optimal_thermal_occupation(r: f64, d_mag: f64) -> Result<ThermalOptimum> {
    if d_mag < 0.0 || r < 0.0 {
        return Err(Error::Input(format!(
            "need r >= 0 and d >= 0, got r = {r}, d = {d_mag}"
        )));
    }
    let c2r = (2.0 * r).cosh();
    if d_mag == 0.0 {
        return Ok(ThermalOptimum {
            lambda: f64::INFINITY,
            n_th: f64::INFINITY,
            qfi: 4.0 * c2r * c2r,
            trend: ThermalTrend::IncreasingInTemperature,
            stationary: None,
        });
    }
    let c_target = d_mag * d_mag * (2.0 * r).exp() / (2.0 * c2r * c2r);
    let f = |l: f64| l.powi(3) / (l * l + 1.0).powi(2);
    let f_max = 3.0 * 3f64.sqrt() / 16.0; // at lambda = sqrt(3)
    let boundary_qfi = squeezing_channel_qfi_optimal(1.0, r, d_mag);

    if c_target >= f_max {
        return Ok(ThermalOptimum {
            lambda: 1.0,
            n_th: 0.0,
            qfi: boundary_qfi,
            trend: ThermalTrend::PureBoundary,
            stationary: None,
        });
    }

    // Bisect f(lambda) = c on the decreasing branch [sqrt(3), inf).
    let mut lo = 3f64.sqrt();
    let mut hi = 1e6;
    while f(hi) > c_target {
        hi *= 10.0;
        if hi > 1e18 {
            return Err(Error::Numerical(
                "no bracket for the stationary temperature".into(),
            ));
        }
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > c_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let stationary = 0.5 * (lo + hi);
    let interior_qfi = squeezing_channel_qfi_optimal(stationary, r, d_mag);

    if interior_qfi >= boundary_qfi {
        Ok(ThermalOptimum {
            lambda: stationary,
            n_th: 0.5 * (stationary - 1.0),
            qfi: interior_qfi,
            trend: ThermalTrend::InteriorMaximum,
            stationary: Some(stationary),
        })
    } else {
        Ok(ThermalOptimum {
            lambda: 1.0,
            n_th: 0.0,
            qfi: boundary_qfi,
            trend: ThermalTrend::PureBoundary,
            stationary: Some(stationary),
        })
    }
}

/// Best QFI under a mean-photon budget n split into thermal photons n_th,
/// displacement photons n_d, and squeezing photons (the remainder):
///
/// H = 2 (1 + 2n - 2 n_d)^2 / (1 + 2 n_th (1 + n_th))
///   + 4 n_d (1 + 2n - 2 n_d
///            + 2 sqrt(n - n_d - n_th) sqrt(1 + n - n_d + n_th))
///     / (1 + 2 n_th)^2.
pub fn qfi_max_photon_budget(n: f64, n_th: f64, n_d: f64) -> Result<f64> {
    if n_d < 0.0 || n_th < 0.0 {
        return Err(Error::Input(format!(
            "photon allocations must be non-negative, got n_th = {n_th}, n_d = {n_d}"
        )));
    }
    if n_d + n_th > n {
        return Err(Error::Input(format!(
            "photon budget exceeded: n_th + n_d = {} > n = {n}",
            n_th + n_d
        )));
    }
    let first = 2.0 * (1.0 + 2.0 * n - 2.0 * n_d).powi(2) / (1.0 + 2.0 * n_th * (1.0 + n_th));
    let root = (n - n_d - n_th).sqrt() * (1.0 + n - n_d + n_th).sqrt();
    let second =
        4.0 * n_d * (1.0 + 2.0 * n - 2.0 * n_d + 2.0 * root) / (1.0 + 2.0 * n_th).powi(2);
    Ok(first + second)
}

/// Maximize [`qfi_max_photon_budget`] over the feasible simplex
/// {n_th >= 0, n_d >= 0, n_th + n_d <= n} by a step-0.01 grid scan followed
/// by local grid refinement; returns (n_th, n_d, value) at resolution ~1e-6.
pub fn photon_budget_argmax(n: f64) -> Result<(f64, f64, f64)> {
    if n < 0.0 {
        return Err(Error::Input(format!("photon budget must be >= 0, got {n}")));
    }
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let scan = |lo_th: f64, hi_th: f64, lo_d: f64, hi_d: f64, step: f64,
                best: &mut (f64, f64, f64)| {
        let lo_th = lo_th.max(0.0);
        let lo_d = lo_d.max(0.0);
        let th_steps = (((hi_th.min(n) - lo_th) / step + 1e-9).floor() as i64).max(0);
        for i in 0..=th_steps {
            let th = (lo_th + i as f64 * step).min(n);
            let d_cap = hi_d.min(n - th);
            let d_steps = (((d_cap - lo_d) / step + 1e-9).floor() as i64).max(0);
            for j in 0..=d_steps {
                let d = (lo_d + j as f64 * step).min(n - th);
                let h = qfi_max_photon_budget(n, th, d)
                    .expect("grid point is feasible by construction");
                if h > best.2 * (1.0 + 1e-12) + 1e-300 {
                    *best = (th, d, h);
                }
            }
        }
    };
    let mut step = 0.01 * n.max(1.0);
    scan(0.0, n, 0.0, n, step, &mut best);
    for _ in 0..4 {
        let (th, d, _) = best;
        let next = step / 10.0;
        scan(th - step, th + step, d - step, d + step, next, &mut best);
        step = next;
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Phase-space ellipses
// ---------------------------------------------------------------------------

/// One sampled one-standard-deviation ellipse of a single-mode state.
#[derive(Debug, Clone)]
pub struct Ellipse {
    /// Probe squeezing orientation that produced the state.
    pub theta: f64,
    /// Channel parameter value.
    pub eps: f64,
    /// Samples (t, x, p): the quadrature point at angle parameter t.
    pub points: Vec<(f64, f64, f64)>,
    /// Exact area pi sqrt(det sigma_R).
    pub area: f64,
}

/// Principal square root of a symmetric positive-definite 2x2 matrix.
fn sqrt_spd_2x2(m: &RMat) -> Result<RMat> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let tr = m[(0, 0)] + m[(1, 1)];
    if det <= 0.0 || tr <= 0.0 {
        return Err(Error::Numerical(format!(
            "matrix is not positive definite: trace {tr}, det {det}"
        )));
    }
    let s = det.sqrt();
    let norm = (tr + 2.0 * s).sqrt();
    let mut out = m.clone();
    out[(0, 0)] += s;
    out[(1, 1)] += s;
    Ok(out / norm)
}

/// Sample the one-standard-deviation ellipse of a single-mode state in the
/// real (x, p) plane: points c + sqrt(sigma_R) (cos t, sin t) for n_points
/// values of t in [0, 2 pi), plus the exact area pi sqrt(det sigma_R).
pub fn ellipse_export(
    state: &GaussianState,
    n_points: usize,
) -> Result<(Vec<(f64, f64, f64)>, f64)> {
    if state.modes() != 1 {
        return Err(Error::NotApplicable(format!(
            "ellipse sampling covers one mode, got {}",
            state.modes()
        )));
    }
    if n_points == 0 {
        return Err(Error::Input("need at least one sample point".into()));
    }
    let real = state.to_real();
    let root = sqrt_spd_2x2(&real.sigma)?;
    let det = real.sigma[(0, 0)] * real.sigma[(1, 1)] - real.sigma[(0, 1)] * real.sigma[(1, 0)];
    let area = std::f64::consts::PI * det.sqrt();
    let points = (0..n_points)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n_points as f64;
            let x = real.d[0] + root[(0, 0)] * t.cos() + root[(0, 1)] * t.sin();
            let p = real.d[1] + root[(1, 0)] * t.cos() + root[(1, 1)] * t.sin();
            (t, x, p)
        })
        .collect();
    Ok((points, area))
}

/// The ellipse family of the squeezing-orientation figure: a pure r = 0.8
/// probe at five orientations theta in {0, pi/8, pi/4, 3 pi/8, pi/2},
/// before (eps = 0) and after (eps = 0.1) the squeezing channel.
pub fn figure_ellipses(n_points: usize) -> Result<Vec<Ellipse>> {
    let thetas: [f64; 5] = std::array::from_fn(|i| i as f64 * std::f64::consts::PI / 8.0);
    let mut out = Vec::with_capacity(10);
    for &theta in &thetas {
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.0,
            r: 0.8,
            theta,
            displacement: C64::ZERO,
        });
        let family = probe_family(&spec, &ChannelSpec::Squeeze { mode: 0 })?;
        for eps in [0.0, 0.1] {
            let state = family.state_at(eps)?;
            let (points, area) = ellipse_export(&state, n_points)?;
            out.push(Ellipse {
                theta,
                eps,
                points,
                area,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use crate::qfi::{qfi_auto, QfiConfig};
    use std::f64::consts::{FRAC_PI_4, PI};

    fn single(n_th: f64, r: f64, theta: f64, d: C64) -> ProbeSpec {
        ProbeSpec::single(ProbeMode {
            n_th,
            r,
            theta,
            displacement: d,
        })
    }

    #[test]
    fn all_zero_spec_is_vacuum() {
        let probe = build_probe(&single(0.0, 0.0, 0.0, C64::ZERO)).unwrap();
        assert!((probe.covariance() - CMat::identity(2, 2)).norm() < 1e-14);
        assert!(probe.displacement().norm() < 1e-15);
    }

    #[test]
    fn bare_thermal_spec_is_twice_identity() {
        let probe = build_probe(&single(0.5, 0.0, 0.0, C64::ZERO)).unwrap();
        assert!((probe.covariance() - CMat::identity(2, 2) * cr(2.0)).norm() < 1e-14);
    }

    #[test]
    fn probe_covariance_blocks() {
        // sigma = lambda [[cosh 2r, -sinh 2r e^{-2 i theta}], [conj, cosh 2r]].
        let (n_th, r, theta) = (0.5, 0.6, 0.4);
        let lambda = 2.0;
        let probe = build_probe(&single(n_th, r, theta, c(0.3, 0.1))).unwrap();
        let x = probe.x_block();
        let y = probe.y_block();
        assert!((x[(0, 0)] - cr(lambda * (2.0 * r).cosh())).norm() < 1e-12);
        let expect_y = -lambda * (2.0 * r).sinh() * C64::from_polar(1.0, -2.0 * theta);
        assert!(
            (y[(0, 0)] - expect_y).norm() < 1e-12,
            "Y = {} vs {expect_y}",
            y[(0, 0)]
        );
        assert!((probe.displacement_tilde()[0] - c(0.3, 0.1)).norm() < 1e-14);
    }

    #[test]
    fn probe_photon_number_matches_breakdown_and_oracle() {
        // n = n_d + n_th + (1 + 2 n_th) sinh^2 r, cross-checked against the
        // number expectation of the independently built truncated matrix.
        let (n_th, r, d_mag) = (0.2, 0.8, 1.0);
        let spec = single(n_th, r, 0.3, C64::from_polar(d_mag, 0.7));
        let probe = build_probe(&spec).unwrap();
        let lambdas = probe.mean_photon_numbers();
        let expect = d_mag * d_mag + n_th + (1.0 + 2.0 * n_th) * r.sinh().powi(2);
        assert!(
            (lambdas[0] - expect).abs() < 1e-12,
            "{} vs {expect}",
            lambdas[0]
        );
        let rep = fock::FockRep::new(1, 96);
        let (rho, _) = fock::fock_build(&rep, &spec).unwrap();
        let fock_n = fock::mean_photons(&rep, &rho).unwrap()[0];
        assert!((fock_n - expect).abs() < 1e-6, "{fock_n} vs {expect}");
    }

    #[test]
    fn probe_symplectic_eigenvalue_is_lambda() {
        let spec = single(0.35, 0.9, 1.1, c(0.4, -0.2));
        let probe = build_probe(&spec).unwrap();
        let lambdas = crate::williamson::symplectic_eigenvalues(
            probe.covariance(),
            &crate::state::Tolerances::default(),
        )
        .unwrap();
        assert!((lambdas[0] - 1.7).abs() < 1e-10, "{lambdas:?}");
    }

    #[test]
    fn squeeze_channel_on_vacuum_covariance() {
        let fam = probe_family(&single(0.0, 0.0, 0.0, C64::ZERO), &ChannelSpec::Squeeze {
            mode: 0,
        })
        .unwrap();
        for eps in [0.0, 0.3, -0.4] {
            let st = fam.state_at(eps).unwrap();
            assert!((st.x_block()[(0, 0)] - cr((2.0 * eps).cosh())).norm() < 1e-12);
            assert!((st.y_block()[(0, 0)] - cr(-(2.0 * eps).sinh())).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_channel_on_thermal_is_constant() {
        let fam = probe_family(&single(0.7, 0.0, 0.0, C64::ZERO), &ChannelSpec::Rotate {
            mode: 0,
        })
        .unwrap();
        let base = fam.state_at(0.0).unwrap();
        let moved = fam.state_at(0.9).unwrap();
        assert!((base.covariance() - moved.covariance()).norm() < 1e-12);
        assert!(base.displacement().norm() < 1e-15 && moved.displacement().norm() < 1e-15);
    }

    #[test]
    fn displacement_channel_is_linear_in_eps() {
        let fam = probe_family(
            &single(0.0, 0.0, 0.0, c(0.2, 0.1)),
            &ChannelSpec::Displace {
                mode: 0,
                rate: c(0.0, 2.0),
            },
        )
        .unwrap();
        let st = fam.state_at(0.5).unwrap();
        assert!((st.displacement_tilde()[0] - c(0.2, 1.1)).norm() < 1e-14);
        assert!((st.covariance() - CMat::identity(2, 2)).norm() < 1e-13);
    }

    #[test]
    fn closed_form_baselines() {
        // Vacuum probe.
        let h = squeezing_channel_qfi_closed(&single(0.0, 0.0, 0.0, C64::ZERO)).unwrap();
        assert!((h - 2.0).abs() < 1e-15);
        // Bare thermal probe lambda = 2.
        let h = squeezing_channel_qfi_closed(&single(0.5, 0.0, 0.0, C64::ZERO)).unwrap();
        assert!((h - 16.0 / 5.0).abs() < 1e-14, "{h}");
        // At the optimal angles the general form collapses to the optimum.
        let d = C64::from_polar(0.9, FRAC_PI_4);
        let h = squeezing_channel_qfi_closed(&single(0.3, 0.7, FRAC_PI_4, d)).unwrap();
        let opt = squeezing_channel_qfi_optimal(1.6, 0.7, 0.9);
        assert!((h - opt).abs() < 1e-12 * opt);
    }

    #[test]
    fn closed_form_matches_machinery() {
        let cfg = QfiConfig::default();
        for &(n_th, r, theta, d_mag, phi) in &[
            (0.3f64, 0.7f64, 0.9f64, 0.8f64, 0.3f64),
            (0.0, 0.5, 0.0, 0.0, 0.0),
            (0.8, 0.0, 0.2, 1.2, 1.0),
            (0.5, 0.9, FRAC_PI_4, 0.7, FRAC_PI_4),
            (0.0, 0.8, FRAC_PI_4, 0.0, 0.0),
        ] {
            let spec = single(n_th, r, theta, C64::from_polar(d_mag, phi));
            let family = probe_family(&spec, &ChannelSpec::Squeeze { mode: 0 }).unwrap();
            let h = qfi_auto(&family, 0.0, &cfg).unwrap().value;
            let closed = squeezing_channel_qfi_closed(&spec).unwrap();
            assert!(
                (h - closed).abs() < 1e-9 * closed.max(1.0),
                "machinery {h} vs closed {closed} at n_th={n_th} r={r} theta={theta}"
            );
        }
    }

    #[test]
    fn closed_form_is_channel_parameter_independent() {
        let cfg = QfiConfig::default();
        let spec = single(0.4, 0.6, 0.8, c(0.5, 0.3));
        let family = probe_family(&spec, &ChannelSpec::Squeeze { mode: 0 }).unwrap();
        let closed = squeezing_channel_qfi_closed(&spec).unwrap();
        for eps in [-0.3, 0.0, 0.2, 0.7] {
            let h = qfi_auto(&family, eps, &cfg).unwrap().value;
            assert!(
                (h - closed).abs() < 1e-8 * closed,
                "eps = {eps}: {h} vs {closed}"
            );
        }
    }

    #[test]
    fn optimal_angles_are_quarter_pi() {
        let (theta, phi, h) = optimal_probe_angles(1.7, 0.8, 0.9, 81);
        assert!((theta - FRAC_PI_4).abs() < 1e-12, "theta = {theta}");
        assert!((phi - FRAC_PI_4).abs() < 1e-12, "phi = {phi}");
        let expect = squeezing_channel_qfi_optimal(1.7, 0.8, 0.9);
        assert!((h - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn optimal_form_baselines() {
        let r = 0.8f64;
        let h = squeezing_channel_qfi_optimal(1.0, r, 0.0);
        assert!((h - 2.0 * (2.0 * r).cosh().powi(2)).abs() < 1e-12);
        let h = squeezing_channel_qfi_optimal(1.0, 0.0, 1.0);
        assert!((h - 6.0).abs() < 1e-14);
    }

    #[test]
    fn enhancement_squeezing_hits_powers_of_ten() {
        assert_eq!(enhancement_squeezing_for_orders(0.0), 0.0);
        let r1 = enhancement_squeezing_for_orders(1.0);
        assert!((r1 - 0.9093).abs() < 1e-4, "r(1) = {r1}");
        for k in [1.0f64, 2.0, 4.0, 6.0] {
            let r = enhancement_squeezing_for_orders(k);
            let factor = (2.0 * r).cosh().powi(2);
            assert!(
                (factor - 10f64.powf(k)).abs() < 1e-10 * 10f64.powf(k),
                "k = {k}: factor = {factor}"
            );
            if k >= 2.0 {
                let asym = enhancement_asymptote(k);
                assert!((asym - r).abs() < 0.02 * r, "k = {k}: {asym} vs {r}");
            }
        }
        // r = 1.46 gives the quoted enhancement of roughly 86.5 over the
        // unsqueezed probe, and exactly cosh^2(2.92).
        let ratio = squeezing_channel_qfi_optimal(1.0, 1.46, 0.0)
            / squeezing_channel_qfi_optimal(1.0, 0.0, 0.0);
        assert!((ratio - (2.92f64).cosh().powi(2)).abs() < 1e-10 * ratio);
        assert!((ratio - 86.5).abs() < 0.1, "ratio = {ratio}");
    }

    #[test]
    fn photon_budget_matches_substitution() {
        for &(n, n_th, n_d) in &[(1.0f64, 0.1f64, 0.2f64), (2.0, 0.0, 0.0), (4.0, 0.5, 1.0)] {
            let lambda = 1.0 + 2.0 * n_th;
            let sinh2 = (n - n_d - n_th) / lambda;
            let r = sinh2.sqrt().asinh();
            let direct = squeezing_channel_qfi_optimal(lambda, r, n_d.sqrt());
            let budget = qfi_max_photon_budget(n, n_th, n_d).unwrap();
            assert!(
                (budget - direct).abs() < 1e-12 * direct.max(1.0),
                "budget {budget} vs direct {direct}"
            );
        }
        assert!((qfi_max_photon_budget(1.0, 0.0, 0.0).unwrap() - 18.0).abs() < 1e-12);
        assert!((qfi_max_photon_budget(1.0, 1.0, 0.0).unwrap() - 18.0 / 5.0).abs() < 1e-12);
        assert!((qfi_max_photon_budget(2.0, 0.0, 0.0).unwrap() - 50.0).abs() < 1e-12);
        assert!(qfi_max_photon_budget(1.0, 0.3, 0.8).is_err());
    }

    #[test]
    fn photon_budget_peaks_at_pure_squeezed_vacuum() {
        let (n_th, n_d, h) = photon_budget_argmax(1.0).unwrap();
        assert!(n_th.abs() < 1e-6 && n_d.abs() < 1e-6, "({n_th}, {n_d})");
        assert!((h - 18.0).abs() < 1e-9, "{h}");
    }

    #[test]
    fn thermal_optimum_interior_case() {
        // Small displacement: the stationary point on the decreasing branch
        // wins over the pure boundary.
        let opt = optimal_thermal_occupation(0.5, 0.5).unwrap();
        assert_eq!(opt.trend, ThermalTrend::InteriorMaximum, "{opt:?}");
        let l = opt.lambda;
        assert!(l > 3f64.sqrt());
        // The stationarity equation holds to 1e-10.
        let f = |l: f64| l.powi(3) / (l * l + 1.0).powi(2);
        let c_target = 0.25 * 1f64.exp() / (2.0 * 1f64.cosh().powi(2));
        assert!((f(l) - c_target).abs() < 1e-10, "residual {}", f(l) - c_target);
        // Local maximum: H(lambda +/- delta) <= H(lambda).
        for delta in [1e-3, 1e-2, 0.3] {
            assert!(squeezing_channel_qfi_optimal(l + delta, 0.5, 0.5) <= opt.qfi);
            assert!(squeezing_channel_qfi_optimal((l - delta).max(1.0), 0.5, 0.5) <= opt.qfi);
        }
        assert!(opt.qfi >= squeezing_channel_qfi_optimal(1.0, 0.5, 0.5));
    }

    #[test]
    fn thermal_optimum_no_interior_root_case() {
        // r = 0.5, d = 1 puts the target above the global maximum of
        // lambda^3/(lambda^2+1)^2: the stationarity equation has no solution
        // and the QFI is monotone decreasing, so the boundary wins.
        let opt = optimal_thermal_occupation(0.5, 1.0).unwrap();
        assert_eq!(opt.trend, ThermalTrend::PureBoundary, "{opt:?}");
        assert!(opt.stationary.is_none());
        assert_eq!(opt.lambda, 1.0);
        let mut prev = opt.qfi;
        for l in [1.2, 1.8, 3.0, 10.0] {
            let h = squeezing_channel_qfi_optimal(l, 0.5, 1.0);
            assert!(h < prev, "H({l}) = {h} not below {prev}");
            prev = h;
        }
    }

    #[test]
    fn thermal_optimum_band_case() {
        // Target between f(1) = 1/4 and the maximum of f: both the boundary
        // and a stationary point are candidates; the larger must be chosen.
        let c_target = 0.3f64;
        let d = (c_target * 2.0 * 1f64.cosh().powi(2) / 1f64.exp()).sqrt();
        let opt = optimal_thermal_occupation(0.5, d).unwrap();
        let boundary = squeezing_channel_qfi_optimal(1.0, 0.5, d);
        assert!(opt.qfi >= boundary - 1e-12);
        assert!(opt.stationary.is_some());
    }

    #[test]
    fn thermal_optimum_without_displacement_is_increasing() {
        let opt = optimal_thermal_occupation(0.7, 0.0).unwrap();
        assert_eq!(opt.trend, ThermalTrend::IncreasingInTemperature);
        assert!(opt.lambda.is_infinite());
        let sup = 4.0 * (1.4f64).cosh().powi(2);
        assert!((opt.qfi - sup).abs() < 1e-12);
        // The supremum caps the thermal enhancement at a factor of 2 over
        // the pure probe.
        assert!((opt.qfi / squeezing_channel_qfi_optimal(1.0, 0.7, 0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_ellipse_is_unit_circle() {
        let (points, area) = ellipse_export(&GaussianState::vacuum(1), 32).unwrap();
        assert!((area - PI).abs() < 1e-14);
        for &(_, x, p) in &points {
            assert!((x * x + p * p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezed_ellipse_axes() {
        let r = 0.6;
        let probe = build_probe(&single(0.0, r, 0.0, C64::ZERO)).unwrap();
        let (points, area) = ellipse_export(&probe, 4).unwrap();
        assert!((area - PI).abs() < 1e-12);
        // t = 0 points along x with semi-axis e^{-r}; t = pi/2 along p with e^{r}.
        assert!((points[0].1 - (-r).exp()).abs() < 1e-12, "{:?}", points[0]);
        assert!(points[0].2.abs() < 1e-12);
        assert!((points[1].2 - r.exp()).abs() < 1e-12, "{:?}", points[1]);
        assert!(points[1].1.abs() < 1e-12);
    }

    #[test]
    fn figure_ellipses_are_unit_area() {
        let ellipses = figure_ellipses(64).unwrap();
        assert_eq!(ellipses.len(), 10);
        for e in &ellipses {
            assert!(
                (e.area - PI).abs() < 1e-12,
                "area {} at theta {} eps {}",
                e.area,
                e.theta,
                e.eps
            );
            assert_eq!(e.points.len(), 64);
        }
        // Orientation must vary with theta: compare t = 0 points of two
        // orientations after the channel.
        let first = &ellipses[1];
        let last = &ellipses[9];
        assert!((first.points[0].1 - last.points[0].1).abs() > 1e-3);
    }
}
