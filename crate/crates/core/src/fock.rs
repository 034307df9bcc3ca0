//! Independent truncated Fock-space oracle.
//!
//! Everything here works on dense density matrices over a truncated number
//! basis (dimension cutoff^modes) and never touches the phase-space
//! machinery, so it can serve as a cross-check for it:
//!
//! * thermal states by their geometric number distribution, with the
//!   truncated tail recorded as a trace deficit before renormalizing;
//! * Gaussian unitaries from the same phase-space generators the families
//!   use, mapped to quadratic ladder polynomials and exponentiated through a
//!   Hermitian eigendecomposition (reused across parameter values);
//! * first and second moments read back off a density matrix;
//! * Uhlmann fidelity and a fidelity-based QFI estimate;
//! * a cutoff doubler that grows the basis until both the trace deficit and
//!   the quantity of interest stop moving.
//!
//! The generator map: a symplectic-algebra element X = [[R, Q], [conj Q,
//! conj R]] (R skew-Hermitian, Q symmetric) corresponds to the anti-Hermitian
//! ladder polynomial
//!
//! G = sum_kl R_kl a†_k a_l + 1/2 sum_kl Q_kl a†_k a†_l
//!     - 1/2 sum_kl conj(Q_kl) a_k a_l,
//!
//! fixed by requiring [a_i, G] to reproduce row i of X on (a, a†).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{c, cr, eigh, frob, sqrtm_psd, CMat, CVec};
use crate::probes::{ChannelSpec, ProbeSpec};
use crate::state::{GaussianState, Tolerances};

/// Eigenvalue clamp for slightly negative roots of PSD matrices.
const PSD_CLAMP: f64 = 1e-10;

/// Basis-growth policy for [`auto_grow`].
#[derive(Debug, Clone, Copy)]
pub struct CutoffConfig {
    /// Starting per-mode cutoff.
    pub initial: usize,
    /// Hard per-mode cap; exceeding it is an error.
    pub max: usize,
    /// Convergence target for both the trace deficit and the quantity drift
    /// between consecutive doublings.
    pub tol: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            initial: 16,
            max: 256,
            tol: 1e-8,
        }
    }
}

/// A truncated multimode number basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockRep {
    pub modes: usize,
    /// Per-mode cutoff: each mode keeps number states 0..cutoff.
    pub cutoff: usize,
}

impl FockRep {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        Self { modes, cutoff }
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    fn single_mode_annihilation(&self) -> CMat {
        let mut a = CMat::zeros(self.cutoff, self.cutoff);
        for n in 1..self.cutoff {
            a[(n - 1, n)] = cr((n as f64).sqrt());
        }
        a
    }

    /// The annihilation operator of one mode on the full tensor space.
    pub fn annihilation(&self, mode: usize) -> CMat {
        assert!(mode < self.modes, "mode {mode} out of range");
        let a = self.single_mode_annihilation();
        let eye = CMat::identity(self.cutoff, self.cutoff);
        let mut out = if mode == 0 { a.clone() } else { eye.clone() };
        for m in 1..self.modes {
            out = out.kronecker(if m == mode { &a } else { &eye });
        }
        out
    }
}

/// Map a phase-space generator to its ladder polynomial on the truncated
/// basis (see the module docs for the correspondence).
pub fn quadratic_generator(rep: &FockRep, x: &CMat) -> Result<CMat> {
    let n = rep.modes;
    if x.nrows() != 2 * n || x.ncols() != 2 * n {
        return Err(Error::Dimension(format!(
            "generator is {}x{} but the representation has {n} modes",
            x.nrows(),
            x.ncols()
        )));
    }
    let dim = rep.dim();
    let ops: Vec<CMat> = (0..n).map(|m| rep.annihilation(m)).collect();
    let mut g = CMat::zeros(dim, dim);
    for k in 0..n {
        for l in 0..n {
            let r_kl = x[(k, l)];
            if r_kl != C64::ZERO {
                g += ops[k].adjoint() * &ops[l] * r_kl;
            }
            let q_kl = x[(k, n + l)];
            if q_kl != C64::ZERO {
                g += ops[k].adjoint() * ops[l].adjoint() * (q_kl * cr(0.5));
                g -= &ops[k] * &ops[l] * (q_kl.conj() * cr(0.5));
            }
        }
    }
    Ok(g)
}

/// The displacement generator sum_i (alpha_i a†_i - conj(alpha_i) a_i).
pub fn displacement_generator(rep: &FockRep, alphas: &[C64]) -> Result<CMat> {
    if alphas.len() != rep.modes {
        return Err(Error::Dimension(format!(
            "expected {} displacement amplitudes, got {}",
            rep.modes,
            alphas.len()
        )));
    }
    let dim = rep.dim();
    let mut g = CMat::zeros(dim, dim);
    for (i, &alpha) in alphas.iter().enumerate() {
        let a = rep.annihilation(i);
        g += a.adjoint() * alpha - a * alpha.conj();
    }
    Ok(g)
}

/// Eigendecomposition of an anti-Hermitian generator, reusable to build
/// exp(eps G) for many eps.
pub struct GeneratorEigen {
    frequencies: Vec<f64>,
    vectors: CMat,
}

impl GeneratorEigen {
    pub fn new(g: &CMat) -> Result<Self> {
        let res = frob(&(g + g.adjoint()));
        if res > 1e-8 * frob(g).max(1.0) {
            return Err(Error::Structure(format!(
                "generator is not anti-Hermitian: residual {res:.3e}"
            )));
        }
        // G = -iH with H Hermitian; exp(eps G) = V exp(-i eps w) V†.
        let h = g * c(0.0, 1.0);
        let (frequencies, vectors) = eigh(&h)?;
        Ok(Self {
            frequencies,
            vectors,
        })
    }

    /// exp(eps G), unitary.
    pub fn unitary(&self, eps: f64) -> CMat {
        let phases = CVec::from_iterator(
            self.frequencies.len(),
            self.frequencies.iter().map(|w| C64::from_polar(1.0, -eps * w)),
        );
        &self.vectors * CMat::from_diagonal(&phases) * self.vectors.adjoint()
    }
}

/// Truncated thermal density matrix with its pre-normalization trace
/// deficit. Occupation 0 gives the exact vacuum projector.
pub fn thermal_density(rep: &FockRep, n_th: &[f64]) -> Result<(CMat, f64)> {
    if n_th.len() != rep.modes {
        return Err(Error::Dimension(format!(
            "expected {} occupations, got {}",
            rep.modes,
            n_th.len()
        )));
    }
    let mut rho = CMat::from_element(1, 1, cr(1.0));
    let mut trace = 1.0;
    for &occ in n_th {
        if occ < 0.0 {
            return Err(Error::Input(format!(
                "thermal occupation must be non-negative, got {occ}"
            )));
        }
        let q = occ / (1.0 + occ);
        let weights: Vec<f64> = (0..rep.cutoff)
            .map(|k| (1.0 - q) * q.powi(k as i32))
            .collect();
        trace *= weights.iter().sum::<f64>();
        let diag = CVec::from_iterator(rep.cutoff, weights.into_iter().map(cr));
        rho = rho.kronecker(&CMat::from_diagonal(&diag));
    }
    let deficit = 1.0 - trace;
    let rho = rho / cr(trace);
    Ok((rho, deficit))
}

/// Build the truncated density matrix of a probe description, entirely in
/// the number basis: the thermal matrix conjugated by the per-mode squeeze
/// and rotation unitaries, the optional two-mode squeezer, and finally the
/// displacement — mirroring the phase-space construction operator by
/// operator. Returns the matrix and the thermal-tail trace deficit (the
/// unitaries preserve the trace exactly; only truncation of their action
/// adds error, which the moment and convergence tests bound).
pub fn fock_build(rep: &FockRep, spec: &ProbeSpec) -> Result<(CMat, f64)> {
    let n = rep.modes;
    if spec.modes.len() != n {
        return Err(Error::Dimension(format!(
            "probe has {} modes but the representation has {n}",
            spec.modes.len()
        )));
    }
    let occupations: Vec<f64> = spec.modes.iter().map(|m| m.n_th).collect();
    let (mut rho, deficit) = thermal_density(rep, &occupations)?;
    let conjugate = |rho: CMat, g: &CMat, eps: f64| -> Result<CMat> {
        let u = GeneratorEigen::new(g)?.unitary(eps);
        Ok(&u * rho * u.adjoint())
    };
    for (i, mode) in spec.modes.iter().enumerate() {
        if mode.r != 0.0 {
            let x = ChannelSpec::Squeeze { mode: i }.generator(n)?;
            rho = conjugate(rho, &quadratic_generator(rep, &x)?, mode.r)?;
        }
        if mode.theta != 0.0 {
            let x = ChannelSpec::Rotate { mode: i }.generator(n)?;
            rho = conjugate(rho, &quadratic_generator(rep, &x)?, mode.theta)?;
        }
    }
    if let Some(xi) = spec.tms {
        if n < 2 {
            return Err(Error::Input(
                "two-mode squeezing needs at least two probe modes".into(),
            ));
        }
        let x = ChannelSpec::TwoModeSqueeze { modes: (0, 1) }.generator(n)?;
        rho = conjugate(rho, &quadratic_generator(rep, &x)?, xi)?;
    }
    let alphas: Vec<C64> = spec.modes.iter().map(|m| m.displacement).collect();
    if alphas.iter().any(|a| a.norm_sqr() > 0.0) {
        rho = conjugate(rho, &displacement_generator(rep, &alphas)?, 1.0)?;
    }
    Ok((rho, deficit))
}

/// First and second moments of a density matrix: d_tilde_i = tr[rho a_i],
/// X_ij = <{Delta a_i, Delta a†_j}>, Y_ij = <{Delta a_i, Delta a_j}>.
pub fn moments(rep: &FockRep, rho: &CMat) -> Result<(CVec, CMat, CMat)> {
    let n = rep.modes;
    if rho.nrows() != rep.dim() {
        return Err(Error::Dimension(format!(
            "density matrix is {}x{} but the representation has dimension {}",
            rho.nrows(),
            rho.ncols(),
            rep.dim()
        )));
    }
    let ops: Vec<CMat> = (0..n).map(|m| rep.annihilation(m)).collect();
    let d_tilde = CVec::from_iterator(n, ops.iter().map(|a| (rho * a).trace()));
    let mut x = CMat::zeros(n, n);
    let mut y = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sym_x = (rho * (&ops[i] * ops[j].adjoint() + ops[j].adjoint() * &ops[i])).trace();
            x[(i, j)] = sym_x - cr(2.0) * d_tilde[i] * d_tilde[j].conj();
            let sym_y = (rho * (&ops[i] * &ops[j] + &ops[j] * &ops[i])).trace();
            y[(i, j)] = sym_y - cr(2.0) * d_tilde[i] * d_tilde[j];
        }
    }
    Ok((d_tilde, x, y))
}

/// Moments assembled into a validated Gaussian state. Truncation makes the
/// inferred state only approximately physical, so the physicality check is
/// run with the given tolerances (relax `phys` for coarse cutoffs).
pub fn gaussian_moments(rep: &FockRep, rho: &CMat, tol: &Tolerances) -> Result<GaussianState> {
    let (d_tilde, x, y) = moments(rep, rho)?;
    GaussianState::from_blocks(d_tilde.as_slice(), &x, &y, tol)
}

/// Mean photon number per mode.
pub fn mean_photons(rep: &FockRep, rho: &CMat) -> Result<Vec<f64>> {
    let n = rep.modes;
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let a = rep.annihilation(m);
        let val = (rho * a.adjoint() * a).trace();
        out.push(val.re);
    }
    Ok(out)
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2 on the
/// truncated basis.
pub fn uhlmann_fidelity(rho1: &CMat, rho2: &CMat) -> Result<f64> {
    let s1 = sqrtm_psd(rho1, PSD_CLAMP)?;
    let m = &s1 * rho2 * &s1;
    let (vals, _) = eigh(&m)?;
    let mut root_sum = 0.0;
    for v in vals {
        if v < -PSD_CLAMP {
            return Err(Error::Numerical(format!(
                "fidelity kernel has a negative eigenvalue: {v:.3e}"
            )));
        }
        root_sum += v.max(0.0).sqrt();
    }
    Ok((root_sum * root_sum).min(1.0))
}

/// Fisher information from the Bures metric on truncated density matrices:
/// the average of 8 (1 - sqrt(F(rho(eps), rho(eps +/- h)))) / h^2.
pub fn qfi_fidelity_fd(
    rho_at: &dyn Fn(f64) -> Result<CMat>,
    eps: f64,
    h: f64,
) -> Result<f64> {
    let center = rho_at(eps)?;
    let f_plus = uhlmann_fidelity(&center, &rho_at(eps + h)?)?;
    let f_minus = uhlmann_fidelity(&center, &rho_at(eps - h)?)?;
    Ok(0.5 * (8.0 * (1.0 - f_plus.sqrt()) + 8.0 * (1.0 - f_minus.sqrt())) / (h * h))
}

/// Double the per-mode cutoff until the evaluated quantity moves less than
/// `cfg.tol` between doublings and its trace deficit is below `cfg.tol`.
/// Returns the converged value and the cutoff that produced it.
pub fn auto_grow<T>(
    cfg: &CutoffConfig,
    mut eval: impl FnMut(usize) -> Result<(T, f64)>,
    mut drift: impl FnMut(&T, &T) -> f64,
) -> Result<(T, usize)> {
    let mut cutoff = cfg.initial;
    let (mut prev, _) = eval(cutoff)?;
    loop {
        let next = cutoff * 2;
        if next > cfg.max {
            return Err(Error::Cutoff(format!(
                "no convergence to {:.1e} within per-mode cutoff {} (last drift at cutoff {})",
                cfg.tol, cfg.max, cutoff
            )));
        }
        let (cur, deficit) = eval(next)?;
        if drift(&prev, &cur) <= cfg.tol && deficit.abs() <= cfg.tol {
            return Ok((cur, next));
        }
        prev = cur;
        cutoff = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squeeze_x() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(-1.0), cr(0.0)])
    }

    fn rotation_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0, -1.0), cr(0.0), cr(0.0), c(0.0, 1.0)])
    }

    fn vacuum(rep: &FockRep) -> CMat {
        let mut rho = CMat::zeros(rep.dim(), rep.dim());
        rho[(0, 0)] = cr(1.0);
        rho
    }

    #[test]
    fn vacuum_moments_are_vacuum() {
        let rep = FockRep::new(1, 12);
        let (d, x, y) = moments(&rep, &vacuum(&rep)).unwrap();
        assert!(d[0].norm() < 1e-14);
        assert!((x[(0, 0)] - cr(1.0)).norm() < 1e-14);
        assert!(y[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn thermal_moments_and_deficit() {
        let rep = FockRep::new(1, 64);
        let (rho, deficit) = thermal_density(&rep, &[0.5]).unwrap();
        // Geometric tail: q^cutoff with q = 1/3.
        let q: f64 = 0.5 / 1.5;
        assert!((deficit - q.powi(64)).abs() < 1e-15);
        let (_, x, _) = moments(&rep, &rho).unwrap();
        assert!((x[(0, 0)] - cr(2.0)).norm() < 1e-12, "X = {}", x[(0, 0)]);
        let n = mean_photons(&rep, &rho).unwrap();
        assert!((n[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_moments_match_phase_space() {
        let r = 0.5;
        let rep = FockRep::new(1, 48);
        let gen = GeneratorEigen::new(&quadratic_generator(&rep, &squeeze_x()).unwrap()).unwrap();
        let u = gen.unitary(r);
        let rho = &u * vacuum(&rep) * u.adjoint();
        let (d, x, y) = moments(&rep, &rho).unwrap();
        assert!(d[0].norm() < 1e-10);
        assert!(
            (x[(0, 0)] - cr((2.0 * r).cosh())).norm() < 1e-9,
            "X = {} vs {}",
            x[(0, 0)],
            (2.0 * r).cosh()
        );
        assert!(
            (y[(0, 0)] - cr(-(2.0 * r).sinh())).norm() < 1e-9,
            "Y = {} vs {}",
            y[(0, 0)],
            -(2.0 * r).sinh()
        );
    }

    #[test]
    fn built_probe_matrices_reproduce_their_specs() {
        use crate::probes::ProbeMode;
        // All-zero spec: exact vacuum projector.
        let rep = FockRep::new(1, 16);
        let (rho, deficit) = fock_build(&rep, &ProbeSpec::single(ProbeMode::vacuum())).unwrap();
        assert_eq!(deficit, 0.0);
        assert!((rho - vacuum(&rep)).norm() < 1e-14);

        // Bare thermal: sigma = (1 + 2 n_th) I.
        let rep = FockRep::new(1, 64);
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.5,
            ..ProbeMode::vacuum()
        });
        let (rho, _) = fock_build(&rep, &spec).unwrap();
        let (_, x, y) = moments(&rep, &rho).unwrap();
        assert!((x[(0, 0)] - cr(2.0)).norm() < 1e-10);
        assert!(y[(0, 0)].norm() < 1e-10);

        // Squeezed vacuum r = 0.5 at cutoff >= 40.
        let rep = FockRep::new(1, 40);
        let spec = ProbeSpec::single(ProbeMode {
            r: 0.5,
            ..ProbeMode::vacuum()
        });
        let (rho, _) = fock_build(&rep, &spec).unwrap();
        let (d, x, y) = moments(&rep, &rho).unwrap();
        assert!(d[0].norm() < 1e-6);
        assert!((x[(0, 0)] - cr(1f64.cosh())).norm() < 1e-6);
        assert!((y[(0, 0)] - cr(-1f64.sinh())).norm() < 1e-6);

        // Full spec: moments match the phase-space construction.
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.3,
            r: 0.6,
            theta: 0.9,
            displacement: c(0.5, -0.3),
        });
        let rep = FockRep::new(1, 64);
        let (rho, _) = fock_build(&rep, &spec).unwrap();
        let state = gaussian_moments(&rep, &rho, &Tolerances::default()).unwrap();
        let direct = crate::probes::build_probe(&spec).unwrap();
        assert!(
            (state.covariance() - direct.covariance()).norm() < 1e-6,
            "covariance drift {}",
            (state.covariance() - direct.covariance()).norm()
        );
        assert!((state.displacement() - direct.displacement()).norm() < 1e-6);
    }

    #[test]
    fn displaced_rotated_moments() {
        let alpha = c(0.4, -0.1);
        let theta = 0.6;
        let rep = FockRep::new(1, 32);
        let disp = GeneratorEigen::new(&displacement_generator(&rep, &[alpha]).unwrap()).unwrap();
        let rot = GeneratorEigen::new(&quadratic_generator(&rep, &rotation_x()).unwrap()).unwrap();
        let u = rot.unitary(theta) * disp.unitary(1.0);
        let rho = &u * vacuum(&rep) * u.adjoint();
        let (d, x, y) = moments(&rep, &rho).unwrap();
        let expect = alpha * C64::from_polar(1.0, -theta);
        assert!((d[0] - expect).norm() < 1e-9, "d = {} vs {expect}", d[0]);
        assert!((x[(0, 0)] - cr(1.0)).norm() < 1e-9);
        assert!(y[(0, 0)].norm() < 1e-9);
    }

    #[test]
    fn two_mode_squeezing_moments() {
        let xi = 0.3;
        let rep = FockRep::new(2, 12);
        let mut x_gen = CMat::zeros(4, 4);
        x_gen[(0, 3)] = cr(1.0);
        x_gen[(1, 2)] = cr(1.0);
        x_gen[(2, 1)] = cr(1.0);
        x_gen[(3, 0)] = cr(1.0);
        let gen = GeneratorEigen::new(&quadratic_generator(&rep, &x_gen).unwrap()).unwrap();
        let u = gen.unitary(xi);
        let rho = &u * vacuum(&rep) * u.adjoint();
        let (_, x, y) = moments(&rep, &rho).unwrap();
        for i in 0..2 {
            assert!(
                (x[(i, i)] - cr((2.0 * xi).cosh())).norm() < 1e-7,
                "X[{i}{i}] = {}",
                x[(i, i)]
            );
        }
        assert!(
            (y[(0, 1)] - cr((2.0 * xi).sinh())).norm() < 1e-7,
            "Y[01] = {}",
            y[(0, 1)]
        );
        assert!(x[(0, 1)].norm() < 1e-9);
        assert!(y[(0, 0)].norm() < 1e-9);
    }

    #[test]
    fn fidelity_against_closed_overlaps() {
        let rep = FockRep::new(1, 48);
        let vac = vacuum(&rep);
        // Squeezed vacuum: F = 1 / cosh r.
        let r = 0.6;
        let gen = GeneratorEigen::new(&quadratic_generator(&rep, &squeeze_x()).unwrap()).unwrap();
        let u = gen.unitary(r);
        let f = uhlmann_fidelity(&vac, &(&u * &vac * u.adjoint())).unwrap();
        assert!((f - 1.0 / r.cosh()).abs() < 1e-8, "F = {f}");
        // Coherent state: F = exp(-|alpha|^2).
        let alpha = c(0.5, 0.3);
        let disp = GeneratorEigen::new(&displacement_generator(&rep, &[alpha]).unwrap()).unwrap();
        let ud = disp.unitary(1.0);
        let f = uhlmann_fidelity(&vac, &(&ud * &vac * ud.adjoint())).unwrap();
        assert!((f - (-alpha.norm_sqr()).exp()).abs() < 1e-10, "F = {f}");
    }

    #[test]
    fn squeezing_qfi_on_vacuum_is_two() {
        let rep = FockRep::new(1, 48);
        let gen = GeneratorEigen::new(&quadratic_generator(&rep, &squeeze_x()).unwrap()).unwrap();
        let vac = vacuum(&rep);
        let rho_at = move |eps: f64| -> Result<CMat> {
            let u = gen.unitary(eps);
            Ok(&u * &vac * u.adjoint())
        };
        let h = qfi_fidelity_fd(&rho_at, 0.0, 1e-3).unwrap();
        assert!((h - 2.0).abs() < 5e-3, "H = {h}");
    }

    #[test]
    fn auto_grow_converges_and_caps() {
        let cfg = CutoffConfig {
            initial: 4,
            max: 64,
            tol: 1e-8,
        };
        let eval = |cutoff: usize| -> Result<(f64, f64)> {
            let rep = FockRep::new(1, cutoff);
            let (rho, deficit) = thermal_density(&rep, &[0.4]).unwrap();
            Ok((mean_photons(&rep, &rho).unwrap()[0], deficit))
        };
        let (n, cutoff) = auto_grow(&cfg, eval, |a, b| (a - b).abs()).unwrap();
        assert!((n - 0.4).abs() < 1e-8);
        assert!(cutoff <= 64);
        // An impossible tolerance within the cap must error.
        let strict = CutoffConfig {
            initial: 2,
            max: 4,
            tol: 1e-14,
        };
        let err = auto_grow(&strict, eval, |a, b| (a - b).abs()).unwrap_err();
        assert!(matches!(err, Error::Cutoff(_)), "{err}");
    }
}
