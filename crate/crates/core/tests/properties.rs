//! Randomized property suites: structural invariants of states and
//! factorizations, and invariances the information itself must satisfy.

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use gqfi::linalg::{frob, k_matrix};
use gqfi::sampling::{
    random_algebra_element, random_analytic_family, random_displacement, random_state,
    random_symplectic, rng,
};
use gqfi::{
    build_probe, probe_family, qfi_auto, qfi_pure_point, qfi_series, qfi_two_mode,
    qfi_two_mode_williamson, symplectic_eigenvalues, two_mode_fidelity, williamson_decompose,
    ChannelSpec, GaussianState, ProbeMode, ProbeSpec, PureConvention, QfiConfig, StateFamily,
    Tolerances,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn mode_strategy() -> impl Strategy<Value = ProbeMode> {
    (0.0..1.5f64, -1.2..1.2f64, 0.0..3.2f64, -1.5..1.5f64, -1.5..1.5f64).prop_map(
        |(n_th, r, theta, dre, dim)| ProbeMode {
            n_th,
            r,
            theta,
            displacement: C64::new(dre, dim),
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Every probe the builder accepts is physical: symplectic spectrum
    /// >= 1, sorted descending, and (without the optional two-mode squeeze)
    /// exactly the thermal eigenvalues 1 + 2 n_th.
    #[test]
    fn built_probes_are_physical(m0 in mode_strategy(), m1 in mode_strategy(), tms in proptest::option::of(0.0..0.6f64)) {
        let spec = ProbeSpec { modes: vec![m0, m1], tms };
        let state = build_probe(&spec).unwrap();
        let lambdas = symplectic_eigenvalues(state.covariance(), &Tolerances::default()).unwrap();
        for w in lambdas.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-12);
        }
        for &l in &lambdas {
            prop_assert!(l >= 1.0 - 1e-9, "unphysical eigenvalue {l}");
        }
        if tms.is_none() {
            let mut expected = vec![1.0 + 2.0 * m0.n_th, 1.0 + 2.0 * m1.n_th];
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (l, e) in lambdas.iter().zip(&expected) {
                prop_assert!((l - e).abs() < 1e-9 * e, "{l} vs thermal {e}");
            }
        }
    }

    /// The quadrature representation is a lossless re-encoding.
    #[test]
    fn real_round_trip_is_lossless(m in mode_strategy(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let s = random_symplectic(&mut rng, 1, 0.3);
        let state = build_probe(&ProbeSpec::single(m))
            .unwrap()
            .transformed(&s)
            .unwrap();
        let back = GaussianState::from_real(&state.to_real()).unwrap();
        let dc = (state.covariance() - back.covariance()).norm();
        let dd = (state.displacement() - back.displacement()).norm();
        let scale = state.covariance().norm();
        prop_assert!(dc <= 1e-12 * scale, "covariance drift {dc}");
        prop_assert!(dd <= 1e-12 * scale.max(1.0), "displacement drift {dd}");
    }

    /// Williamson factors reconstruct the covariance and are symplectic.
    #[test]
    fn williamson_reconstructs(seed in any::<u64>(), modes in 1usize..=3) {
        let mut rng = rng(seed);
        let state = random_state(&mut rng, modes, (1.05, 3.0), 1.0).unwrap();
        let f = williamson_decompose(state.covariance(), &Tolerances::default()).unwrap();
        let recon = f.reconstruct();
        let err = (&recon - state.covariance()).norm() / state.covariance().norm();
        prop_assert!(err <= 1e-9, "reconstruction error {err}");
        let s = f.s.matrix();
        let k = k_matrix(modes);
        let symp = frob(&(s * &k * s.adjoint() - &k)) / frob(s).powi(2).max(1.0);
        prop_assert!(symp <= 1e-9, "symplectic residual {symp}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The information carried by a one-generator channel does not depend on
    /// where along the orbit it is evaluated, and it is never negative.
    #[test]
    fn information_is_constant_along_the_orbit(
        m in mode_strategy(),
        which in 0usize..3,
        eps in 0.05..0.35f64,
    ) {
        let spec = ProbeSpec::single(m);
        let channel = match which {
            0 => ChannelSpec::Squeeze { mode: 0 },
            1 => ChannelSpec::Rotate { mode: 0 },
            _ => ChannelSpec::Displace { mode: 0, rate: C64::new(0.7, -0.4) },
        };
        let family = probe_family(&spec, &channel).unwrap();
        let cfg = QfiConfig::default();
        let h0 = qfi_auto(&family, 0.0, &cfg).unwrap().value;
        let h1 = qfi_auto(&family, eps, &cfg).unwrap().value;
        prop_assert!(h0 >= -1e-9, "negative information {h0}");
        prop_assert!(rel(h0, h1) <= 1e-7, "H(0) = {h0} vs H({eps}) = {h1}");
    }

    /// Conjugating the whole family by a fixed Gaussian unitary leaves the
    /// information unchanged.
    #[test]
    fn information_is_invariant_under_fixed_unitaries(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let base = random_state(&mut rng, 2, (1.1, 2.5), 0.8).unwrap();
        let x = random_algebra_element(&mut rng, 2, 0.5);
        let rate = random_displacement(&mut rng, 2, 0.5);
        let v = random_symplectic(&mut rng, 2, 0.4);

        let family =
            StateFamily::generator_with_rate(base.clone(), x.clone(), Some(&rate)).unwrap();

        // V^{-1} = K V† K for symplectic V.
        let k = k_matrix(2);
        let v_inv = &k * v.adjoint() * &k;
        let x_conj = &v * &x * &v_inv;
        let mut rate_full = gqfi::CVec::zeros(4);
        for i in 0..2 {
            rate_full[i] = rate[i];
            rate_full[2 + i] = rate[i].conj();
        }
        let rate_conj_full = &v * rate_full;
        let rate_conj: Vec<C64> = (0..2).map(|i| rate_conj_full[i]).collect();
        let conjugated = StateFamily::generator_with_rate(
            base.transformed(&v).unwrap(),
            x_conj,
            Some(&rate_conj),
        )
        .unwrap();

        let cfg = QfiConfig::default();
        let h = qfi_auto(&family, 0.0, &cfg).unwrap().value;
        let h_conj = qfi_auto(&conjugated, 0.0, &cfg).unwrap().value;
        prop_assert!(rel(h, h_conj) <= 1e-8, "{h} vs conjugated {h_conj}");
    }

    /// All closed-form routes agree on random mixed two-mode families, and
    /// the series route lands within its own reported remainder bound.
    #[test]
    fn routes_agree_on_mixed_two_mode_families(seed in any::<u64>(), eps in -0.1..0.1f64) {
        let mut rng = rng(seed);
        let family = random_analytic_family(&mut rng, 2, (1.3, 3.0), 1.0).unwrap();
        let cfg = QfiConfig::default();
        let a = qfi_two_mode(&family, eps, &cfg).unwrap().value;
        let b = qfi_two_mode_williamson(&family, eps, &cfg).unwrap().value;
        prop_assert!(rel(a, b) <= 1e-8, "covariance {a} vs Williamson {b}");

        let s = qfi_series(&family, eps, &cfg).unwrap();
        let slack = s.error_bound.unwrap() + 1e-9 * a.abs().max(1.0);
        prop_assert!(
            (s.value - a).abs() <= slack,
            "series {} vs exact {a}, bound {:?}",
            s.value,
            s.error_bound
        );
    }

    /// A thermal state is rotation invariant, so the rotation channel
    /// carries no information about its parameter; the series route sees a
    /// zero derivative and stops at the first order.
    #[test]
    fn rotating_a_thermal_state_carries_nothing(n_th in 0.05..1.5f64) {
        let spec = ProbeSpec::single(ProbeMode {
            n_th,
            r: 0.0,
            theta: 0.0,
            displacement: C64::ZERO,
        });
        let family = probe_family(&spec, &ChannelSpec::Rotate { mode: 0 }).unwrap();
        let cfg = QfiConfig::default();
        let auto = qfi_auto(&family, 0.0, &cfg).unwrap();
        prop_assert!(auto.value.abs() <= 1e-9, "H = {}", auto.value);
        let series = qfi_series(&family, 0.0, &cfg).unwrap();
        prop_assert!(series.value.abs() <= 1e-12);
        prop_assert_eq!(series.diagnostics.series_order, Some(1));
    }

    /// At a pure point with the drop-the-classical-term convention the
    /// information reduces to 1/4 tr[(sigma^{-1} sigma')^2] plus the
    /// displacement term, both computable directly from the generator.
    #[test]
    fn pure_point_matches_direct_traces(
        r in -1.0..1.0f64,
        theta in 0.0..3.2f64,
        dre in -1.0..1.0f64,
        dim in -1.0..1.0f64,
    ) {
        let spec = ProbeSpec::single(ProbeMode {
            n_th: 0.0,
            r,
            theta,
            displacement: C64::new(dre, dim),
        });
        let channel = ChannelSpec::Squeeze { mode: 0 };
        let state = build_probe(&spec).unwrap();
        let family = probe_family(&spec, &channel).unwrap();
        let cfg = QfiConfig {
            pure_convention: PureConvention::Zero,
            ..QfiConfig::default()
        };
        let h = qfi_pure_point(&family, 0.0, &cfg).unwrap().value;

        let x = channel.generator(1).unwrap();
        let sigma = state.covariance();
        let sigma_dot = &x * sigma + sigma * x.adjoint();
        let m = sigma.clone().lu().solve(&sigma_dot).unwrap();
        let quarter_trace = 0.25 * (&m * &m).trace().re;
        let d_dot = &x * state.displacement();
        let sinv_ddot = sigma.clone().lu().solve(&d_dot).unwrap();
        let disp = 2.0 * d_dot.dotc(&sinv_ddot).re;
        prop_assert!((h - (quarter_trace + disp)).abs() <= 1e-9 * h.abs().max(1.0),
            "route {h} vs direct {}", quarter_trace + disp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Fidelity is reflexive, symmetric, bounded, and unitarily invariant.
    #[test]
    fn fidelity_behaves_like_an_overlap(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = random_state(&mut rng, 2, (1.0, 2.5), 0.7).unwrap();
        let b = random_state(&mut rng, 2, (1.0, 2.5), 0.7).unwrap();

        let faa = two_mode_fidelity(&a, &a).unwrap().value;
        prop_assert!((faa - 1.0).abs() <= 1e-9, "F(a, a) = {faa}");

        let fab = two_mode_fidelity(&a, &b).unwrap().value;
        let fba = two_mode_fidelity(&b, &a).unwrap().value;
        prop_assert!(fab >= -1e-12 && fab <= 1.0 + 1e-9, "F out of range: {fab}");
        prop_assert!((fab - fba).abs() <= 1e-9 * fab.max(1e-6), "{fab} vs {fba}");

        let v = random_symplectic(&mut rng, 2, 0.3);
        let fv = two_mode_fidelity(
            &a.transformed(&v).unwrap(),
            &b.transformed(&v).unwrap(),
        )
        .unwrap()
        .value;
        prop_assert!((fab - fv).abs() <= 1e-8 * fab.max(1e-6), "{fab} vs conjugated {fv}");
    }
}
