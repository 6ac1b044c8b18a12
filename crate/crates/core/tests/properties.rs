// Copyright 2026 The vanhove Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use vanhove::bounds::{
    measure_bound, operator_norm, random_operator, random_sector_spec, seeded_rng, EnvelopeSpec,
    GaussianKernel, Interval, SectorSpec, SupMode, VanHoveKernel, BOUND_SLACK,
};
use vanhove::cli::Scenario;
use vanhove::decoherence::{chi, curve, psi, psi_lower_bound, ReferenceState};
use vanhove::envmodels::{chi_fourier, FourierEnvironment};
use vanhove::oracle::{check_cook_identity, EvaluatedModel, FockSpace, OracleMode, TruncatedModel};
use vanhove::spectral::{classify_ir, IrClass, SpectralMeasure};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn modes_strategy(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05f64..5.0, 0.001f64..0.05), 1..=max)
}

fn power_law_strategy() -> impl Strategy<Value = SpectralMeasure> {
    (0.01f64..0.2, 0.0f64..2.0, 0.5f64..5.0)
        .prop_map(|(c, p, cutoff)| SpectralMeasure::power_law(c, p, cutoff).unwrap())
}

fn tabulated_strategy() -> impl Strategy<Value = SpectralMeasure> {
    prop::collection::vec((0.01f64..6.0, 0.0f64..0.1), 2..10).prop_map(|pts| {
        let mut pts = pts;
        pts.push((0.0, 0.0));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-6);
        let (grid, density) = pts.into_iter().unzip();
        SpectralMeasure::tabulated(grid, density).unwrap()
    })
}

fn measure_strategy() -> impl Strategy<Value = SpectralMeasure> {
    prop_oneof![
        modes_strategy(6).prop_map(|m| SpectralMeasure::from_modes(&m).unwrap()),
        power_law_strategy(),
        tabulated_strategy(),
    ]
}

fn finite(m: &SpectralMeasure, s: u8) -> f64 {
    m.moment(s).finite().unwrap()
}

fn zeta_strategy() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn moments_are_ordered_by_support(modes in modes_strategy(8)) {
        let m = SpectralMeasure::from_modes(&modes).unwrap();
        let top = m.support_max();
        let (m0, m1, m2) = (finite(&m, 0), finite(&m, 1), finite(&m, 2));
        prop_assert!(m2 * (1.0 + 1e-12) >= m1 / top);
        prop_assert!(m1 * (1.0 + 1e-12) >= m0 / top);
    }

    #[test]
    fn scaling_scales_moments_and_keeps_class(m in measure_strategy(), kappa in 0.01f64..10.0) {
        let scaled = m.scaled(kappa).unwrap();
        for s in 0..=2u8 {
            match (m.moment(s).finite(), scaled.moment(s).finite()) {
                (Some(a), Some(b)) => prop_assert!((b - kappa * a).abs() <= 1e-9 * (kappa * a).abs().max(1e-300)),
                (None, None) => {}
                other => prop_assert!(false, "finiteness changed: {other:?}"),
            }
        }
        prop_assert_eq!(classify_ir(&m).ok(), classify_ir(&scaled).ok());
    }

    #[test]
    fn discrete_gapped_measures_are_regular(
        freqs in prop::collection::vec(0.1f64..3.0, 1..12),
        weights in prop::collection::vec(0.1f64..1.0, 12),
        scale in 1e-4f64..1e-2,
    ) {
        let modes: Vec<(f64, f64)> = freqs.iter().zip(&weights).map(|(f, w)| (*f, w * scale)).collect();
        let m = SpectralMeasure::from_modes(&modes).unwrap();
        prop_assert_eq!(classify_ir(&m).unwrap(), IrClass::Regular);
    }

    #[test]
    fn modulus_law(m in measure_strategy(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0,
                   zeta in zeta_strategy(), t in 0.01f64..50.0) {
        prop_assume!(m.moment(1).is_finite() && vanhove::spectral::validate_coupling(&m));
        let reference = ReferenceState::coherent(zeta).unwrap();
        let c = chi(&m, alpha, beta, &reference, t).unwrap();
        let expected = (-(alpha - beta).powi(2) * psi(&m, t).unwrap() / 2.0).exp();
        prop_assert!((c.norm() - expected).abs() <= 1e-12);
        prop_assert!(c.norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn vacuum_chi_is_conjugate_symmetric(m in measure_strategy(), alpha in -2.0f64..2.0,
                                         beta in -2.0f64..2.0, t in 0.01f64..50.0) {
        prop_assume!(m.moment(1).is_finite() && vanhove::spectral::validate_coupling(&m));
        let v = ReferenceState::vacuum();
        let ab = chi(&m, alpha, beta, &v, t).unwrap();
        let ba = chi(&m, beta, alpha, &v, t).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-12);
        prop_assert_eq!(chi(&m, alpha, alpha, &v, t).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn regular_psi_is_bounded_by_second_moment(m in measure_strategy(), t in 0.0f64..200.0) {
        if let Some(m2) = m.moment(2).finite() {
            prop_assert!(psi(&m, t).unwrap() <= 4.0 * m2 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn psi_dominates_its_lower_bound(m in measure_strategy(), log_t in -2.0f64..2.5) {
        let t = 10f64.powf(log_t);
        let lb = psi_lower_bound(&m, t);
        prop_assert!(psi(&m, t).unwrap() >= lb * (1.0 - 1e-9));
    }

    #[test]
    fn curve_invariants(m in measure_strategy(), alpha in -1.0f64..1.0, beta in -1.0f64..1.0) {
        prop_assume!(m.moment(1).is_finite() && vanhove::spectral::validate_coupling(&m));
        let times: Vec<f64> = (0..16).map(|k| k as f64 * 1.5).collect();
        let c = curve(&m, alpha, beta, &ReferenceState::vacuum(), &times).unwrap();
        prop_assert_eq!(c.psi[0], 0.0);
        for (p, x) in c.psi.iter().zip(&c.chi) {
            prop_assert!((x.norm() - (-(alpha - beta).powi(2) * p / 2.0).exp()).abs() <= 1e-10);
            prop_assert!(x.norm() <= 1.0 + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn ir_dominant_psi_keeps_growing(c in 0.01f64..1.0, p in 0.0f64..0.9, cutoff in 0.5f64..3.0,
                                     t_lo in 100.0f64..1000.0, ratio in 10.0f64..30.0) {
        let m = SpectralMeasure::power_law(c, p, cutoff).unwrap();
        prop_assert_eq!(classify_ir(&m).unwrap(), IrClass::IrDominant);
        prop_assert!(psi(&m, ratio * t_lo).unwrap() > psi(&m, t_lo).unwrap());
    }

    #[test]
    fn fourier_modulus_is_at_most_one(center in -2.0f64..2.0, width in 0.2f64..3.0, s in 0.0f64..40.0) {
        let env = FourierEnvironment::smooth_bump(center, width).unwrap();
        prop_assert!((chi_fourier(&env, 0.0, 0).unwrap() - Complex64::new(1.0, 0.0)).norm() <= 1e-10);
        prop_assert!(chi_fourier(&env, s, 0).unwrap().norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn oracle_propagator_is_unitary_and_preserves_populations(
        lambdas in prop::collection::vec(-1.0f64..1.0, 1..4),
        freq in 0.5f64..2.0, g in 0.0f64..0.2, t in 0.0f64..20.0,
    ) {
        let d = lambdas.len();
        let model = TruncatedModel::velocity(lambdas, vec![OracleMode::new(freq, g)], 16).unwrap();
        let evaluated = EvaluatedModel::new(model).unwrap();
        let u = evaluated.propagator(t).unwrap();
        let defect = (u.adjoint() * &u - DMatrix::<Complex64>::identity(u.nrows(), u.ncols())).norm();
        prop_assert!(defect <= 1e-10);

        let mut rho0 = DMatrix::<Complex64>::zeros(d, d);
        let weights: Vec<f64> = (0..d).map(|k| 1.0 + k as f64).collect();
        let total: f64 = weights.iter().sum();
        for i in 0..d {
            for j in 0..d {
                rho0[(i, j)] = Complex64::new((weights[i] * weights[j]).sqrt() / total, 0.0);
            }
        }
        let evo = evaluated.evolve_reduced(&rho0, &ReferenceState::vacuum(), &[0.0, t]).unwrap();
        for i in 0..d {
            prop_assert!((evo.states[1][(i, i)] - rho0[(i, i)]).norm() <= 1e-10);
        }
    }

    #[test]
    fn bound_holds_on_random_configurations(seed in any::<u64>(), d in 2usize..12, kernel_pick in 0usize..2) {
        let mut rng = seeded_rng(seed);
        let spec = random_sector_spec(d, &mut rng).unwrap();
        let a = random_operator(d, &mut rng);
        let times: Vec<f64> = (0..12).map(|k| k as f64 * 2.5).collect();
        let vh = VanHoveKernel::new(SpectralMeasure::from_modes(&[(0.7, 0.03), (1.9, 0.04)]).unwrap(),
                                    ReferenceState::coherent(Complex64::new(0.3, -0.2)).unwrap()).unwrap();
        let gauss = GaussianKernel { mean: 0.4, sigma: 0.8 };
        let report = if kernel_pick == 0 {
            measure_bound(&a, &spec, &vh, &times, SupMode::Analytic, EnvelopeSpec::Fit)
        } else {
            measure_bound(&a, &spec, &gauss, &times, SupMode::Analytic, EnvelopeSpec::Fit)
        }.unwrap();
        prop_assert!(report.first_violation().is_none());
        prop_assert!(report.measured_norm.iter().all(|m| *m >= 0.0));
    }

    #[test]
    fn gaussian_envelope_dominates_pure_dephasing(seed in any::<u64>(), d in 2usize..12) {
        let mut rng = seeded_rng(seed);
        let spec = random_sector_spec(d, &mut rng).unwrap();
        let a = random_operator(d, &mut rng);
        let measure = SpectralMeasure::power_law(0.05, 0.5, 2.0).unwrap();
        let kernel = VanHoveKernel::new(measure.clone(), ReferenceState::vacuum()).unwrap();
        let times: Vec<f64> = (0..12).map(|k| k as f64 * 4.0).collect();
        let report = measure_bound(&a, &spec, &kernel, &times, SupMode::Analytic, EnvelopeSpec::Fit).unwrap();
        let delta = spec.gap();
        for (t, measured) in times.iter().zip(&report.measured_norm) {
            let envelope = (-delta * delta * psi(&measure, *t).unwrap() / 2.0).exp() * operator_norm(&a);
            prop_assert!(*measured <= envelope + BOUND_SLACK, "t={t}: {measured} > {envelope}");
        }
    }

    #[test]
    fn scenario_json_round_trip(seed in any::<u64>(), t_stop in 1.0f64..100.0, count in 2usize..50,
                                amplitude in 0.001f64..0.1, exponent in 0.0f64..2.0) {
        let text = format!(
            r#"{{"command":"curve","seed":{seed},"measure":{{"kind":"powerlaw","amplitude":{amplitude},"exponent":{exponent},"cutoff":1.0}},
               "curve":{{"alpha":0.0,"beta":1.0}},"grid":{{"start":0.0,"stop":{t_stop},"count":{count}}}}}"#
        );
        let scenario = Scenario::from_json(&text).unwrap();
        let again = Scenario::from_json(&scenario.to_json()).unwrap();
        prop_assert_eq!(scenario, again);
    }
}

#[test]
fn power_law_truth_table_on_grid() {
    let mut grid: Vec<f64> = (0..20).map(|k| 2.0 * k as f64 / 19.0).collect();
    grid.push(1.0);
    for p in grid {
        let m = SpectralMeasure::power_law(1.0, p, 1.0).unwrap();
        let expected = if p < 1.0 {
            IrClass::IrDominant
        } else if p == 1.0 {
            IrClass::IrDivergent
        } else {
            IrClass::Regular
        };
        assert_eq!(classify_ir(&m).unwrap(), expected, "p = {p}");
    }
}

#[test]
fn riemann_lebesgue_for_smooth_presets() {
    let presets = [
        FourierEnvironment::smooth_bump(0.3, 1.5).unwrap(),
        FourierEnvironment::gaussian(0.2, 0.3).unwrap(),
    ];
    for env in presets {
        let window_max = |s0: f64| {
            (0..=64)
                .map(|k| {
                    chi_fourier(&env, s0 * (1.0 + k as f64 / 64.0), 0)
                        .unwrap()
                        .norm()
                })
                .fold(0.0, f64::max)
        };
        let maxima: Vec<f64> = (0..5).map(|k| window_max(2.0 * 2f64.powi(k))).collect();
        for w in maxima.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-12, "{env:?}: {maxima:?}");
        }
    }
}

#[test]
fn truncation_residual_improves_under_doubling() {
    let modes = [OracleMode::new(0.16, 0.2)];
    let residuals: Vec<f64> = [10, 20, 40, 80]
        .iter()
        .map(|&n| check_cook_identity(&modes, &FockSpace::new(n, 1).unwrap()).unwrap())
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] < w[0]), "{residuals:?}");
}

/// Midpoint discretization of a continuous `F` on `[0, 1]` with a fixed
/// smooth integral kernel for `A`.
fn refined_norm(d: usize, t: f64) -> f64 {
    let lambdas: Vec<f64> = (0..d).map(|k| (k as f64 + 0.5) / d as f64).collect();
    let a = DMatrix::from_fn(d, d, |i, j| {
        let (x, y) = (lambdas[i], lambdas[j]);
        Complex64::new((-(x - y).powi(2)).exp(), x * y) / d as f64
    });
    let spec = SectorSpec::new(
        lambdas,
        vec![0.0; d],
        Interval::new(0.0, 0.4).unwrap(),
        Interval::new(0.6, 1.0).unwrap(),
    )
    .unwrap();
    let kernel = GaussianKernel {
        mean: 0.0,
        sigma: 1.0,
    };
    measure_bound(
        &a,
        &spec,
        &kernel,
        &[t],
        SupMode::Analytic,
        EnvelopeSpec::Fit,
    )
    .unwrap()
    .measured_norm[0]
}

#[test]
fn spectral_refinement_is_cauchy() {
    for t in [0.5, 2.0, 5.0] {
        let norms: Vec<f64> = [10, 20, 40, 80]
            .iter()
            .map(|&d| refined_norm(d, t))
            .collect();
        let steps: Vec<f64> = norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(steps.windows(2).all(|s| s[1] < s[0]), "t={t}: {norms:?}");
    }
}
