use proptest::prelude::*;

use qisolab_core::eigensolve::{discretize, ground_state_excess, spectrum, SolverConfig};
use qisolab_core::hadamard;
use qisolab_core::potential::{Perturbation, PotentialSpec};
use qisolab_core::pruefer::{compare_angles, CoefficientQ};
use qisolab_core::traces::{self, fit_gap_decay, TestFunction};
use qisolab_core::weber;

fn small() -> SolverConfig {
    SolverConfig::default().with_n(3_999)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mirror_pair_is_isospectral(eps in 0.0f64..0.5, h in 0.3f64..1.0) {
        let p = PotentialSpec::plus(0.0, eps);
        let (a, b) = (spectrum(&p, h, 8.0, &small()).unwrap(), spectrum(&p.partner(), h, 8.0, &small()).unwrap());
        let d = traces::isospectral_distance(&a, &b, 8.0).unwrap();
        prop_assert!(d.value <= 1e-12 + d.error_estimate, "{:?}", d);
    }

    #[test]
    fn distance_is_symmetric(t in 0.0f64..0.3, eps in 0.0f64..0.3, h in 0.4f64..1.0) {
        let p = PotentialSpec::plus(t, eps);
        let (a, b) = (spectrum(&p, h, 6.0, &small()).unwrap(), spectrum(&p.partner(), h, 6.0, &small()).unwrap());
        let ab = traces::isospectral_distance(&a, &b, 6.0).unwrap();
        let ba = traces::isospectral_distance(&b, &a, 6.0).unwrap();
        prop_assert_eq!(ab.value, ba.value);
        prop_assert_eq!(ab.index, ba.index);
    }

    #[test]
    fn ground_state_grows_with_t(t1 in 0.0f64..0.5, dt in 0.0f64..0.5, h in 0.3f64..1.0) {
        let (_, fine) = small().grids().unwrap();
        let ground = |t: f64| discretize(&PotentialSpec::plus(t, 0.05), h, fine).unwrap().lowest(1, 0.0)[0];
        prop_assert!(ground(t1) <= ground(t1 + dt));
    }

    #[test]
    fn ground_state_sits_above_h(t in 0.05f64..0.5, eps in 0.05f64..0.5, h in 0.5f64..1.0) {
        let ex = ground_state_excess(&PotentialSpec::plus(t, eps), h, &small()).unwrap();
        prop_assert!(ex.excess > 10.0 * ex.error_estimate, "{:?}", ex);
    }

    #[test]
    fn phase_space_term_ignores_reflection(t in 0.0f64..0.5, eps in 0.0f64..0.5, scale in 0.5f64..2.0) {
        let p = PotentialSpec::plus(t, eps);
        let f = TestFunction::Exponential { scale };
        let (a, b) = (traces::weyl_term(&p, f).unwrap(), traces::weyl_term(&p.partner(), f).unwrap());
        prop_assert!((a.value - b.value).abs() <= 2e-10);
    }

    #[test]
    fn first_variation_is_a_probability_average(t in 0.0f64..0.3, j in 1usize..4) {
        let p = PotentialSpec::plus(t, 0.0);
        let dir = Perturbation::bump(p.beta, false);
        let v = hadamard::variational_derivative(&p, 1.0, j, dir, &small()).unwrap();
        prop_assert!(v.value >= 0.0 && v.value <= dir.max_value());
        let one = hadamard::variational_derivative(&p, 1.0, j, Perturbation::Constant(1.0), &small()).unwrap();
        prop_assert!((one.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn density_is_positive_and_falls_with_t(t in 0.0f64..0.5, dt in 0.01f64..0.5, h in 0.3f64..1.0) {
        let f = TestFunction::Exponential { scale: 1.0 };
        let nu = |t: f64| traces::spectral_density(&PotentialSpec::plus(t, 0.05), h, f, &small()).unwrap().value;
        let (a, b) = (nu(t), nu(t + dt));
        prop_assert!(a > 0.0 && b <= a, "{} {}", a, b);
    }

    #[test]
    fn larger_coefficient_keeps_angle_ahead(q_small in -2.0f64..2.0, dq in 0.0f64..2.0, theta0 in 0.1f64..1.5) {
        let c = compare_angles(
            CoefficientQ::Constant(q_small + dq),
            CoefficientQ::Constant(q_small),
            0.0,
            theta0,
            2.0,
        )
        .unwrap();
        prop_assert!(c.assertion.passed, "{}", c.assertion.detail);
    }

    #[test]
    fn weber_residual_is_small(lambda in 1.0f64..2.99) {
        let w = weber::solve_weber_normalized(lambda, -8.0, 6.0, 0.01).unwrap();
        let (r, _) = w.ode_residual();
        prop_assert!(r <= weber::RESIDUAL_TOL, "{}", r);
    }

    #[test]
    fn exponential_model_is_recovered(c0 in 0.1f64..10.0, rate in 0.5f64..10.0) {
        let pts: Vec<(f64, f64)> = [1.0, 0.8, 0.6, 0.5, 0.4, 0.33]
            .iter()
            .map(|&h| (h, c0 * (-rate / h).exp()))
            .collect();
        let fit = fit_gap_decay(&pts).unwrap();
        prop_assert!((fit.rate - rate).abs() <= 1e-10 * rate);
        prop_assert!((fit.prefactor - c0).abs() <= 1e-9 * c0);
        prop_assert!((fit.r_squared - 1.0).abs() <= 1e-10);
    }
}
