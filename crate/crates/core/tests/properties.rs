use dualmass::asymptotics::{exponent_sign, mass_exponent, ExponentSign};
use dualmass::branch::{CaseId, GridSpec};
use dualmass::radial::{shoot_ground_state, ShootingConfig};
use dualmass::{DualModel, NonlinearityModel, PhiModel};
use proptest::prelude::*;

fn bounded(b: f64) -> PhiModel {
    PhiModel::BoundedRational { b }
}

proptest! {
    #[test]
    fn phi_transform_is_odd_and_sandwiched(b in 0.01f64..10.0, t in -1e6f64..1e6) {
        let phi = bounded(b);
        let p = phi.capital_phi(t);
        prop_assert_eq!(phi.capital_phi(-t), -p);
        let a = phi.a_star();
        prop_assert!(t.abs() <= p.abs() * (1.0 + 1e-15) && p.abs() <= a * t.abs() * (1.0 + 1e-15));
    }

    #[test]
    fn phi_inverse_roundtrips(b in 0.01f64..10.0, t in -1e4f64..1e4) {
        let phi = bounded(b);
        let back = phi.capital_phi_inv(phi.capital_phi(t));
        prop_assert!((back - t).abs() <= 1e-9 * t.abs().max(1.0));
    }

    #[test]
    fn phi_inverse_contracts(b in 0.01f64..10.0, s in -1e6f64..1e6) {
        let phi = bounded(b);
        let t = phi.capital_phi_inv(s);
        prop_assert!(t.abs() <= s.abs() && t.abs() * phi.a_star() >= s.abs() * (1.0 - 1e-12));
    }

    #[test]
    fn excess_agrees_with_primitive(b in 0.01f64..10.0, t in 1e-2f64..1e3) {
        let phi = bounded(b);
        let e = phi.excess(t);
        prop_assert!(e >= 0.0);
        prop_assert!((e - (phi.capital_phi(t) - t)).abs() <= 1e-12 * phi.capital_phi(t));
    }

    #[test]
    fn g_lambda_positive_and_antiderivative_increasing(
        alpha in 2.2f64..4.5, gap in 0.0f64..1.4, lambda in 1e-2f64..1e2, s in 1e-3f64..1e3,
    ) {
        let m = DualModel::new(PhiModel::REFERENCE, NonlinearityModel::power_ratio(alpha, alpha + gap, 1.0), 3).unwrap();
        prop_assert!(m.g_lambda(lambda, s).unwrap() > 0.0);
        let lo = m.g_lambda_antiderivative(lambda, s).unwrap();
        let hi = m.g_lambda_antiderivative(lambda, 1.01 * s).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn case_id_follows_exponent_signs(alpha in 2.1f64..5.9, beta in 2.1f64..5.9) {
        let case = CaseId::from_exponents(3, alpha, beta);
        let sa = exponent_sign(3, alpha);
        let sb = exponent_sign(3, beta);
        // the case depends only on the pair of signs
        prop_assert_eq!(case, CaseId::from_exponents(3, 2.0 + (alpha - 2.0) * 1.0000001, beta));
        let pa = mass_exponent(3, alpha);
        prop_assert_eq!(pa > 0.0, sa == ExponentSign::Positive);
        prop_assert_eq!(mass_exponent(3, beta) < 0.0, sb == ExponentSign::Negative);
    }

    #[test]
    fn grid_is_increasing_with_exact_ends(lo in -6.0f64..0.0, span in 0.5f64..8.0, count in 3usize..80) {
        let g = GridSpec { lambda_min: 10f64.powf(lo), lambda_max: 10f64.powf(lo + span), count };
        let l = g.lambdas();
        prop_assert_eq!(l.len(), count);
        prop_assert_eq!(l[0], g.lambda_min);
        prop_assert_eq!(l[count - 1], g.lambda_max);
        prop_assert!(l.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn semilinear_profile_scales_exactly(log_lambda in -2.0f64..2.0) {
        let cfg = ShootingConfig::default();
        let m = DualModel::new(PhiModel::Identity, NonlinearityModel::pure_power(4.0, 1.0), 3).unwrap();
        let lambda = 10f64.powf(log_lambda);
        let one = shoot_ground_state(&m, 1.0, &cfg).unwrap();
        let p = shoot_ground_state(&m, lambda, &cfg).unwrap();
        prop_assert!((p.v0 / (lambda.sqrt() * one.v0) - 1.0).abs() <= 1e-6);
        prop_assert!((p.mass_v * lambda.sqrt() / one.mass_v - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn dual_mass_sits_between_bounds(log_lambda in -3.0f64..3.0) {
        let cfg = ShootingConfig::default();
        let m = DualModel::reference();
        let p = shoot_ground_state(&m, 10f64.powf(log_lambda), &cfg).unwrap();
        let a2 = m.a_star() * m.a_star();
        prop_assert!(p.mass_v / a2 <= p.mass_dual && p.mass_dual <= p.mass_v);
        prop_assert!(p.is_positive_decreasing());
        prop_assert!(p.pohozaev_residual <= 1e-5);
    }
}
