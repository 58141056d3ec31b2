use ldgate_core::algebra::displacement_matrix_element;
use ldgate_core::gate::{condition_residuals, GateCondition, GateParameters};
use ldgate_core::rabi::{generalized_rabi, ld_parameter, ld_regime_check, CouplingSpec, LaserGeometry};
use proptest::prelude::*;

proptest! {
    #[test]
    fn rabi_matches_displacement_element(eta in 0.0..2.5f64, m in 0usize..8, k in 0usize..5, omega in 0.1..3.0f64) {
        let rabi = generalized_rabi(&CouplingSpec::new(omega, eta, m, k));
        let oracle = 0.5 * omega * displacement_matrix_element(eta, m + k, m, 60).unwrap().norm();
        // Laguerre zeros make a purely relative bound meaningless
        prop_assert!((rabi.abs() - oracle).abs() <= 1e-9 * oracle + 1e-14, "{rabi} vs {oracle}");
    }

    #[test]
    fn rabi_is_bounded(eta in -3.0..3.0f64, m in 0usize..40, k in 0usize..6) {
        let rabi = generalized_rabi(&CouplingSpec::new(2.0, eta, m, k));
        prop_assert!(rabi.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn ld_parameter_scales(kappa in 1e6..1e8f64, angle in 0.0..3.1f64, scale in 0.5..4.0f64) {
        let g = LaserGeometry { wavenumber: kappa, angle, ion_mass: 6.6e-26, ion_count: 2, trap_frequency: 2e7 };
        let a = ld_parameter(&g).unwrap();
        let b = ld_parameter(&LaserGeometry { wavenumber: kappa * scale, ..g }).unwrap();
        prop_assert!((b - scale * a).abs() <= 1e-12 * b.abs().max(1e-300));
        let heavier = ld_parameter(&LaserGeometry { ion_mass: 4.0 * g.ion_mass, ..g }).unwrap();
        prop_assert!((heavier - 0.5 * a).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn regime_margin_formula(eta in 0.0..2.0f64, m in 0usize..20) {
        let r = ld_regime_check(eta, m);
        prop_assert!((r.margin - (m as f64 + 0.5) * eta * eta).abs() < 1e-12);
        prop_assert_eq!(r.within, r.margin < 0.1);
    }

    #[test]
    fn residuals_invariant_under_sign_flips(e1 in 0.1..3.0f64, e2 in 0.1..3.0f64, t in 0.0..80.0f64,
                                            k1 in prop::sample::select(vec![1, 2, 3])) {
        let base = GateParameters { eta1: e1, eta2: e2, omega_ratio: 1.0, k1, m: 0 };
        let r0 = condition_residuals(&base, t, GateCondition::Exact).unwrap();
        for (s1, s2) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            let p = GateParameters { eta1: s1 * e1, eta2: s2 * e2, ..base };
            let r = condition_residuals(&p, t, GateCondition::Exact).unwrap();
            for i in 0..3 {
                prop_assert!((r[i] - r0[i]).abs() < 1e-12);
            }
        }
    }
}
