mod common;

use proptest::prelude::*;
use slh_feedback::slh::{
    eliminate, self_feedback, series_product, AmplifierParams, EliminationScheme, FeedbackLoopSpec, SlhTriple,
};
use slh_feedback::OperatorExpr;

const TOL: f64 = 1e-12;

fn scale(g: &SlhTriple) -> f64 {
    1.0 + g.l.max_abs_coefficient().max(g.h.max_abs_coefficient())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_product_is_associative(
        (g1, g2, g3) in (common::triple(common::two_modes(4)),
                         common::triple(common::two_modes(4)),
                         common::triple(common::two_modes(4)))
    ) {
        let left = series_product(&series_product(&g1, &g2).unwrap(), &g3).unwrap();
        let right = series_product(&g1, &series_product(&g2, &g3).unwrap()).unwrap();
        prop_assert!(left.max_distance(&right).unwrap() <= TOL * scale(&left).powi(2));
    }

    #[test]
    fn self_feedback_is_series_with_hamiltonian_once(g in common::triple(common::two_modes(4))) {
        let bare = SlhTriple::new(g.theta, g.l.clone(), OperatorExpr::zero(g.registry())).unwrap();
        let series = series_product(&g, &bare).unwrap();
        let fb = self_feedback(&g);
        prop_assert!(fb.max_distance(&series).unwrap() <= TOL * scale(&g).powi(2));
        prop_assert!(fb.h.is_hermitian(1e-12));
    }

    #[test]
    fn amplifier_identities(kappa in 1e-2f64..1e3, frac in 0.0f64..0.999) {
        let amp = AmplifierParams::from_kappa_xi(kappa, frac * kappa).unwrap();
        let g0 = amp.gain_closed_form().unwrap();
        let c = amp.r0().cosh();
        prop_assert!((g0 - c * c).abs() <= 1e-12 * g0);
        let (n, m) = (amp.n_bath(), amp.m_bath());
        prop_assert!((m * m - n * (n + 1.0)).abs() <= 1e-10 * (m * m).max(1e-300));
        let scaled = amp.with_kappa(3.0 * kappa).unwrap();
        prop_assert!((scaled.r0() - amp.r0()).abs() <= 1e-12 * (1.0 + amp.r0()));
    }

    #[test]
    fn effective_hamiltonians_are_hermitian(
        (h, l, lf, r0, theta, high) in (common::hermitian(common::two_modes(4), 2),
                                        common::operator(common::two_modes(4), 2),
                                        common::operator(common::two_modes(4), 2),
                                        0.0f64..2.0, -3.2f64..3.2, any::<bool>())
    ) {
        let amp = AmplifierParams::from_r0(r0).unwrap();
        let spec = FeedbackLoopSpec::new(h, theta, l, lf, amp, 0.0, 0.0).unwrap();
        for scheme in [EliminationScheme::Printed, EliminationScheme::Cascaded] {
            let model = eliminate(&spec, scheme, high).unwrap();
            prop_assert!(model.h.is_hermitian(1e-10));
        }
    }
}

#[test]
fn kappa_xi_boundary_is_rejected() {
    assert!(AmplifierParams::from_kappa_xi(1.0, 1.0).is_err());
    assert!(AmplifierParams::from_kappa_xi(1.0, 2.0).is_err());
    assert!(AmplifierParams::from_kappa_xi(0.0, 0.0).is_err());
}
