mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use slh_feedback::lindblad::{to_matrix, CMatrix};
use slh_feedback::{ModeRegistry, OperatorExpr};

const TOL: f64 = 1e-12;

fn close(x: &OperatorExpr, y: &OperatorExpr) -> bool {
    x.distance(y).unwrap() <= TOL * (1.0 + x.max_abs_coefficient().max(y.max_abs_coefficient()))
}

/// Largest entry difference over basis states whose levels all stay below
/// `max_level`, where truncation cannot interfere.
fn low_block_difference(x: &CMatrix, y: &CMatrix, dim: usize, max_level: usize) -> f64 {
    let ok = |k: usize| k / dim < max_level && k % dim < max_level;
    let mut worst: f64 = 0.0;
    for i in (0..x.nrows()).filter(|&i| ok(i)) {
        for j in (0..x.ncols()).filter(|&j| ok(j)) {
            worst = worst.max((x[(i, j)] - y[(i, j)]).norm());
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative(
        (x, y, z) in (common::operator(common::two_modes(4), 2),
                      common::operator(common::two_modes(4), 2),
                      common::operator(common::two_modes(4), 2))
    ) {
        prop_assert!(close(&((&x * &y) * &z), &(&x * &(&y * &z))));
    }

    #[test]
    fn product_distributes_over_sum(
        (x, y, z) in (common::operator(common::two_modes(4), 2),
                      common::operator(common::two_modes(4), 2),
                      common::operator(common::two_modes(4), 2))
    ) {
        prop_assert!(close(&(&x * &(&y + &z)), &(&(&x * &y) + &(&x * &z))));
    }

    #[test]
    fn adjoint_reverses_products(
        (x, y) in (common::operator(common::two_modes(4), 2), common::operator(common::two_modes(4), 2))
    ) {
        prop_assert!(close(&(&x * &y).adjoint(), &(&y.adjoint() * &x.adjoint())));
        prop_assert!(close(&x.adjoint().adjoint(), &x));
    }

    #[test]
    fn fock_matrices_respect_products_below_truncation(
        (x, y) in (common::operator(common::two_modes(7), 2), common::operator(common::two_modes(7), 2))
    ) {
        let reg = x.registry().clone();
        let lhs = to_matrix(&(&x * &y), &reg).unwrap();
        let rhs = to_matrix(&x, &reg).unwrap() * to_matrix(&y, &reg).unwrap();
        prop_assert!(low_block_difference(&lhs, &rhs, 7, 3) < 1e-10);
        let adj = to_matrix(&x.adjoint(), &reg).unwrap();
        prop_assert!((adj - to_matrix(&x, &reg).unwrap().adjoint()).norm() < 1e-12);
    }

    #[test]
    fn text_form_round_trips(x in common::operator(common::two_modes(4), 2)) {
        let parsed = slh_feedback::algebra::text::parse_expr(&x.to_string(), x.registry()).unwrap();
        prop_assert!(close(&parsed, &x));
    }
}

#[test]
fn canonical_commutator() {
    let r = ModeRegistry::new([("a", 5)]).unwrap();
    let a = OperatorExpr::annihilator(&r, "a").unwrap();
    let c = a.commutator(&a.adjoint()).unwrap();
    assert_eq!(c, OperatorExpr::scalar(&r, Complex64::new(1.0, 0.0)));
}
