use num_complex::Complex64;
use proptest::prelude::*;
use slh_feedback::lindblad::{to_matrix, DensityMatrix};
use slh_feedback::observables::{fano_factor, g2_zero, non_gaussianity};
use slh_feedback::{ModeRegistry, OperatorExpr};

fn displaced(rho: &DensityMatrix, alpha: Complex64) -> DensityMatrix {
    let r = rho.registry().clone();
    let a = OperatorExpr::annihilator(&r, "a").unwrap();
    let gen = &a.adjoint().scale(alpha) - &a.scale(alpha.conj());
    let d = to_matrix(&gen, &r).unwrap().exp();
    let m = &d * rho.matrix() * d.adjoint();
    let m = &m / m.trace();
    DensityMatrix::from_matrix(&r, (&m + m.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nongaussianity_is_displacement_invariant(re in -0.4f64..0.4, im in -0.4f64..0.4, level in 1usize..3) {
        let r = ModeRegistry::new([("a", 40)]).unwrap();
        let rho = DensityMatrix::fock(&r, &[level]).unwrap();
        let moved = displaced(&rho, Complex64::new(re, im));
        let d0 = non_gaussianity(&rho, "a").unwrap();
        let d1 = non_gaussianity(&moved, "a").unwrap();
        prop_assert!((d0 - d1).abs() < 1e-5, "{} vs {}", d0, d1);
        prop_assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn coherent_states_are_poissonian(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re * re + im * im > 0.05);
        let r = ModeRegistry::new([("a", 40)]).unwrap();
        let rho = DensityMatrix::coherent(&r, &[Complex64::new(re, im)]).unwrap();
        prop_assert!((fano_factor(&rho, "a").unwrap() - 1.0).abs() < 1e-6);
        prop_assert!((g2_zero(&rho, "a").unwrap() - 1.0).abs() < 1e-6);
        prop_assert!(non_gaussianity(&rho, "a").unwrap() < 1e-6);
    }
}
