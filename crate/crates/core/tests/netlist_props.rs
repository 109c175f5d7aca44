use std::path::PathBuf;

use proptest::prelude::*;
use slh_feedback::netlist::Netlist;
use slh_feedback::units::{mhz_to_rad_per_us, rad_per_us_to_mhz, Unit};

fn shipped() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("netlists");
    let mut v: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn shipped_netlists_parse_and_round_trip() {
    let files = shipped();
    assert_eq!(files.len(), 4);
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        let nl = Netlist::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let again = Netlist::parse(&nl.to_string()).unwrap();
        assert_eq!(nl, again, "{}", f.display());
        nl.resolve().unwrap();
    }
}

fn generated(dim: usize, g: f64, w: f64, theta: f64, gain: f64, kerr: bool) -> String {
    let coupling = if kerr { "sqrt(g)*n@q" } else { "sqrt(g)*a@q" };
    format!(
        "[modes]\nq = {dim}\n[params]\ng = {g:?} MHz_over_2pi\nw = {w:?} rad_per_us\n[plant]\nH = w*n@q\n\
         [loop one]\ntheta = {theta:?} rad\nL = {coupling}\nL_f = {coupling}\nG0 = {gain:?}\n\
         [run]\ntask = evolve\nt_max = 0.5 us\nn_points = 3\ninitial_state = fock(1)@q\n"
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_netlists_round_trip(
        dim in 2usize..20, g in 0.0f64..10.0, w in -50.0f64..50.0,
        theta in -3.1f64..3.1, gain in 1.0f64..1e4, kerr in any::<bool>()
    ) {
        let nl = Netlist::parse(&generated(dim, g, w, theta, gain, kerr)).unwrap();
        let printed = nl.to_string();
        let again = Netlist::parse(&printed).unwrap();
        prop_assert_eq!(&nl, &again);
        prop_assert_eq!(printed, again.to_string());
    }

    #[test]
    fn dual_units_agree(v in -1e4f64..1e4) {
        let w = Unit::MhzOver2Pi.to_internal(v);
        prop_assert!((w - 2.0 * std::f64::consts::PI * v).abs() <= 1e-12 * (1.0 + w.abs()));
        prop_assert!((rad_per_us_to_mhz(mhz_to_rad_per_us(v)) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        prop_assert_eq!(Unit::RadPerUs.to_internal(v), v);
        prop_assert!((Unit::Ns.to_internal(v) - Unit::Us.to_internal(v * 1e-3)).abs() <= 1e-15 * (1.0 + v.abs()));
    }

    #[test]
    fn amplitude_units_square_to_rates(v in 0.0f64..1e4) {
        let a = Unit::SqMhzOver2Pi.to_internal(v);
        prop_assert!((rad_per_us_to_mhz(a * a) - v).abs() <= 1e-10 * (1.0 + v));
    }
}

#[test]
fn parse_errors_carry_positions() {
    let err = Netlist::parse("[modes]\na = 4\n[params]\ng = 1 furlongs\n").unwrap_err();
    assert_eq!(err.class(), slh_feedback::ErrorClass::Parse);
    assert!(err.to_string().starts_with("4:"), "{err}");
}
