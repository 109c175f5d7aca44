#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use slh_feedback::slh::SlhTriple;
use slh_feedback::{ModeRegistry, Monomial, OperatorExpr};

pub fn two_modes(dim: usize) -> Arc<ModeRegistry> {
    ModeRegistry::new([("a", dim), ("b", dim)]).unwrap()
}

/// Per-mode (creation, annihilation) powers with total degree <= `max_degree`.
fn monomial(max_degree: u32) -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((0u32..=2, 0u32..=2), 2).prop_filter("degree", move |p| {
        p.iter().map(|(c, a)| c + a).sum::<u32>() <= max_degree
    })
}

fn coefficient() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Random two-mode polynomial of degree <= `max_degree`, up to four terms.
pub fn operator(reg: Arc<ModeRegistry>, max_degree: u32) -> impl Strategy<Value = OperatorExpr> {
    prop::collection::vec((monomial(max_degree), coefficient()), 0..=4).prop_map(move |terms| {
        terms.into_iter().fold(OperatorExpr::zero(&reg), |acc, (p, c)| {
            acc + OperatorExpr::from_monomial(&reg, Monomial::from_powers(p), c)
        })
    })
}

pub fn hermitian(reg: Arc<ModeRegistry>, max_degree: u32) -> impl Strategy<Value = OperatorExpr> {
    operator(reg, max_degree).prop_map(|x| x.hermitian_part())
}

pub fn triple(reg: Arc<ModeRegistry>) -> impl Strategy<Value = SlhTriple> {
    (-3.2f64..3.2, operator(reg.clone(), 2), hermitian(reg, 2))
        .prop_map(|(theta, l, h)| SlhTriple::new(theta, l, h).unwrap())
}
