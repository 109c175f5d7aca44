//! Normal-ordered polynomials in bosonic creation and annihilation operators.
//!
//! Every [`OperatorExpr`] is kept in normal order: within each mode the
//! creation powers stand to the left of the annihilation powers. Products are
//! re-ordered with `[a, a†] = 1`, so two expressions are equal exactly when
//! their term maps are equal.

mod registry;
pub mod text;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{self, AtomicBool};
use std::sync::Arc;

use num_complex::Complex64;

pub use registry::{Mode, ModeRegistry};

use crate::error::{Error, Result};

/// Coefficients below this magnitude are dropped after every operation.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Products above this total degree trigger a (one-time) warning.
pub const DEGREE_WARNING: u32 = 8;

static DEGREE_WARNED: AtomicBool = AtomicBool::new(false);

/// Normal-ordered product `∏_modes (a†)^p a^q`, one `(p, q)` pair per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn identity(n_modes: usize) -> Self {
        Monomial(vec![(0, 0); n_modes])
    }

    pub fn single(n_modes: usize, mode: usize, creation: u32, annihilation: u32) -> Self {
        let mut powers = vec![(0, 0); n_modes];
        powers[mode] = (creation, annihilation);
        Monomial(powers)
    }

    pub fn from_powers(powers: Vec<(u32, u32)>) -> Self {
        Monomial(powers)
    }

    pub fn powers(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn power(&self, mode: usize) -> (u32, u32) {
        self.0[mode]
    }

    pub fn n_modes(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(p, q)| p + q).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&(p, q)| p == 0 && q == 0)
    }

    pub fn adjoint(&self) -> Self {
        Monomial(self.0.iter().map(|&(p, q)| (q, p)).collect())
    }

    /// Normal-ordered expansion of `self · other`.
    ///
    /// Per mode, `(a†^p a^q)(a†^r a^s) = Σ_k C(q,k) C(r,k) k! a†^(p+r-k) a^(q+s-k)`.
    pub fn product(&self, other: &Monomial) -> Vec<(Monomial, f64)> {
        debug_assert_eq!(self.0.len(), other.0.len());
        let mut acc: Vec<(Vec<(u32, u32)>, f64)> = vec![(Vec::with_capacity(self.0.len()), 1.0)];
        for (&(p, q), &(r, s)) in self.0.iter().zip(&other.0) {
            let kmax = q.min(r);
            if kmax == 0 {
                for (powers, _) in acc.iter_mut() {
                    powers.push((p + r, q + s));
                }
                continue;
            }
            let mut next = Vec::with_capacity(acc.len() * (kmax as usize + 1));
            for (powers, weight) in &acc {
                for k in 0..=kmax {
                    let w = binomial(q, k) * binomial(r, k) * factorial(k);
                    let mut extended = powers.clone();
                    extended.push((p + r - k, q + s - k));
                    next.push((extended, weight * w));
                }
            }
            acc = next;
        }
        acc.into_iter().map(|(p, w)| (Monomial(p), w)).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * f64::from(i))
}

/// Complex polynomial in the mode operators of a [`ModeRegistry`].
#[derive(Clone, Debug)]
pub struct OperatorExpr {
    registry: Arc<ModeRegistry>,
    terms: BTreeMap<Monomial, Complex64>,
}

impl OperatorExpr {
    pub fn zero(registry: &Arc<ModeRegistry>) -> Self {
        OperatorExpr {
            registry: Arc::clone(registry),
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(registry: &Arc<ModeRegistry>) -> Self {
        Self::scalar(registry, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(registry: &Arc<ModeRegistry>, value: Complex64) -> Self {
        Self::from_monomial(registry, Monomial::identity(registry.len()), value)
    }

    pub fn from_monomial(registry: &Arc<ModeRegistry>, monomial: Monomial, coefficient: Complex64) -> Self {
        assert_eq!(monomial.n_modes(), registry.len(), "monomial arity does not match registry");
        let mut terms = BTreeMap::new();
        if coefficient.norm() >= DROP_TOLERANCE {
            terms.insert(monomial, coefficient);
        }
        OperatorExpr {
            registry: Arc::clone(registry),
            terms,
        }
    }

    /// Builds an expression from raw terms, merging duplicates and dropping
    /// negligible coefficients.
    pub fn from_terms(
        registry: &Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Monomial, Complex64)>,
    ) -> Self {
        let mut map: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.n_modes(), registry.len(), "monomial arity does not match registry");
            *map.entry(m).or_default() += c;
        }
        let mut out = OperatorExpr {
            registry: Arc::clone(registry),
            terms: map,
        };
        out.prune();
        out
    }

    pub fn annihilator(registry: &Arc<ModeRegistry>, label: &str) -> Result<Self> {
        let idx = registry.require(label)?;
        Ok(Self::from_monomial(
            registry,
            Monomial::single(registry.len(), idx, 0, 1),
            Complex64::new(1.0, 0.0),
        ))
    }

    pub fn creator(registry: &Arc<ModeRegistry>, label: &str) -> Result<Self> {
        let idx = registry.require(label)?;
        Ok(Self::from_monomial(
            registry,
            Monomial::single(registry.len(), idx, 1, 0),
            Complex64::new(1.0, 0.0),
        ))
    }

    /// `a†a` on the given mode.
    pub fn number(registry: &Arc<ModeRegistry>, label: &str) -> Result<Self> {
        let idx = registry.require(label)?;
        Ok(Self::from_monomial(
            registry,
            Monomial::single(registry.len(), idx, 1, 1),
            Complex64::new(1.0, 0.0),
        ))
    }

    /// Position quadrature `x = (a + a†)/√2`.
    pub fn position(registry: &Arc<ModeRegistry>, label: &str) -> Result<Self> {
        let a = Self::annihilator(registry, label)?;
        let ad = Self::creator(registry, label)?;
        Ok((&a + &ad).scale(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
    }

    /// Momentum quadrature `p = (−i a + i a†)/√2`.
    pub fn momentum(registry: &Arc<ModeRegistry>, label: &str) -> Result<Self> {
        let a = Self::annihilator(registry, label)?;
        let ad = Self::creator(registry, label)?;
        let i = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Ok(&ad.scale(i) - &a.scale(i))
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, monomial: &Monomial) -> Complex64 {
        self.terms.get(monomial).copied().unwrap_or_default()
    }

    /// Highest total degree among the terms (0 for the empty expression).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest degree in a single mode's operators.
    pub fn mode_degree(&self, mode: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| {
                let (p, q) = m.power(mode);
                p + q
            })
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOLERANCE);
    }

    fn check_registry(&self, other: &OperatorExpr) -> Result<()> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry.compatible(&other.registry) {
            Ok(())
        } else {
            Err(Error::RegistryMismatch {
                left: self.registry.describe(),
                right: other.registry.describe(),
            })
        }
    }

    pub fn try_add(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        self.check_registry(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_default() += c;
        }
        let mut out = OperatorExpr {
            registry: Arc::clone(&self.registry),
            terms,
        };
        out.prune();
        Ok(out)
    }

    pub fn try_sub(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        self.try_add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn try_mul(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        self.check_registry(other)?;
        let mut terms: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                for (m, w) in m1.product(m2) {
                    *terms.entry(m).or_default() += c1 * c2 * w;
                }
            }
        }
        let mut out = OperatorExpr {
            registry: Arc::clone(&self.registry),
            terms,
        };
        out.prune();
        if out.degree() > DEGREE_WARNING && !DEGREE_WARNED.swap(true, atomic::Ordering::Relaxed) {
            log::warn!(
                "operator product reached total degree {} (above {})",
                out.degree(),
                DEGREE_WARNING
            );
        }
        Ok(out)
    }

    pub fn scale(&self, factor: Complex64) -> OperatorExpr {
        let mut out = OperatorExpr {
            registry: Arc::clone(&self.registry),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * factor)).collect(),
        };
        out.prune();
        out
    }

    /// Conjugate transpose. Normal order is preserved term by term.
    pub fn adjoint(&self) -> OperatorExpr {
        OperatorExpr {
            registry: Arc::clone(&self.registry),
            terms: self.terms.iter().map(|(m, c)| (m.adjoint(), c.conj())).collect(),
        }
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &OperatorExpr) -> Result<OperatorExpr> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn powi(&self, exponent: u32) -> OperatorExpr {
        let mut out = OperatorExpr::identity(&self.registry);
        for _ in 0..exponent {
            out = &out * self;
        }
        out
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn distance(&self, other: &OperatorExpr) -> Result<f64> {
        self.check_registry(other)?;
        let mut worst: f64 = 0.0;
        for (m, c) in &self.terms {
            worst = worst.max((c - other.coefficient(m)).norm());
        }
        for (m, c) in &other.terms {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.norm());
            }
        }
        Ok(worst)
    }

    /// Max-norm of the coefficients of `self − self†`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.distance(&self.adjoint()).expect("adjoint shares the registry")
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(self + self†)/2`, used to strip round-off anti-Hermitian residue.
    pub fn hermitian_part(&self) -> OperatorExpr {
        (self + &self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// Terms of total degree one.
    pub fn linear_part(&self) -> OperatorExpr {
        OperatorExpr::from_terms(
            &self.registry,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == 1)
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    pub fn without_linear_part(&self) -> OperatorExpr {
        OperatorExpr::from_terms(
            &self.registry,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() != 1)
                .map(|(m, c)| (m.clone(), *c)),
        )
    }

    /// Whether any term contains an operator of the given mode.
    pub fn involves_mode(&self, mode: usize) -> bool {
        self.terms.keys().any(|m| m.power(mode) != (0, 0))
    }

    /// Re-homes the expression onto another registry with the same labels
    /// (for example one with overridden truncations).
    pub fn with_registry(&self, registry: &Arc<ModeRegistry>) -> Result<OperatorExpr> {
        if !self.registry.compatible(registry) {
            return Err(Error::RegistryMismatch {
                left: self.registry.describe(),
                right: registry.describe(),
            });
        }
        Ok(OperatorExpr {
            registry: Arc::clone(registry),
            terms: self.terms.clone(),
        })
    }

    /// Embeds into a registry that contains this registry's modes (by label),
    /// possibly among others.
    pub fn embed(&self, target: &Arc<ModeRegistry>) -> Result<OperatorExpr> {
        let map: Vec<usize> = self
            .registry
            .modes()
            .iter()
            .map(|m| target.require(&m.label))
            .collect::<Result<_>>()?;
        Ok(OperatorExpr::from_terms(
            target,
            self.terms.iter().map(|(m, c)| {
                let mut powers = vec![(0, 0); target.len()];
                for (src, &dst) in map.iter().enumerate() {
                    powers[dst] = m.power(src);
                }
                (Monomial(powers), *c)
            }),
        ))
    }
}

impl PartialEq for OperatorExpr {
    fn eq(&self, other: &Self) -> bool {
        self.registry.compatible(&other.registry) && self.terms == other.terms
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::format_expr(self))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $try:ident) => {
        impl $trait<&OperatorExpr> for &OperatorExpr {
            type Output = OperatorExpr;

            /// Panics when the registries differ; use the `try_*` method to
            /// handle that case.
            fn $method(self, rhs: &OperatorExpr) -> OperatorExpr {
                self.$try(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }

        impl $trait<OperatorExpr> for OperatorExpr {
            type Output = OperatorExpr;

            fn $method(self, rhs: OperatorExpr) -> OperatorExpr {
                (&self).$method(&rhs)
            }
        }

        impl $trait<&OperatorExpr> for OperatorExpr {
            type Output = OperatorExpr;

            fn $method(self, rhs: &OperatorExpr) -> OperatorExpr {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Mul<Complex64> for &OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: Complex64) -> OperatorExpr {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: Complex64) -> OperatorExpr {
        self.scale(rhs)
    }
}

impl Mul<f64> for &OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: f64) -> OperatorExpr {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<f64> for OperatorExpr {
    type Output = OperatorExpr;

    fn mul(self, rhs: f64) -> OperatorExpr {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;

    fn neg(self) -> OperatorExpr {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;

    fn neg(self) -> OperatorExpr {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_mode() -> Arc<ModeRegistry> {
        ModeRegistry::new([("a", 12)]).unwrap()
    }

    fn mono(p: u32, q: u32) -> Monomial {
        Monomial::single(1, 0, p, q)
    }

    #[test]
    fn add_identity_and_cancellation() {
        let r = one_mode();
        let n = OperatorExpr::number(&r, "a").unwrap();
        assert_eq!(&n + &OperatorExpr::zero(&r), n);

        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        let sum = &a + &ad;
        assert_eq!(sum.len(), 2);
        assert_eq!(sum.coefficient(&mono(1, 0)), c(1.0, 0.0));
        assert_eq!(sum.coefficient(&mono(0, 1)), c(1.0, 0.0));

        let cancelled = &n.scale(c(2.0, 0.0)) + &n.scale(c(-2.0, 0.0));
        assert!(cancelled.is_empty());
    }

    #[test]
    fn single_commutator_product() {
        let r = one_mode();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        let prod = &a * &ad;
        let expected = OperatorExpr::from_terms(&r, [(mono(1, 1), c(1.0, 0.0)), (mono(0, 0), c(1.0, 0.0))]);
        assert_eq!(prod, expected);
    }

    #[test]
    fn wick_products_match_frozen_values() {
        // Coefficients read off from dim-12 truncated matrix products
        // (see tests/algebra_oracle.rs for the brute-force check).
        let r = one_mode();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        let lhs = &a.powi(2) * &ad.powi(2);
        let expected = OperatorExpr::from_terms(
            &r,
            [(mono(2, 2), c(1.0, 0.0)), (mono(1, 1), c(4.0, 0.0)), (mono(0, 0), c(2.0, 0.0))],
        );
        assert_eq!(lhs, expected);

        let n = OperatorExpr::number(&r, "a").unwrap();
        let nn = &n * &n;
        let expected = OperatorExpr::from_terms(&r, [(mono(2, 2), c(1.0, 0.0)), (mono(1, 1), c(1.0, 0.0))]);
        assert_eq!(nn, expected);
    }

    #[test]
    fn adjoint_examples() {
        let r = one_mode();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        assert_eq!(a.adjoint(), ad);

        let sq = ad.powi(2).scale(c(0.0, 1.0));
        assert_eq!(sq.adjoint(), a.powi(2).scale(c(0.0, -1.0)));

        let n = OperatorExpr::number(&r, "a").unwrap();
        assert_eq!(n.adjoint(), n);
    }

    #[test]
    fn commutator_examples() {
        let r = one_mode();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        assert_eq!(a.commutator(&ad).unwrap(), OperatorExpr::identity(&r));

        let n = OperatorExpr::number(&r, "a").unwrap();
        assert_eq!(n.commutator(&a).unwrap(), -&a);

        let x = OperatorExpr::position(&r, "a").unwrap();
        let p = OperatorExpr::momentum(&r, "a").unwrap();
        let xp = x.commutator(&p).unwrap();
        let diff = xp.distance(&OperatorExpr::scalar(&r, c(0.0, 1.0))).unwrap();
        assert!(diff < 1e-15, "{xp}");
    }

    #[test]
    fn hermiticity_examples() {
        let r = one_mode();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let ad = OperatorExpr::creator(&r, "a").unwrap();
        assert!(OperatorExpr::number(&r, "a").unwrap().is_hermitian(0.0));
        assert!(!a.is_hermitian(1e-12));
        let squeeze = (&ad.powi(2) - &a.powi(2)).scale(c(0.0, 1.0));
        assert!(squeeze.is_hermitian(0.0));
    }

    #[test]
    fn registry_mismatch_is_an_error() {
        let r1 = one_mode();
        let r2 = ModeRegistry::new([("b", 4)]).unwrap();
        let a = OperatorExpr::annihilator(&r1, "a").unwrap();
        let b = OperatorExpr::annihilator(&r2, "b").unwrap();
        assert!(matches!(a.try_add(&b), Err(Error::RegistryMismatch { .. })));
        assert!(matches!(a.try_mul(&b), Err(Error::RegistryMismatch { .. })));
        assert!(matches!(a.commutator(&b), Err(Error::RegistryMismatch { .. })));
    }

    #[test]
    fn different_modes_commute() {
        let r = ModeRegistry::new([("a", 4), ("b", 4)]).unwrap();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let bd = OperatorExpr::creator(&r, "b").unwrap();
        assert!(a.commutator(&bd).unwrap().is_empty());
    }

    #[test]
    fn linear_part_split() {
        let r = one_mode();
        let x = OperatorExpr::position(&r, "a").unwrap();
        let h = &(&x * &x) + &x;
        assert_eq!(h.linear_part(), x);
        assert_eq!(h.without_linear_part().degree(), 2);
        assert!(h.without_linear_part().linear_part().is_empty());
    }

    #[test]
    fn embed_moves_powers_to_new_slots() {
        let small = ModeRegistry::new([("a", 4)]).unwrap();
        let big = ModeRegistry::new([("c", 3), ("a", 5)]).unwrap();
        let n = OperatorExpr::number(&small, "a").unwrap();
        let e = n.embed(&big).unwrap();
        assert_eq!(e, OperatorExpr::number(&big, "a").unwrap());
    }
}
