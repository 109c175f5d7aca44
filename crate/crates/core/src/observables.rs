//! Photon statistics and non-Gaussianity of truncated states.
//!
//! Quadratures are `x = (a + a†)/√2`, `p = −i(a − a†)/√2`, so the vacuum has
//! covariance `diag(½, ½)`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{annihilation_matrix, propagate, CMatrix, DensityMatrix, IntegratorOptions, Liouvillian};

/// Tolerance on `det(cov) ≥ ¼`.
pub const UNCERTAINTY_SLACK: f64 = 1e-9;
/// Moment mismatch above which the Gaussian reference is reported as inexact.
pub const REFERENCE_SELF_CHECK: f64 = 1e-6;
/// Extra Fock levels used while building the reference before cropping.
const REFERENCE_PADDING: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentSet {
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

impl MomentSet {
    pub fn determinant(&self) -> f64 {
        let c = &self.covariance;
        c[0][0] * c[1][1] - c[0][1] * c[1][0]
    }

    pub fn max_difference(&self, other: &MomentSet) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            d = d.max((self.mean[i] - other.mean[i]).abs());
            for j in 0..2 {
                d = d.max((self.covariance[i][j] - other.covariance[i][j]).abs());
            }
        }
        d
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.mean[0], self.mean[1]) / std::f64::consts::SQRT_2
    }
}

fn mode_operator(rho: &DensityMatrix, mode: &str) -> Result<CMatrix> {
    annihilation_matrix(rho.registry(), mode)
}

fn real_expect(rho: &DensityMatrix, op: &CMatrix) -> f64 {
    rho.expect(op).re
}

pub fn moments(rho: &DensityMatrix, mode: &str) -> Result<MomentSet> {
    let a = mode_operator(rho, mode)?;
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * Complex64::new(s, 0.0);
    let p = (&a - &ad) * Complex64::new(0.0, -s);
    let mx = real_expect(rho, &x);
    let mp = real_expect(rho, &p);
    let xx = real_expect(rho, &(&x * &x)) - mx * mx;
    let pp = real_expect(rho, &(&p * &p)) - mp * mp;
    let xp = 0.5 * real_expect(rho, &(&x * &p + &p * &x)) - mx * mp;
    Ok(MomentSet {
        mean: [mx, mp],
        covariance: [[xx, xp], [xp, pp]],
    })
}

/// `(⟨n²⟩ − ⟨n⟩²)/⟨n⟩`; undefined for an empty mode.
pub fn fano_factor(rho: &DensityMatrix, mode: &str) -> Result<f64> {
    let a = mode_operator(rho, mode)?;
    let n = a.adjoint() * &a;
    let mean = real_expect(rho, &n);
    if mean <= 1e-12 {
        return Err(Error::Undefined(format!("Fano factor of mode {mode} with ⟨n⟩ = {mean:e}")));
    }
    let second = real_expect(rho, &(&n * &n));
    Ok((second - mean * mean) / mean)
}

/// `⟨a†²a²⟩/⟨a†a⟩²` of a single state.
pub fn g2_zero(rho: &DensityMatrix, mode: &str) -> Result<f64> {
    let a = mode_operator(rho, mode)?;
    let ad = a.adjoint();
    let mean = real_expect(rho, &(&ad * &a));
    if mean <= 1e-12 {
        return Err(Error::Undefined(format!("g2 of mode {mode} with ⟨n⟩ = {mean:e}")));
    }
    Ok(real_expect(rho, &(&ad * &ad * &a * &a)) / (mean * mean))
}

/// Stationary `g²(τ)` by quantum regression: the seed `a ρ a†` is evolved
/// under `liou` and read out with `a†a`.
pub fn g2(
    liou: &Liouvillian,
    rho_ss: &DensityMatrix,
    mode: &str,
    taus: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    if !rho_ss.registry().compatible(liou.registry()) || rho_ss.dim() != liou.dim() {
        return Err(Error::InvalidState("steady state does not match the Liouvillian".into()));
    }
    let a = mode_operator(rho_ss, mode)?;
    let n = a.adjoint() * &a;
    let mean = real_expect(rho_ss, &n);
    if mean <= 1e-12 {
        return Err(Error::Undefined(format!("g2 of mode {mode} with ⟨n⟩ = {mean:e}")));
    }
    let seed = &a * rho_ss.matrix() * a.adjoint();
    let (evolved, _) = propagate(liou, &seed, taus, opts)?;
    Ok(evolved
        .iter()
        .map(|m| (&n * m).trace().re / (mean * mean))
        .collect())
}

fn principal_axes(c: &[[f64; 2]; 2]) -> (f64, f64, f64) {
    let m = Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1]);
    let tr = m.trace();
    let disc = ((c[0][0] - c[1][1]).powi(2) + 4.0 * c[0][1] * c[0][1]).sqrt();
    let major = 0.5 * (2.0 * c[0][1]).atan2(c[0][0] - c[1][1]);
    ((tr - disc) / 2.0, (tr + disc) / 2.0, major)
}

fn ladder(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::new((j as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Displaced squeezed thermal state with the given moments, built in a padded
/// Fock space and cropped to `dim` levels.
pub fn gaussian_state(target: &MomentSet, dim: usize) -> Result<CMatrix> {
    let det = target.determinant();
    if det < 0.25 - UNCERTAINTY_SLACK {
        return Err(Error::Uncertainty(det));
    }
    let (lmin, lmax, major) = principal_axes(&target.covariance);
    if lmin <= 0.0 {
        return Err(Error::Uncertainty(det));
    }
    let nbar = (det.max(0.25).sqrt() - 0.5).max(0.0);
    let r = 0.25 * (lmax / lmin).ln();
    let minor = major + std::f64::consts::FRAC_PI_2;

    let big = dim + REFERENCE_PADDING.max(dim);
    let a = ladder(big);
    let ad = a.adjoint();
    let q = nbar / (nbar + 1.0);
    let mut th = CMatrix::zeros(big, big);
    let mut w = 1.0 / (nbar + 1.0);
    for k in 0..big {
        th[(k, k)] = Complex64::new(w, 0.0);
        w *= q;
    }
    // S(r) squeezes x; exp(iθn) then carries the squeezed axis to angle θ.
    let s = ((&a * &a - &ad * &ad) * Complex64::new(0.5 * r, 0.0)).exp();
    let rot = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        big,
        (0..big).map(|k| Complex64::from_polar(1.0, minor * k as f64)),
    ));
    let alpha = target.amplitude();
    let d = (&ad * alpha - &a * alpha.conj()).exp();
    let u = d * rot * s;
    let sigma = &u * th * u.adjoint();
    let mut crop = sigma.view((0, 0), (dim, dim)).into_owned();
    let tr = crop.trace();
    crop /= tr;
    Ok((&crop + crop.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Gaussian state with the first and second moments of `mode`, together with
/// the largest moment mismatch after truncation.
pub fn gaussian_reference_checked(rho: &DensityMatrix, mode: &str) -> Result<(DensityMatrix, f64)> {
    let reduced = single_mode(rho, mode)?;
    let target = moments(&reduced, mode)?;
    let m = gaussian_state(&target, reduced.dim())?;
    let sigma = DensityMatrix::from_matrix_unchecked(reduced.registry(), m)?;
    let mismatch = moments(&sigma, mode)?.max_difference(&target);
    if mismatch > REFERENCE_SELF_CHECK {
        log::warn!("Gaussian reference for mode {mode} misses the target moments by {mismatch:e}");
    }
    Ok((sigma, mismatch))
}

pub fn gaussian_reference(rho: &DensityMatrix, mode: &str) -> Result<DensityMatrix> {
    gaussian_reference_checked(rho, mode).map(|(s, _)| s)
}

fn single_mode(rho: &DensityMatrix, mode: &str) -> Result<DensityMatrix> {
    rho.registry().require(mode)?;
    if rho.registry().len() == 1 {
        Ok(rho.clone())
    } else {
        rho.partial_trace(&[mode])
    }
}

/// `tr[(ρ−σ)²]/2 / tr ρ²` for the reduced state of `mode`, clamped to `[0, 1]`.
pub fn non_gaussianity(rho: &DensityMatrix, mode: &str) -> Result<f64> {
    let reduced = single_mode(rho, mode)?;
    let sigma = gaussian_reference(&reduced, mode)?;
    Ok(hs_ratio(reduced.matrix(), sigma.matrix()))
}

fn hs_ratio(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let diff = rho - sigma;
    let num = 0.5 * (&diff * &diff).trace().re;
    let den = (rho * rho).trace().re;
    let delta = num / den;
    if !(0.0..=1.0).contains(&delta) {
        log::info!("non-Gaussianity {delta:e} clamped to [0, 1]");
    }
    delta.clamp(0.0, 1.0)
}

/// Evaluates `f` on every state in parallel, keeping order.
pub fn along<F>(states: &[DensityMatrix], f: F) -> Result<Vec<f64>>
where
    F: Fn(&DensityMatrix) -> Result<f64> + Sync + Send,
{
    states.par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ModeRegistry;
    use crate::algebra::OperatorExpr;
    use crate::slh::{DissipationChannel, EffectiveModel};

    fn reg(dim: usize) -> std::sync::Arc<ModeRegistry> {
        ModeRegistry::new([("a", dim)]).unwrap()
    }

    fn squeezed_vacuum(dim: usize, r: f64) -> DensityMatrix {
        // ⟨2k|S(r)|0⟩ = (−tanh r)^k √((2k)!) / (2^k k! √cosh r)
        let mut psi = nalgebra::DVector::zeros(dim);
        for k in 0..(dim + 1) / 2 {
            let mut ln = 0.0;
            for j in 1..=2 * k {
                ln += 0.5 * (j as f64).ln();
            }
            for j in 1..=k {
                ln -= (j as f64).ln();
            }
            ln -= k as f64 * 2f64.ln();
            let v = (-r.tanh()).powi(k as i32) * ln.exp() / r.cosh().sqrt();
            psi[2 * k] = Complex64::new(v, 0.0);
        }
        let norm = psi.norm();
        DensityMatrix::pure(&reg(dim), &(psi / Complex64::new(norm, 0.0))).unwrap()
    }

    #[test]
    fn fano_examples() {
        let coh = DensityMatrix::coherent(&reg(30), &[Complex64::new(2f64.sqrt(), 0.0)]).unwrap();
        assert!((fano_factor(&coh, "a").unwrap() - 1.0).abs() < 1e-3);
        let fock = DensityMatrix::fock(&reg(10), &[2]).unwrap();
        assert!(fano_factor(&fock, "a").unwrap().abs() < 1e-12);
        let th = DensityMatrix::thermal(&reg(30), &[1.0]).unwrap();
        assert!((fano_factor(&th, "a").unwrap() - 2.0).abs() < 1e-3);
        let vac = DensityMatrix::vacuum(&reg(5));
        assert!(matches!(fano_factor(&vac, "a"), Err(Error::Undefined(_))));
    }

    #[test]
    fn fock_one_reference_is_thermal() {
        let rho = DensityMatrix::fock(&reg(20), &[1]).unwrap();
        let m = moments(&rho, "a").unwrap();
        assert!((m.covariance[0][0] - 1.5).abs() < 1e-12 && (m.covariance[1][1] - 1.5).abs() < 1e-12);
        let sigma = gaussian_reference(&rho, "a").unwrap();
        let th = DensityMatrix::thermal(&reg(20), &[1.0]).unwrap();
        assert!((sigma.matrix() - th.matrix()).norm() < 1e-9);
        // Brute force on the 20-level matrices.
        let diff = rho.matrix() - th.matrix();
        let oracle = 0.5 * (&diff * &diff).trace().re / (rho.matrix() * rho.matrix()).trace().re;
        let delta = non_gaussianity(&rho, "a").unwrap();
        assert!((delta - oracle).abs() < 1e-9);
        assert!((delta - 5.0 / 12.0).abs() < 1e-5);
        assert!(g2_zero(&rho, "a").unwrap().abs() < 1e-12);
    }

    #[test]
    fn gaussian_states_are_fixed_points() {
        let sv = squeezed_vacuum(30, 0.3);
        let sigma = gaussian_reference(&sv, "a").unwrap();
        assert!(sigma.trace_distance(&sv).unwrap() < 1e-6);
        assert!(non_gaussianity(&sv, "a").unwrap() < 1e-6);
        let vac = DensityMatrix::vacuum(&reg(8));
        assert!(gaussian_reference(&vac, "a").unwrap().trace_distance(&vac).unwrap() < 1e-12);
        let coh = DensityMatrix::coherent(&reg(30), &[Complex64::new(0.7, -1.1)]).unwrap();
        assert!(non_gaussianity(&coh, "a").unwrap() < 1e-6);
    }

    #[test]
    fn reference_matches_rotated_displaced_moments() {
        let target = MomentSet {
            mean: [0.4, -0.9],
            covariance: [[0.9, 0.35], [0.35, 0.6]],
        };
        let m = gaussian_state(&target, 40).unwrap();
        let sigma = DensityMatrix::from_matrix(&reg(40), m).unwrap();
        assert!(moments(&sigma, "a").unwrap().max_difference(&target) < 1e-6);
        assert!(non_gaussianity(&sigma, "a").unwrap() < 1e-6);
        let bad = MomentSet {
            mean: [0.0, 0.0],
            covariance: [[0.3, 0.0], [0.0, 0.3]],
        };
        assert!(matches!(gaussian_state(&bad, 10), Err(Error::Uncertainty(_))));
    }

    #[test]
    fn coherent_steady_state_has_flat_g2() {
        let r = reg(25);
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let model = EffectiveModel {
            h: (&a + &a.adjoint()).scale(Complex64::new(0.9, 0.0)),
            channels: vec![DissipationChannel::vacuum(a.clone(), 2.0)],
        };
        let liou = Liouvillian::build(&model, &r).unwrap();
        let rho = crate::lindblad::steady_state(&liou, &Default::default()).unwrap();
        let taus: Vec<f64> = (0..20).map(|k| k as f64 * 0.2).collect();
        let g = g2(&liou, &rho, "a", &taus, &IntegratorOptions::default()).unwrap();
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-3));
        assert!((g[0] - g2_zero(&rho, "a").unwrap()).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_of_product() {
        let r = ModeRegistry::new([("a", 6), ("b", 4)]).unwrap();
        let rho = DensityMatrix::fock(&r, &[1, 2]).unwrap();
        let d = non_gaussianity(&rho, "a").unwrap();
        let single = non_gaussianity(&DensityMatrix::fock(&reg(6), &[1]).unwrap(), "a").unwrap();
        assert!((d - single).abs() < 1e-12);
        assert!((fano_factor(&rho, "b").unwrap()).abs() < 1e-12);
    }
}
