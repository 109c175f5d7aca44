//! Closed-form coefficients for synthesized Kerr, cross-Kerr and quartic
//! Hamiltonians.

use serde::Serialize;

use crate::error::{Error, Result};

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KerrCoefficients {
    /// Frequency shift `2 A_T √(G0 γ_a)`.
    pub delta: f64,
    /// Kerr strength `2 √G0 γ_a`.
    pub chi: f64,
}

pub fn kerr_coefficients(g0: f64, gamma_a: f64, a_t: f64) -> Result<KerrCoefficients> {
    non_negative("G0", g0)?;
    non_negative("gamma_a", gamma_a)?;
    non_negative("A_T", a_t)?;
    Ok(KerrCoefficients {
        delta: 2.0 * a_t * (g0 * gamma_a).sqrt(),
        chi: 2.0 * g0.sqrt() * gamma_a,
    })
}

/// `2 √(G0 γ_a γ_b)`.
pub fn cross_kerr_coefficient(g0: f64, gamma_a: f64, gamma_b: f64) -> Result<f64> {
    non_negative("G0", g0)?;
    non_negative("gamma_a", gamma_a)?;
    non_negative("gamma_b", gamma_b)?;
    Ok(2.0 * (g0 * gamma_a * gamma_b).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuarticInputs {
    pub g1: f64,
    pub g3: f64,
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub a1: f64,
    pub a3: f64,
    pub a4: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuarticCoefficients {
    pub chi1: f64,
    pub chi2: f64,
    pub chi3: f64,
    pub chi4: f64,
    /// Gain the second loop needs to balance the first.
    pub g2: f64,
    /// Drive amplitude the second loop needs to balance the first.
    pub a2: f64,
}

/// Coefficients of `χ1 x + χ2 x² + χ3 x³ + χ4 x⁴` from three loops and one
/// direct drive.
pub fn quartic_coefficients(p: &QuarticInputs) -> Result<QuarticCoefficients> {
    for (name, v) in [
        ("G1", p.g1),
        ("G3", p.g3),
        ("gamma", p.gamma),
        ("gamma1", p.gamma1),
        ("gamma2", p.gamma2),
        ("gamma3", p.gamma3),
        ("A1", p.a1),
        ("A3", p.a3),
        ("A4", p.a4),
    ] {
        non_negative(name, v)?;
    }
    if p.gamma1 == 0.0 && p.gamma2 > 0.0 {
        return Err(Error::InvalidParameter(
            "gamma1 = 0 leaves A2 = A1 sqrt(gamma2/gamma1) undefined".into(),
        ));
    }
    if p.gamma2 == 0.0 {
        return Err(Error::InvalidParameter(
            "gamma2 = 0 leaves G2 = G1 gamma1/gamma2 undefined".into(),
        ));
    }
    Ok(QuarticCoefficients {
        chi1: p.a4 * (2.0 * p.gamma).sqrt(),
        chi2: 4.0 * p.a1 * (p.g1 * p.gamma1).sqrt() - 2.0 * p.a3 * (p.g3 * p.gamma3).sqrt(),
        chi3: 2.0 * (p.g3 * p.gamma * p.gamma3).sqrt(),
        chi4: 2.0 * (p.g1 * p.gamma * p.gamma1).sqrt(),
        g2: p.g1 * p.gamma1 / p.gamma2,
        a2: p.a1 * (p.gamma2 / p.gamma1).sqrt(),
    })
}

/// `π⁶ η_T⁴ η_in² / Φ0⁶`.
pub fn gamma_a_from_circuit(eta_t: f64, eta_in: f64, phi0: f64) -> Result<f64> {
    if !(phi0 > 0.0) {
        return Err(Error::InvalidParameter(format!("flux quantum must be positive, got {phi0}")));
    }
    Ok(std::f64::consts::PI.powi(6) * eta_t.powi(4) * eta_in.powi(2) / phi0.powi(6))
}
