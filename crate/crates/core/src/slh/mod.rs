//! Single-channel SLH triples, the amplifier model and feedback loops.

mod coefficients;
mod elimination;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use coefficients::{
    cross_kerr_coefficient, gamma_a_from_circuit, kerr_coefficients, quartic_coefficients, KerrCoefficients,
    QuarticCoefficients, QuarticInputs,
};
pub use elimination::{
    combine_loops, compensate_linear, eliminate, eliminate_amplifier, eliminate_amplifier_cascaded,
    feedback_nonlinear_hamiltonian, high_gain_cascaded, high_gain_limit, EliminationScheme,
};

use crate::algebra::{ModeRegistry, OperatorExpr};
use crate::error::{Error, Result};

/// Hermiticity tolerance for triple Hamiltonians.
pub const TRIPLE_HERMITIAN_TOL: f64 = 1e-12;
/// Hermiticity tolerance for eliminated Hamiltonians.
pub const MODEL_HERMITIAN_TOL: f64 = 1e-10;
/// Smallest accepted `(κ − ξ)/κ`.
pub const AMPLIFIER_SINGULARITY_GUARD: f64 = 1e-6;

pub(crate) fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

fn check_hermitian(h: &OperatorExpr, tol: f64, context: &str) -> Result<()> {
    let deviation = h.hermiticity_deviation();
    let scale = h.max_abs_coefficient().max(1.0);
    if deviation > tol * scale {
        return Err(Error::NonHermitian {
            context: context.to_string(),
            deviation,
            tolerance: tol * scale,
        });
    }
    Ok(())
}

/// `(S = e^{iθ}, L, H)` for a single input channel.
#[derive(Clone, Debug, PartialEq)]
pub struct SlhTriple {
    pub theta: f64,
    pub l: OperatorExpr,
    pub h: OperatorExpr,
}

impl SlhTriple {
    pub fn new(theta: f64, l: OperatorExpr, h: OperatorExpr) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("phase {theta} is not finite")));
        }
        if !l.registry().compatible(h.registry()) {
            return Err(Error::RegistryMismatch {
                left: l.registry().describe(),
                right: h.registry().describe(),
            });
        }
        check_hermitian(&h, TRIPLE_HERMITIAN_TOL, "triple Hamiltonian")?;
        Ok(SlhTriple { theta, l, h })
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        self.h.registry()
    }

    pub fn scattering(&self) -> Complex64 {
        phase(self.theta)
    }

    pub fn max_distance(&self, other: &SlhTriple) -> Result<f64> {
        let dtheta = (self.scattering() - other.scattering()).norm();
        Ok(dtheta.max(self.l.distance(&other.l)?).max(self.h.distance(&other.h)?))
    }
}

/// Feeds the output of `g1` into `g2`.
pub fn series_product(g1: &SlhTriple, g2: &SlhTriple) -> Result<SlhTriple> {
    let s2 = g2.scattering();
    let s2l1 = g1.l.scale(s2);
    let l = g2.l.try_add(&s2l1)?;
    let cross = g1.l.adjoint().scale(s2.conj()).try_mul(&g2.l)?.try_sub(&g2.l.adjoint().try_mul(&s2l1)?)?;
    let h = g1.h.try_add(&g2.h)?.try_add(&cross.scale(cplx(0.0, 0.5)))?;
    Ok(SlhTriple {
        theta: g1.theta + g2.theta,
        l,
        h,
    })
}

/// Direct feedback of a node's output into its own input.
///
/// The Hamiltonian is counted once, which equals
/// `series_product(g, (θ, L, 0))`.
pub fn self_feedback(g: &SlhTriple) -> SlhTriple {
    let s = g.scattering();
    let l = &g.l + &g.l.scale(s);
    let kernel = (&g.l.adjoint() * &g.l).scale(cplx(0.0, 0.5) * (s.conj() - s));
    SlhTriple {
        theta: 2.0 * g.theta,
        l,
        h: &g.h + &kernel,
    }
}

/// Squeezed-cavity amplifier parameters, stored through the squeezing
/// parameter `r0`. The cavity rates are kept when known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmplifierParams {
    r0: f64,
    kappa: Option<f64>,
    xi: Option<f64>,
}

impl AmplifierParams {
    pub fn from_kappa_xi(kappa: f64, xi: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Amplifier(format!("kappa must be positive, got {kappa}")));
        }
        if !(xi >= 0.0) {
            return Err(Error::Amplifier(format!("xi must be non-negative, got {xi}")));
        }
        if (kappa - xi) / kappa < AMPLIFIER_SINGULARITY_GUARD {
            return Err(Error::Amplifier(format!(
                "xi = {xi} too close to kappa = {kappa}; (kappa - xi)/kappa must be >= {AMPLIFIER_SINGULARITY_GUARD:e}"
            )));
        }
        Ok(AmplifierParams {
            r0: ((kappa + xi) / (kappa - xi)).ln(),
            kappa: Some(kappa),
            xi: Some(xi),
        })
    }

    /// From the power gain `G0 = cosh²(r0) ≥ 1`.
    pub fn from_gain(g0: f64) -> Result<Self> {
        if !(g0 >= 1.0) || !g0.is_finite() {
            return Err(Error::Amplifier(format!("gain G0 must be >= 1, got {g0}")));
        }
        Self::from_r0(g0.sqrt().acosh())
    }

    pub fn from_r0(r0: f64) -> Result<Self> {
        if !(r0 >= 0.0) || !r0.is_finite() {
            return Err(Error::Amplifier(format!("r0 must be finite and >= 0, got {r0}")));
        }
        Ok(AmplifierParams {
            r0,
            kappa: None,
            xi: None,
        })
    }

    /// Same `r0` with the cavity rate fixed to `kappa` (`ξ = κ tanh(r0/2)`).
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::from_kappa_xi(kappa, kappa * (self.r0 / 2.0).tanh())
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn xi(&self) -> Option<f64> {
        self.xi
    }

    pub fn gain(&self) -> f64 {
        self.r0.cosh().powi(2)
    }

    /// `(κ² + ξ²)² / ((κ − ξ)²(κ + ξ)²)`, when the cavity rates are known.
    pub fn gain_closed_form(&self) -> Option<f64> {
        let (k, x) = (self.kappa?, self.xi?);
        Some((k * k + x * x).powi(2) / ((k - x).powi(2) * (k + x).powi(2)))
    }

    /// `(cosh 2r0 − 1)/2`, evaluated as `sinh² r0` to avoid cancellation.
    pub fn n_bath(&self) -> f64 {
        self.r0.sinh().powi(2)
    }

    /// `−sinh(2r0)/2`.
    pub fn m_bath(&self) -> f64 {
        -self.r0.sinh() * self.r0.cosh()
    }
}

/// Parameters of one amplification-feedback loop around a plant.
#[derive(Clone, Debug)]
pub struct FeedbackLoopSpec {
    pub plant_h: OperatorExpr,
    pub theta: f64,
    pub l: OperatorExpr,
    pub l_f: OperatorExpr,
    pub amp: AmplifierParams,
    pub drive: f64,
    pub phi: f64,
    /// Label used for the amplifier cavity when the full composite is built.
    pub amplifier_mode: String,
}

impl FeedbackLoopSpec {
    pub fn new(
        plant_h: OperatorExpr,
        theta: f64,
        l: OperatorExpr,
        l_f: OperatorExpr,
        amp: AmplifierParams,
        drive: f64,
        phi: f64,
    ) -> Result<Self> {
        let spec = FeedbackLoopSpec {
            plant_h,
            theta,
            l,
            l_f,
            amp,
            drive,
            phi,
            amplifier_mode: "c".to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        self.plant_h.registry()
    }

    pub fn scattering(&self) -> Complex64 {
        phase(self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        let reg = self.registry();
        for op in [&self.l, &self.l_f] {
            if !op.registry().compatible(reg) {
                return Err(Error::RegistryMismatch {
                    left: reg.describe(),
                    right: op.registry().describe(),
                });
            }
        }
        if reg.index_of(&self.amplifier_mode).is_some() {
            return Err(Error::InvalidParameter(format!(
                "amplifier mode `{}` collides with a plant mode",
                self.amplifier_mode
            )));
        }
        check_hermitian(&self.plant_h, TRIPLE_HERMITIAN_TOL, "plant Hamiltonian")?;
        if !(self.drive >= 0.0) || !self.drive.is_finite() {
            return Err(Error::InvalidParameter(format!("drive amplitude must be >= 0, got {}", self.drive)));
        }
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidParameter("loop phases must be finite".into()));
        }
        Ok(())
    }

    /// `J = L − S†L_f`.
    pub fn jump_operator(&self) -> OperatorExpr {
        &self.l - &self.l_f.scale(self.scattering().conj())
    }
}

/// The amplifier cavity `(0, √κ c, (iξ/4)(c†² − c²) + √κ A(e^{iφ}c + c†e^{−iφ}))`.
pub fn amplifier_slh(
    registry: &Arc<ModeRegistry>,
    label: &str,
    amp: &AmplifierParams,
    drive: f64,
    phi: f64,
) -> Result<SlhTriple> {
    let (kappa, xi) = match (amp.kappa(), amp.xi()) {
        (Some(k), Some(x)) => (k, x),
        _ => {
            return Err(Error::Amplifier(
                "cavity rates kappa and xi are required to model the amplifier explicitly".into(),
            ))
        }
    };
    let c = OperatorExpr::annihilator(registry, label)?;
    let cd = c.adjoint();
    let squeeze = (&cd.powi(2) - &c.powi(2)).scale(cplx(0.0, xi / 4.0));
    let drive_term = (&c.scale(phase(phi)) + &cd.scale(phase(-phi))).scale(cplx(kappa.sqrt() * drive, 0.0));
    SlhTriple::new(0.0, c.scale(cplx(kappa.sqrt(), 0.0)), &squeeze + &drive_term)
}

fn loop_registry(spec: &FeedbackLoopSpec, amp_dim: usize) -> Result<Arc<ModeRegistry>> {
    spec.validate()?;
    spec.registry().extended(&spec.amplifier_mode, amp_dim)
}

/// Plant, amplifier and feedback coupling chained by series products:
/// `(θ, L, H) ▹ amplifier ▹ (θ, L_f, 0)`.
pub fn compose_loop_full(spec: &FeedbackLoopSpec, amp_dim: usize) -> Result<SlhTriple> {
    let reg = loop_registry(spec, amp_dim)?;
    let plant = SlhTriple::new(spec.theta, spec.l.embed(&reg)?, spec.plant_h.embed(&reg)?)?;
    let amp = amplifier_slh(&reg, &spec.amplifier_mode, &spec.amp, spec.drive, spec.phi)?;
    let back = SlhTriple::new(spec.theta, spec.l_f.embed(&reg)?, OperatorExpr::zero(&reg))?;
    series_product(&series_product(&plant, &amp)?, &back)
}

/// The composite loop written out term by term, used to cross-check
/// [`compose_loop_full`].
pub fn compose_loop_literal(spec: &FeedbackLoopSpec, amp_dim: usize) -> Result<SlhTriple> {
    let reg = loop_registry(spec, amp_dim)?;
    let s = spec.scattering();
    let l = spec.l.embed(&reg)?;
    let lf = spec.l_f.embed(&reg)?;
    let h = spec.plant_h.embed(&reg)?;
    let amp = amplifier_slh(&reg, &spec.amplifier_mode, &spec.amp, spec.drive, spec.phi)?;
    let kc = amp.l.clone();
    let half_i = cplx(0.0, 0.5);

    let coupling = &lf + &(&kc + &l).scale(s);
    let term1 = (&(&l.adjoint() * &kc) - &(&kc.adjoint() * &l)).scale(half_i);
    let term2 = (&(&(&l.adjoint() + &kc.adjoint()).scale(s.conj()) * &lf)
        - &(&lf.adjoint().scale(s) * &(&l + &kc)))
        .scale(half_i);
    let hamiltonian = &(&(&h + &amp.h) + &term1) + &term2;
    Ok(SlhTriple {
        theta: 2.0 * spec.theta,
        l: coupling,
        h: hamiltonian,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bath {
    Vacuum,
    Squeezed { n: f64, m_re: f64, m_im: f64 },
}

impl Bath {
    pub fn squeezed(n: f64, m: Complex64) -> Result<Self> {
        let bound = n * (n + 1.0);
        if !(n >= 0.0) || m.norm_sqr() > bound + 1e-9 * bound.max(1.0) {
            return Err(Error::UnphysicalBath {
                m_sq: m.norm_sqr(),
                bound,
            });
        }
        Ok(Bath::Squeezed {
            n,
            m_re: m.re,
            m_im: m.im,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DissipationChannel {
    pub op: OperatorExpr,
    pub bath: Bath,
    pub rate: f64,
}

impl DissipationChannel {
    pub fn vacuum(op: OperatorExpr, rate: f64) -> Self {
        DissipationChannel {
            op,
            bath: Bath::Vacuum,
            rate,
        }
    }
}

/// Hamiltonian plus dissipation channels acting on the plant modes.
#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub h: OperatorExpr,
    pub channels: Vec<DissipationChannel>,
}

impl EffectiveModel {
    pub fn closed(h: OperatorExpr) -> Self {
        EffectiveModel {
            h,
            channels: Vec::new(),
        }
    }

    /// Plain SLH node: `−i[H, ρ] + D[L]ρ`.
    pub fn from_triple(g: &SlhTriple) -> Self {
        EffectiveModel {
            h: g.h.clone(),
            channels: vec![DissipationChannel::vacuum(g.l.clone(), 1.0)],
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        self.h.registry()
    }

    pub fn validate(&self) -> Result<()> {
        check_hermitian(&self.h, MODEL_HERMITIAN_TOL, "effective Hamiltonian")?;
        for ch in &self.channels {
            if !ch.op.registry().compatible(self.registry()) {
                return Err(Error::RegistryMismatch {
                    left: self.registry().describe(),
                    right: ch.op.registry().describe(),
                });
            }
            if !(ch.rate > 0.0) || !ch.rate.is_finite() {
                return Err(Error::InvalidParameter(format!("channel rate {} must be positive", ch.rate)));
            }
            if let Bath::Squeezed { n, m_re, m_im } = ch.bath {
                Bath::squeezed(n, cplx(m_re, m_im))?;
            }
        }
        Ok(())
    }

    /// Same model on a registry with equal labels (e.g. other truncations).
    pub fn with_registry(&self, registry: &Arc<ModeRegistry>) -> Result<Self> {
        Ok(EffectiveModel {
            h: self.h.with_registry(registry)?,
            channels: self
                .channels
                .iter()
                .map(|c| {
                    Ok(DissipationChannel {
                        op: c.op.with_registry(registry)?,
                        bath: c.bath,
                        rate: c.rate,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }

    /// Drops channels whose operator vanished identically.
    pub fn prune_empty_channels(mut self) -> Self {
        self.channels.retain(|c| !c.op.is_empty());
        self
    }
}
