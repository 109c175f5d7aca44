//! Adiabatic elimination of the amplifier cavity.
//!
//! Two schemes are provided. `Printed` reproduces the published reduced
//! master equation term by term (squeezed plus vacuum channel on
//! `J = L − S†L_f`). `Cascaded` treats the eliminated cavity as a static
//! Bogoliubov element `b → cosh(r0) S b − sinh(r0) b† S†` between the `L` and
//! `L_f` couplings, which gives one vacuum channel on
//! `K = S*L + sinh(r0) L_f† − cosh(r0) S*² L_f`.

use num_complex::Complex64;

use super::{
    check_hermitian, cplx, Bath, DissipationChannel, EffectiveModel, FeedbackLoopSpec, MODEL_HERMITIAN_TOL,
};
use crate::algebra::OperatorExpr;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EliminationScheme {
    #[default]
    Printed,
    Cascaded,
}

impl EliminationScheme {
    pub fn name(&self) -> &'static str {
        match self {
            EliminationScheme::Printed => "printed",
            EliminationScheme::Cascaded => "cascaded",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "printed" => Some(EliminationScheme::Printed),
            "cascaded" => Some(EliminationScheme::Cascaded),
            _ => None,
        }
    }
}

fn finish(h: OperatorExpr, channels: Vec<DissipationChannel>) -> Result<EffectiveModel> {
    check_hermitian(&h, MODEL_HERMITIAN_TOL, "eliminated Hamiltonian")?;
    let model = EffectiveModel {
        h: h.hermitian_part(),
        channels,
    };
    model.validate()?;
    Ok(model.prune_empty_channels())
}

/// `(i/2)(L_f† S L − L† S† L_f)`.
fn exchange_term(spec: &FeedbackLoopSpec) -> OperatorExpr {
    let s = spec.scattering();
    let fwd = &spec.l_f.adjoint().scale(s) * &spec.l;
    let back = &spec.l.adjoint().scale(s.conj()) * &spec.l_f;
    (&fwd - &back).scale(cplx(0.0, 0.5))
}

/// `−(i/4)(L† − L_f†S)(L† + L_f†S) + h.c.`
fn squeeze_term(spec: &FeedbackLoopSpec) -> OperatorExpr {
    let s = spec.scattering();
    let ld = spec.l.adjoint();
    let lfs = spec.l_f.adjoint().scale(s);
    let x = (&(&ld - &lfs) * &(&ld + &lfs)).scale(cplx(0.0, -0.25));
    &x + &x.adjoint()
}

/// Reduced model with the published coefficients.
pub fn eliminate_amplifier(spec: &FeedbackLoopSpec) -> Result<EffectiveModel> {
    spec.validate()?;
    let s = spec.scattering();
    let (ch, sh) = (spec.amp.r0().cosh(), spec.amp.r0().sinh());

    let sum_l = &spec.l + &spec.l_f.scale(s.conj());
    let sum_ld = &spec.l.adjoint() + &spec.l_f.adjoint().scale(s);
    let y = (&sum_l.scale(cplx(ch + 1.0, 0.0)) + &sum_ld.scale(cplx(sh, 0.0)))
        .scale(cplx(0.0, -0.5) * spec.drive * Complex64::from_polar(1.0, spec.phi));

    let h = &(&(&spec.plant_h + &exchange_term(spec).scale(cplx(ch, 0.0))) + &squeeze_term(spec).scale(cplx(sh, 0.0)))
        + &(&y + &y.adjoint());

    let j = spec.jump_operator();
    let squeezed = Bath::squeezed(spec.amp.n_bath(), cplx(spec.amp.m_bath(), 0.0))?;
    finish(
        h,
        vec![
            DissipationChannel {
                op: j.clone(),
                bath: squeezed,
                rate: 1.0,
            },
            DissipationChannel::vacuum(j, 1.0),
        ],
    )
}

/// Large-gain form with the published `√G0` and `A cos φ` prefactors.
pub fn high_gain_limit(spec: &FeedbackLoopSpec) -> Result<EffectiveModel> {
    spec.validate()?;
    let s = spec.scattering();
    let g0 = spec.amp.gain();
    let root = g0.sqrt();
    let drive_ops = &(&(&spec.l + &spec.l.adjoint()) + &spec.l_f.scale(s.conj())) + &spec.l_f.adjoint().scale(s);
    let h = &(&spec.plant_h + &feedback_nonlinear_hamiltonian(spec)?)
        + &drive_ops.scale(cplx(root * spec.drive * spec.phi.cos(), 0.0));
    let op = (&(&(&spec.l - &spec.l.adjoint()) + &spec.l_f.adjoint().scale(s)) - &spec.l_f.scale(s.conj()))
        .scale(cplx(0.5, 0.0));
    finish(h, vec![DissipationChannel::vacuum(op, g0)])
}

/// `√G0 [ (i/2)(L_f†SL − L†S†L_f) − (i/4)(L† − L_f†S)(L† + L_f†S) + h.c. ]`.
pub fn feedback_nonlinear_hamiltonian(spec: &FeedbackLoopSpec) -> Result<OperatorExpr> {
    spec.validate()?;
    let root = spec.amp.gain().sqrt();
    Ok((&exchange_term(spec) + &squeeze_term(spec)).scale(cplx(root, 0.0)))
}

fn cascaded_with(spec: &FeedbackLoopSpec, ch: f64, sh: f64, ch1: f64) -> Result<EffectiveModel> {
    spec.validate()?;
    let s = spec.scattering();
    let k1 = spec.l.scale(s.conj());
    let k3 = &spec.l_f.adjoint().scale(cplx(sh, 0.0)) - &spec.l_f.scale(s.conj() * s.conj() * ch);
    let exchange = (&(&k1.adjoint() * &k3) - &(&k3.adjoint() * &k1)).scale(cplx(0.0, 0.5));

    let d = cplx(0.0, spec.drive) * Complex64::from_polar(1.0, -spec.phi);
    let big_d = s * (d * ch1 + d.conj() * sh);
    let drive = (&spec.l_f.adjoint().scale(big_d) - &spec.l_f.scale(big_d.conj())).scale(cplx(0.0, 1.0));

    let h = &(&spec.plant_h + &exchange) + &drive;
    finish(h, vec![DissipationChannel::vacuum(&k1 + &k3, 1.0)])
}

/// Reduced model from the cascaded Bogoliubov picture.
pub fn eliminate_amplifier_cascaded(spec: &FeedbackLoopSpec) -> Result<EffectiveModel> {
    let r0 = spec.amp.r0();
    cascaded_with(spec, r0.cosh(), r0.sinh(), 1.0 + r0.cosh())
}

/// Cascaded model with `cosh r0`, `sinh r0` and `1 + cosh r0` all set to `√G0`.
pub fn high_gain_cascaded(spec: &FeedbackLoopSpec) -> Result<EffectiveModel> {
    let root = spec.amp.gain().sqrt();
    cascaded_with(spec, root, root, root)
}

pub fn eliminate(spec: &FeedbackLoopSpec, scheme: EliminationScheme, high_gain: bool) -> Result<EffectiveModel> {
    match (scheme, high_gain) {
        (EliminationScheme::Printed, false) => eliminate_amplifier(spec),
        (EliminationScheme::Printed, true) => high_gain_limit(spec),
        (EliminationScheme::Cascaded, false) => eliminate_amplifier_cascaded(spec),
        (EliminationScheme::Cascaded, true) => high_gain_cascaded(spec),
    }
}

/// Several loops hanging off one plant: the plant Hamiltonian is counted once,
/// each loop adds its feedback terms and channels.
pub fn combine_loops(
    plant_h: &OperatorExpr,
    loops: &[FeedbackLoopSpec],
    scheme: EliminationScheme,
    high_gain: bool,
) -> Result<EffectiveModel> {
    let mut h = plant_h.clone();
    let mut channels = Vec::new();
    for spec in loops {
        let mut bare = spec.clone();
        bare.plant_h = OperatorExpr::zero(plant_h.registry());
        let m = eliminate(&bare, scheme, high_gain)?;
        h = h.try_add(&m.h)?;
        channels.extend(m.channels);
    }
    finish(h, channels)
}

/// Removes the linear-in-(a, a†) part of the Hamiltonian, as a classical
/// counter-drive would.
pub fn compensate_linear(model: &EffectiveModel) -> EffectiveModel {
    EffectiveModel {
        h: model.h.without_linear_part(),
        channels: model.channels.clone(),
    }
}
