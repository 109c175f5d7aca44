//! Numerical check of amplifier elimination: the explicit plant-plus-amplifier
//! composite is integrated, the amplifier traced out, and the result compared
//! with the eliminated single-mode model.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{integrate, CMatrix, DensityMatrix, IntegratorOptions, IntegratorStats, Liouvillian};
use crate::slh::{compose_loop_full, eliminate, EffectiveModel, EliminationScheme, FeedbackLoopSpec};

/// Amplifier truncation used when none is given.
pub const DEFAULT_AMPLIFIER_DIM: usize = 20;

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub amp_dim: usize,
    pub leak_threshold: f64,
    pub scheme: EliminationScheme,
    pub integrator: IntegratorOptions,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            amp_dim: DEFAULT_AMPLIFIER_DIM,
            leak_threshold: crate::lindblad::DEFAULT_LEAK_THRESHOLD,
            scheme: EliminationScheme::Printed,
            integrator: IntegratorOptions::default(),
        }
    }
}

fn check_leaks(states: &[DensityMatrix], threshold: f64) -> Result<()> {
    for rho in states {
        if let Some(l) = rho.leak_report(threshold).into_iter().find(|l| l.exceeded) {
            return Err(Error::TruncationLeak {
                mode: l.mode,
                population: l.population,
                threshold,
            });
        }
    }
    Ok(())
}

/// Integrates the composite loop from `initial ⊗ |0⟩⟨0|` and returns the
/// plant-reduced states at each time.
pub fn full_loop_simulate(
    spec: &FeedbackLoopSpec,
    initial: &DensityMatrix,
    times: &[f64],
    opts: &OracleOptions,
) -> Result<(Vec<DensityMatrix>, IntegratorStats)> {
    let plant = spec.registry();
    if !initial.registry().compatible(plant) || initial.dim() != plant.total_dim() {
        return Err(Error::InvalidState("initial state does not live on the plant registry".into()));
    }
    let triple = compose_loop_full(spec, opts.amp_dim)?;
    let full_reg = triple.registry().clone();
    let model = EffectiveModel::from_triple(&triple);
    let liou = Liouvillian::build(&model, &full_reg)?;
    let mut vac = CMatrix::zeros(opts.amp_dim, opts.amp_dim);
    vac[(0, 0)] = num_complex::Complex64::new(1.0, 0.0);
    let rho0 = DensityMatrix::from_matrix(&full_reg, initial.matrix().kronecker(&vac))?;
    let traj = integrate(&liou, &rho0, times, &opts.integrator)?;
    check_leaks(&traj.states, opts.leak_threshold)?;
    let labels: Vec<&str> = plant.modes().iter().map(|m| m.label.as_str()).collect();
    let reduced = traj
        .states
        .iter()
        .map(|s| s.partial_trace(&labels))
        .collect::<Result<Vec<_>>>()?;
    Ok((reduced, traj.stats))
}

/// Integrates the eliminated model of `spec` under the chosen scheme.
pub fn eliminated_simulate(
    spec: &FeedbackLoopSpec,
    initial: &DensityMatrix,
    times: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<DensityMatrix>> {
    let model = eliminate(spec, opts.scheme, false)?;
    let liou = Liouvillian::build(&model, spec.registry())?;
    let traj = integrate(&liou, initial, times, &opts.integrator)?;
    check_leaks(&traj.states, opts.leak_threshold)?;
    Ok(traj.states)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Monotone,
    NonMonotone,
    Insufficient,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Monotone => "monotone",
            Verdict::NonMonotone => "non-monotone",
            Verdict::Insufficient => "insufficient",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRow {
    pub ratio: f64,
    pub kappa: f64,
    pub trace_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorTable {
    pub scheme: &'static str,
    pub t_probe: f64,
    pub rows: Vec<ErrorRow>,
    pub verdict: Verdict,
}

/// Trace distance between composite and eliminated evolutions at `t_probe`,
/// with `κ = ratio · gamma` and `r0` held fixed. Points run in parallel.
pub fn elimination_error(
    spec: &FeedbackLoopSpec,
    initial: &DensityMatrix,
    gamma: f64,
    ratios: &[f64],
    t_probe: f64,
    opts: &OracleOptions,
) -> Result<ErrorTable> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("reference rate must be > 0, got {gamma}")));
    }
    if ratios.windows(2).any(|w| !(w[1] > w[0])) || ratios.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("kappa ratios must be positive and increasing".into()));
    }
    let times = [t_probe];
    // Invariant under κ at fixed r0, so one reference serves every row.
    let reference = eliminated_simulate(spec, initial, &times, opts)?.remove(0);
    let rows = ratios
        .par_iter()
        .map(|&ratio| {
            let kappa = ratio * gamma;
            let mut s = spec.clone();
            s.amp = spec.amp.with_kappa(kappa)?;
            let (states, _) = full_loop_simulate(&s, initial, &times, opts)?;
            Ok(ErrorRow {
                ratio,
                kappa,
                trace_distance: states[0].trace_distance(&reference)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = if rows.len() < 2 {
        Verdict::Insufficient
    } else if rows.windows(2).all(|w| w[1].trace_distance < w[0].trace_distance) {
        Verdict::Monotone
    } else {
        Verdict::NonMonotone
    };
    Ok(ErrorTable {
        scheme: opts.scheme.name(),
        t_probe,
        rows,
        verdict,
    })
}
