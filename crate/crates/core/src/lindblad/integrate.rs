//! Dormand-Prince 5(4) integration of `dρ/dt = 𝓛ρ`.

use num_complex::Complex64;
use serde::Serialize;

use super::state::hermitian_part;
use super::{CMatrix, DensityMatrix, Liouvillian};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct ClipPolicy {
    /// Outputs with a smallest eigenvalue at or above this are left alone.
    pub accept_floor: f64,
    /// Between the two floors the state is clipped and renormalized; below
    /// this the run aborts.
    pub clip_floor: f64,
}

impl Default for ClipPolicy {
    fn default() -> Self {
        ClipPolicy {
            accept_floor: -1e-8,
            clip_floor: -1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    pub clip: ClipPolicy,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            atol: 1e-10,
            rtol: 1e-8,
            max_steps: 5_000_000,
            initial_step: None,
            clip: ClipPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub clipped_outputs: usize,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_deviation: f64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        let fresh = self.accepted == 0 && self.rejected == 0;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evaluations += other.rhs_evaluations;
        self.h_min = if fresh { other.h_min } else { self.h_min.min(other.h_min) };
        self.h_max = self.h_max.max(other.h_max);
        self.clipped_outputs += other.clipped_outputs;
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.min_eigenvalue = if fresh {
            other.min_eigenvalue
        } else {
            self.min_eigenvalue.min(other.min_eigenvalue)
        };
        self.max_hermiticity_deviation = self.max_hermiticity_deviation.max(other.max_hermiticity_deviation);
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub stats: IntegratorStats,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

struct Stepper<'a> {
    liou: &'a Liouvillian,
    opts: IntegratorOptions,
    k: Vec<CMatrix>,
    tmp: CMatrix,
    scratch: CMatrix,
    stats: IntegratorStats,
}

impl<'a> Stepper<'a> {
    fn rhs(&mut self, y: &CMatrix, slot: usize) {
        self.liou.apply_into(y, &mut self.k[slot], &mut self.scratch);
        self.stats.rhs_evaluations += 1;
    }

    fn scaled_norm(&self, v: &CMatrix, y: &CMatrix) -> f64 {
        let n = v.len() as f64;
        let s: f64 = v
            .iter()
            .zip(y.iter())
            .map(|(e, yv)| {
                let sc = self.opts.atol + self.opts.rtol * yv.norm();
                (e.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    fn initial_step(&mut self, y: &CMatrix) -> f64 {
        let d0 = self.scaled_norm(y, y);
        let d1 = self.scaled_norm(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let mut y1 = y.clone();
        axpy(&mut y1, h0, &self.k[0]);
        self.rhs(&y1, 1);
        let diff = &self.k[1] - &self.k[0];
        let d2 = self.scaled_norm(&diff, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Advances `y` from `t` to `t_end`, returning the suggested next step.
    fn advance(&mut self, y: &mut CMatrix, t: &mut f64, t_end: f64, mut h: f64) -> Result<f64> {
        let mut y_new = y.clone();
        let mut err_vec = y.clone();
        let mut last_rejected = false;
        while *t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.opts.max_steps {
                return Err(Error::TooManySteps(self.opts.max_steps));
            }
            let remaining = t_end - *t;
            let clamped = h >= remaining;
            let step = if clamped { remaining } else { h };
            if step < 1e-14 * t.abs().max(1.0) && !clamped {
                return Err(Error::StepUnderflow { t: *t, h: step });
            }
            for s in 1..7 {
                self.tmp.copy_from(y);
                for (j, &a) in A[s].iter().enumerate().take(s) {
                    if a != 0.0 {
                        axpy(&mut self.tmp, step * a, &self.k[j]);
                    }
                }
                let tmp = std::mem::replace(&mut self.tmp, CMatrix::zeros(0, 0));
                self.rhs(&tmp, s);
                self.tmp = tmp;
            }
            // Stage 7 input is the 5th-order solution.
            y_new.copy_from(&self.tmp);
            err_vec.fill(re(0.0));
            for (j, &e) in E.iter().enumerate() {
                if e != 0.0 {
                    axpy(&mut err_vec, step * e, &self.k[j]);
                }
            }
            let n = y.len() as f64;
            let err = (y
                .iter()
                .zip(y_new.iter())
                .zip(err_vec.iter())
                .map(|((a, b), e)| {
                    let sc = self.opts.atol + self.opts.rtol * a.norm().max(b.norm());
                    (e.norm() / sc).powi(2)
                })
                .sum::<f64>()
                / n)
                .sqrt();
            if err <= 1.0 {
                *t = if clamped { t_end } else { *t + step };
                std::mem::swap(y, &mut y_new);
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                self.stats.h_min = if self.stats.accepted == 1 {
                    step
                } else {
                    self.stats.h_min.min(step)
                };
                self.stats.h_max = self.stats.h_max.max(step);
                let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 5.0 });
                // A step shortened to hit the grid says nothing about the
                // admissible size, so keep the previous proposal.
                h = if clamped { h.max(step * fac) } else { step * fac };
                last_rejected = false;
            } else {
                self.stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                last_rejected = true;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t: *t, h });
                }
            }
        }
        Ok(h)
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if !(times[0] >= 0.0) {
        return Err(Error::InvalidParameter("time grid must start at or after 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Evolves an arbitrary operator `x0` (not necessarily a state) and returns
/// `x(t)` at each grid time.
pub fn propagate(
    liou: &Liouvillian,
    x0: &CMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<(Vec<CMatrix>, IntegratorStats)> {
    check_grid(times)?;
    let n = liou.dim();
    if x0.nrows() != n || x0.ncols() != n {
        return Err(Error::InvalidState("initial matrix does not match the Liouvillian".into()));
    }
    let mut st = Stepper {
        liou,
        opts: *opts,
        k: vec![CMatrix::zeros(n, n); 7],
        tmp: CMatrix::zeros(n, n),
        scratch: CMatrix::zeros(n, n),
        stats: IntegratorStats::default(),
    };
    let mut y = x0.clone();
    st.rhs(&y, 0);
    let mut h = match opts.initial_step {
        Some(h) => h,
        None => st.initial_step(&y),
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &tk in times {
        if tk > t {
            h = st.advance(&mut y, &mut t, tk, h)?;
        }
        out.push(y.clone());
    }
    Ok((out, st.stats))
}

/// Evolves a density matrix, validating every output.
///
/// Outputs are projected onto their Hermitian part; the largest deviation
/// removed is kept in the stats.
///
/// Outputs whose smallest eigenvalue falls between the policy floors are
/// clipped and renormalized (logged); deeper negativity is an error. The
/// internal integration state itself is never modified.
pub fn integrate(
    liou: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    rho0.validate()?;
    let (raw, mut stats) = propagate(liou, rho0.matrix(), times, opts)?;
    stats.min_eigenvalue = f64::INFINITY;
    let mut states = Vec::with_capacity(raw.len());
    for (m, &t) in raw.into_iter().zip(times) {
        let rho = DensityMatrix::from_matrix_unchecked(liou.registry(), m)?;
        let drift = (rho.trace() - re(1.0)).norm();
        stats.max_trace_drift = stats.max_trace_drift.max(drift);
        stats.max_hermiticity_deviation = stats.max_hermiticity_deviation.max(rho.hermiticity_deviation());
        // The anti-Hermitian part is integration error only; it is reported above, then dropped.
        let rho = DensityMatrix::from_matrix_unchecked(liou.registry(), hermitian_part(rho.matrix()))?;
        let min = rho.min_eigenvalue();
        stats.min_eigenvalue = stats.min_eigenvalue.min(min);
        let rho = if min >= opts.clip.accept_floor {
            rho
        } else if min >= opts.clip.clip_floor {
            log::info!("t = {t}: clipping eigenvalue {min:e} and renormalizing");
            stats.clipped_outputs += 1;
            rho.clip_negative()
        } else {
            return Err(Error::NegativeEigenvalue(min));
        };
        rho.validate()?;
        states.push(rho);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        stats,
    })
}

/// `y += a·x`.
fn axpy(y: &mut CMatrix, a: f64, x: &CMatrix) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += xi * a;
    }
}
