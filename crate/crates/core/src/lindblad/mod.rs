//! Truncated-Fock realization of effective models: operator matrices,
//! density matrices, Liouvillians, time evolution and steady states.

mod integrate;
mod liouvillian;
mod sparse;
mod state;
mod steady;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use integrate::{integrate, propagate, ClipPolicy, IntegratorOptions, IntegratorStats, Trajectory};
pub use liouvillian::{squeezed_dissipator, vacuum_dissipator, Liouvillian, DEFAULT_SUPEROPERATOR_CAP};
pub use sparse::SparseMatrix;
pub use state::{hermitian_eigenvalues, trace_distance, DensityMatrix, LeakReport, DEFAULT_LEAK_THRESHOLD};
pub use steady::{steady_state, SteadyStateOptions, DENSE_STEADY_STATE_MAX_DIM};

use crate::algebra::{ModeRegistry, OperatorExpr};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Fock-basis matrix of a normal-ordered polynomial. Modes are laid out in
/// registry order with the last mode varying fastest.
///
/// Each monomial is applied as the product of truncated ladder matrices
/// `(a†)^p a^q`, so levels pushed past the truncation are dropped.
pub fn to_matrix(expr: &OperatorExpr, registry: &ModeRegistry) -> Result<CMatrix> {
    if !expr.registry().compatible(registry) {
        return Err(Error::RegistryMismatch {
            left: expr.registry().describe(),
            right: registry.describe(),
        });
    }
    let dims = registry.dims();
    let dim = registry.total_dim();
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut out = CMatrix::zeros(dim, dim);
    let mut levels = vec![0usize; dims.len()];
    for col in 0..dim {
        let mut rem = col;
        for k in 0..dims.len() {
            levels[k] = rem / strides[k];
            rem %= strides[k];
        }
        'terms: for (mono, coeff) in expr.terms() {
            let mut amp = 1.0f64;
            let mut row = 0usize;
            for (k, &(p, q)) in mono.powers().iter().enumerate() {
                let n = levels[k];
                let (p, q) = (p as usize, q as usize);
                if q > n {
                    continue 'terms;
                }
                let mid = n - q;
                let top = mid + p;
                if top >= dims[k] {
                    continue 'terms;
                }
                amp *= ((mid + 1)..=n).map(|m| m as f64).product::<f64>().sqrt();
                amp *= ((mid + 1)..=top).map(|m| m as f64).product::<f64>().sqrt();
                row += top * strides[k];
            }
            out[(row, col)] += coeff * amp;
        }
    }
    Ok(out)
}

/// Annihilation matrix of one mode in the full tensor-product space.
pub fn annihilation_matrix(registry: &std::sync::Arc<ModeRegistry>, label: &str) -> Result<CMatrix> {
    to_matrix(&OperatorExpr::annihilator(registry, label)?, registry)
}
