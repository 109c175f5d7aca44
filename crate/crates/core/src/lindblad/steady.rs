//! Stationary states of a Liouvillian.
//!
//! Small problems factor the dense superoperator with full pivoting, count
//! the numerically zero pivots to get the kernel dimension, and read the null
//! vector off the triangular factor. Larger problems solve the bordered
//! system `𝓛x + tr(x) R = R` (with `R = I/d`) by restarted GMRES; that map is
//! invertible exactly when the kernel is one-dimensional.

use nalgebra::FullPivLU;
use num_complex::Complex64;

use super::{CMatrix, DensityMatrix, Liouvillian};
use crate::error::{Error, Result};

pub const DENSE_STEADY_STATE_MAX_DIM: usize = 40;

#[derive(Clone, Copy, Debug)]
pub struct SteadyStateOptions {
    /// Pivots below this fraction of the largest count as zero.
    pub pivot_tolerance: f64,
    pub gmres_tolerance: f64,
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
    /// Required `‖𝓛ρ‖ / ‖𝓛‖`.
    pub residual_tolerance: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            pivot_tolerance: 1e-11,
            gmres_tolerance: 1e-13,
            gmres_restart: 80,
            gmres_max_iterations: 20_000,
            residual_tolerance: 1e-9,
        }
    }
}

pub fn steady_state(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let d = liou.dim();
    let raw = if d <= DENSE_STEADY_STATE_MAX_DIM {
        dense_kernel(liou, opts)?
    } else {
        bordered_gmres(liou, opts)?
    };
    finish(liou, raw, opts)
}

fn finish(liou: &Liouvillian, m: CMatrix, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    let tr = m.trace();
    if tr.norm() == 0.0 {
        return Err(Error::Solver("null vector has zero trace".into()));
    }
    let m = &m / tr;
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let residual = liou.apply(&m).norm();
    let bound = liou.norm_bound().max(f64::MIN_POSITIVE);
    if residual > opts.residual_tolerance * bound {
        return Err(Error::Solver(format!(
            "steady-state residual {residual:e} exceeds {:e}",
            opts.residual_tolerance * bound
        )));
    }
    let rho = DensityMatrix::from_matrix_unchecked(liou.registry(), m)?;
    let min = rho.min_eigenvalue();
    let rho = if min < -1e-7 {
        return Err(Error::NegativeEigenvalue(min));
    } else if min < -1e-8 {
        log::info!("steady state: clipping eigenvalue {min:e}");
        rho.clip_negative()
    } else {
        rho
    };
    rho.validate()?;
    Ok(rho)
}

fn dense_kernel(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<CMatrix> {
    let d = liou.dim();
    let n = d * d;
    let lu = FullPivLU::new(liou.to_dense()?);
    let u = lu.u();
    let largest = (0..n).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
    let zero_pivots = (0..n)
        .filter(|&i| u[(i, i)].norm() <= opts.pivot_tolerance * largest)
        .count();
    if zero_pivots > 1 {
        return Err(Error::DegenerateKernel(zero_pivots));
    }
    // Full pivoting pushes the vanishing pivot to the last position.
    let mut y = nalgebra::DVector::<Complex64>::zeros(n);
    y[n - 1] = Complex64::new(1.0, 0.0);
    for i in (0..n - 1).rev() {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in i + 1..n {
            acc += u[(i, j)] * y[j];
        }
        y[i] = -acc / u[(i, i)];
    }
    lu.q().inv_permute_rows(&mut y);
    Ok(CMatrix::from_column_slice(d, d, y.as_slice()))
}

fn bordered_gmres(liou: &Liouvillian, opts: &SteadyStateOptions) -> Result<CMatrix> {
    let d = liou.dim();
    let r = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
    let mut out = CMatrix::zeros(d, d);
    let mut scratch = CMatrix::zeros(d, d);
    let mut op = |x: &[Complex64]| -> Vec<Complex64> {
        let xm = CMatrix::from_column_slice(d, d, x);
        liou.apply_into(&xm, &mut out, &mut scratch);
        let tr = xm.trace();
        let mut y = out.clone();
        y += &r * tr;
        y.as_slice().to_vec()
    };
    let x = gmres(&mut op, r.as_slice(), r.as_slice(), opts)?;
    Ok(CMatrix::from_column_slice(d, d, &x))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES with modified Gram-Schmidt and complex Givens rotations.
fn gmres(
    op: &mut dyn FnMut(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    x0: &[Complex64],
    opts: &SteadyStateOptions,
) -> Result<Vec<Complex64>> {
    let m = opts.gmres_restart.min(b.len()).max(1);
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = x0.to_vec();
    let mut iterations = 0;
    loop {
        let ax = op(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= opts.gmres_tolerance * bnorm {
            return Ok(x);
        }
        if iterations >= opts.gmres_max_iterations {
            return Err(Error::Solver(format!(
                "GMRES did not converge in {iterations} iterations (relative residual {:e})",
                beta / bnorm
            )));
        }
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![Complex64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![Complex64::new(0.0, 0.0); m];
        let mut g = vec![Complex64::new(0.0, 0.0); m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for j in 0..m {
            iterations += 1;
            let mut w = op(&v[j]);
            for i in 0..=j {
                let hij = dot(&v[i], &w);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let wn = norm(&w);
            h[j + 1][j] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let t = h[i][j] * cs[i] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + h[i + 1][j] * cs[i];
                h[i][j] = t;
            }
            let a = h[j][j];
            let bb = h[j + 1][j];
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = Complex64::new(1.0, 0.0);
                h[j][j] = bb;
            } else {
                let phase = a / a.norm();
                cs[j] = a.norm() / rho;
                sn[j] = phase * bb.conj() / rho;
                h[j][j] = phase * rho;
            }
            h[j + 1][j] = Complex64::new(0.0, 0.0);
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            if g[j + 1].norm() <= opts.gmres_tolerance * bnorm || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / wn).collect());
        }
        let mut y = vec![Complex64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for jj in i + 1..k_used {
                acc -= h[i][jj] * y[jj];
            }
            y[i] = acc / h[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&v[i]) {
                *xk += yi * vk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ModeRegistry, OperatorExpr};
    use crate::slh::{DissipationChannel, EffectiveModel};

    fn driven_cavity(dim: usize, drive: f64) -> (Liouvillian, Complex64) {
        let r = ModeRegistry::new([("a", dim)]).unwrap();
        let a = OperatorExpr::annihilator(&r, "a").unwrap();
        let gamma = 2.0;
        let omega = 0.5;
        let h = &OperatorExpr::number(&r, "a").unwrap().scale(Complex64::new(omega, 0.0))
            + &(&a + &a.adjoint()).scale(Complex64::new(drive, 0.0));
        let model = EffectiveModel {
            h,
            channels: vec![DissipationChannel::vacuum(a.scale(Complex64::new(f64::sqrt(gamma), 0.0)), 1.0)],
        };
        // dα/dt = −iωα − iF − γα/2.
        let alpha = Complex64::new(0.0, -drive) / Complex64::new(gamma / 2.0, omega);
        (Liouvillian::build(&model, &r).unwrap(), alpha)
    }

    #[test]
    fn damped_cavity_relaxes_to_vacuum() {
        let (liou, _) = driven_cavity(6, 0.0);
        let rho = steady_state(&liou, &SteadyStateOptions::default()).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_and_iterative_agree_on_coherent_state() {
        for dim in [20, 45] {
            let (liou, alpha) = driven_cavity(dim, 0.8);
            let rho = steady_state(&liou, &SteadyStateOptions::default()).unwrap();
            let r = liou.registry().clone();
            let expected = DensityMatrix::coherent(&r, &[alpha]).unwrap();
            assert!(rho.trace_distance(&expected).unwrap() < 1e-8, "dim {dim}");
        }
    }

    #[test]
    fn closed_system_kernel_is_degenerate() {
        let r = ModeRegistry::new([("a", 4)]).unwrap();
        let liou = Liouvillian::build(&EffectiveModel::closed(OperatorExpr::number(&r, "a").unwrap()), &r).unwrap();
        assert!(matches!(
            steady_state(&liou, &SteadyStateOptions::default()),
            Err(Error::DegenerateKernel(4))
        ));
    }
}
