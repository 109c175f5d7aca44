use std::sync::Arc;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::{to_matrix, CMatrix};
use crate::algebra::{ModeRegistry, OperatorExpr};
use crate::error::{Error, Result};

pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-6;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const EIGEN_FLOOR: f64 = -1e-8;

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(m)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Half the sum of absolute eigenvalues of `a − b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakReport {
    pub mode: String,
    /// Population in the two highest retained Fock levels.
    pub population: f64,
    pub threshold: f64,
    pub exceeded: bool,
}

/// Density matrix over the modes of a registry.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    registry: Arc<ModeRegistry>,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(registry: &Arc<ModeRegistry>, m: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(registry, m)?;
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_matrix_unchecked(registry: &Arc<ModeRegistry>, m: CMatrix) -> Result<Self> {
        let dim = registry.total_dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, registry dimension is {dim}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(DensityMatrix {
            registry: Arc::clone(registry),
            m,
        })
    }

    /// `|ψ⟩⟨ψ|` with `ψ` normalized.
    pub fn pure(registry: &Arc<ModeRegistry>, psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        Self::from_matrix_unchecked(registry, &v * v.adjoint())
    }

    pub fn vacuum(registry: &Arc<ModeRegistry>) -> Self {
        let levels = vec![0; registry.len()];
        Self::fock(registry, &levels).expect("vacuum fits every truncation")
    }

    /// Product Fock state `|n_1, n_2, …⟩`.
    pub fn fock(registry: &Arc<ModeRegistry>, levels: &[usize]) -> Result<Self> {
        if levels.len() != registry.len() {
            return Err(Error::InvalidState("one Fock level per mode required".into()));
        }
        let mut idx = 0;
        for (mode, &n) in registry.modes().iter().zip(levels) {
            if n >= mode.dim {
                return Err(Error::InvalidState(format!(
                    "level {n} outside truncation {} of mode `{}`",
                    mode.dim, mode.label
                )));
            }
            idx = idx * mode.dim + n;
        }
        let mut psi = DVector::zeros(registry.total_dim());
        psi[idx] = Complex64::new(1.0, 0.0);
        Self::pure(registry, &psi)
    }

    /// Product of truncated, renormalized coherent states.
    pub fn coherent(registry: &Arc<ModeRegistry>, alphas: &[Complex64]) -> Result<Self> {
        if alphas.len() != registry.len() {
            return Err(Error::InvalidState("one amplitude per mode required".into()));
        }
        let factors: Vec<DVector<Complex64>> = registry
            .modes()
            .iter()
            .zip(alphas)
            .map(|(mode, &alpha)| {
                let mut v = DVector::zeros(mode.dim);
                let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
                for n in 0..mode.dim {
                    v[n] = amp;
                    amp = amp * alpha / ((n + 1) as f64).sqrt();
                }
                let norm = v.norm();
                v / Complex64::new(norm, 0.0)
            })
            .collect();
        Self::pure(registry, &kron_all(&factors))
    }

    /// Product of thermal states with the given mean occupations.
    pub fn thermal(registry: &Arc<ModeRegistry>, nbars: &[f64]) -> Result<Self> {
        if nbars.len() != registry.len() {
            return Err(Error::InvalidState("one occupation per mode required".into()));
        }
        let mut m = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for (mode, &nbar) in registry.modes().iter().zip(nbars) {
            if !(nbar >= 0.0) {
                return Err(Error::InvalidState(format!("thermal occupation {nbar} < 0")));
            }
            let q = nbar / (nbar + 1.0);
            let weights: Vec<f64> = (0..mode.dim).map(|n| q.powi(n as i32)).collect();
            let total: f64 = weights.iter().sum();
            let d = CMatrix::from_diagonal(&DVector::from_iterator(
                mode.dim,
                weights.iter().map(|w| Complex64::new(w / total, 0.0)),
            ));
            m = m.kronecker(&d);
        }
        Self::from_matrix_unchecked(registry, m)
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// `tr(O ρ)`.
    pub fn expect(&self, op: &CMatrix) -> Complex64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += op[(i, k)] * self.m[(k, i)];
            }
        }
        acc
    }

    pub fn expect_expr(&self, op: &OperatorExpr) -> Result<Complex64> {
        Ok(self.expect(&to_matrix(op, &self.registry)?))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.m - self.m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_deviation();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < EIGEN_FLOOR {
            return Err(Error::NegativeEigenvalue(min));
        }
        Ok(())
    }

    /// Zeroes negative eigenvalues and renormalizes the trace.
    pub fn clip_negative(&self) -> Self {
        let eig = SymmetricEigen::new(hermitian_part(&self.m));
        let vals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = vals.iter().sum();
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|v| Complex64::new(v / total, 0.0)),
        ));
        let m = &eig.eigenvectors * d * eig.eigenvectors.adjoint();
        DensityMatrix {
            registry: Arc::clone(&self.registry),
            m: hermitian_part(&m),
        }
    }

    /// Reduced state on the listed modes (kept in registry order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let reg = &self.registry;
        let mut kept = vec![false; reg.len()];
        for label in keep {
            kept[reg.require(label)?] = true;
        }
        let dims = reg.dims();
        let reduced = ModeRegistry::from_modes(
            reg.modes()
                .iter()
                .zip(&kept)
                .filter(|(_, &k)| k)
                .map(|(m, _)| m.clone())
                .collect(),
        )?;
        let n = self.dim();
        let split = |mut idx: usize| -> (usize, usize) {
            // (kept index, traced index)
            let (mut ki, mut ti, mut kstride, mut tstride) = (0, 0, 1, 1);
            for k in (0..dims.len()).rev() {
                let digit = idx % dims[k];
                idx /= dims[k];
                if kept[k] {
                    ki += digit * kstride;
                    kstride *= dims[k];
                } else {
                    ti += digit * tstride;
                    tstride *= dims[k];
                }
            }
            (ki, ti)
        };
        let parts: Vec<(usize, usize)> = (0..n).map(split).collect();
        let rd = reduced.total_dim();
        let mut out = CMatrix::zeros(rd, rd);
        for j in 0..n {
            let (kj, tj) = parts[j];
            for i in 0..n {
                let (ki, ti) = parts[i];
                if ti == tj {
                    out[(ki, kj)] += self.m[(i, j)];
                }
            }
        }
        DensityMatrix::from_matrix_unchecked(&reduced, out)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidState("trace distance between different dimensions".into()));
        }
        Ok(trace_distance(&self.m, &other.m))
    }

    /// Marginal Fock populations of one mode.
    pub fn mode_populations(&self, mode: usize) -> Vec<f64> {
        let dims = self.registry.dims();
        let stride: usize = dims[mode + 1..].iter().product();
        let mut pops = vec![0.0; dims[mode]];
        for i in 0..self.dim() {
            pops[(i / stride) % dims[mode]] += self.m[(i, i)].re;
        }
        pops
    }

    pub fn leak_report(&self, threshold: f64) -> Vec<LeakReport> {
        (0..self.registry.len())
            .map(|k| {
                let pops = self.mode_populations(k);
                let population: f64 = pops.iter().rev().take(2).sum();
                LeakReport {
                    mode: self.registry.label(k).to_string(),
                    population,
                    threshold,
                    exceeded: population > threshold,
                }
            })
            .collect()
    }
}

fn kron_all(factors: &[DVector<Complex64>]) -> DVector<Complex64> {
    let mut out = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_moments() {
        let r = ModeRegistry::new([("a", 30)]).unwrap();
        let alpha = Complex64::new(1.0, 0.5);
        let rho = DensityMatrix::coherent(&r, &[alpha]).unwrap();
        rho.validate().unwrap();
        let a = rho.expect_expr(&OperatorExpr::annihilator(&r, "a").unwrap()).unwrap();
        assert!((a - alpha).norm() < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_populations() {
        let r = ModeRegistry::new([("a", 60)]).unwrap();
        let rho = DensityMatrix::thermal(&r, &[1.0]).unwrap();
        let n = rho.expect_expr(&OperatorExpr::number(&r, "a").unwrap()).unwrap();
        assert!((n.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let r = ModeRegistry::new([("a", 3), ("b", 4)]).unwrap();
        let ra = ModeRegistry::new([("a", 3)]).unwrap();
        let rho = DensityMatrix::coherent(&r, &[Complex64::new(0.3, 0.1), Complex64::new(-0.5, 0.0)]).unwrap();
        let red = rho.partial_trace(&["a"]).unwrap();
        let direct = DensityMatrix::coherent(&ra, &[Complex64::new(0.3, 0.1)]).unwrap();
        assert!(red.trace_distance(&direct).unwrap() < 1e-12);
        assert!((red.trace().re - 1.0).abs() < 1e-12);
        let fock = DensityMatrix::fock(&r, &[2, 1]).unwrap();
        assert_eq!(fock.mode_populations(1), vec![0.0, 1.0, 0.0, 0.0]);
        assert!(fock.leak_report(1e-6)[0].exceeded);
        assert!(!fock.leak_report(1e-6)[1].exceeded);
    }

    #[test]
    fn validation_catches_bad_states() {
        let r = ModeRegistry::new([("a", 2)]).unwrap();
        let bad = CMatrix::from_diagonal(&DVector::from_vec(vec![Complex64::new(1.1, 0.0), Complex64::new(-0.1, 0.0)]));
        assert!(matches!(DensityMatrix::from_matrix(&r, bad.clone()), Err(Error::NegativeEigenvalue(_))));
        let clipped = DensityMatrix::from_matrix_unchecked(&r, bad).unwrap().clip_negative();
        clipped.validate().unwrap();
        assert!(DensityMatrix::fock(&r, &[2]).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let r = ModeRegistry::new([("a", 3)]).unwrap();
        let a = DensityMatrix::fock(&r, &[0]).unwrap();
        let b = DensityMatrix::fock(&r, &[1]).unwrap();
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-14);
    }
}
