use std::sync::Arc;

use num_complex::Complex64;

use super::{to_matrix, CMatrix, SparseMatrix};
use crate::algebra::ModeRegistry;
use crate::error::{Error, Result};
use crate::slh::{Bath, EffectiveModel};

/// Default cap on `dim²`, the length of a vectorized density matrix.
pub const DEFAULT_SUPEROPERATOR_CAP: usize = 1_000_000;

/// Largest `dim²` for which [`Liouvillian::to_dense`] builds the matrix.
const DENSE_CAP: usize = 1600;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `ρ ↦ Gρ + ρG† + Σ c A ρ B`, the shape every term used here can take.
#[derive(Clone, Debug)]
pub struct SuperTerm {
    pub g: CMatrix,
    pub jumps: Vec<(Complex64, CMatrix, CMatrix)>,
}

impl SuperTerm {
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = &self.g * rho + rho * self.g.adjoint();
        for (c, a, b) in &self.jumps {
            out += (a * rho * b) * *c;
        }
        out
    }

    fn scaled(mut self, rate: f64) -> Self {
        let r = Complex64::new(rate, 0.0);
        self.g *= r;
        for j in &mut self.jumps {
            j.0 *= r;
        }
        self
    }
}

fn half() -> Complex64 {
    Complex64::new(0.5, 0.0)
}

/// `LρL† − ½{L†L, ρ}`. `L†L` is the product of the truncated matrices, which
/// keeps the map exactly trace preserving.
pub fn vacuum_dissipator(l: &CMatrix) -> SuperTerm {
    let ld = l.adjoint();
    SuperTerm {
        g: -(&ld * l) * half(),
        jumps: vec![(Complex64::new(1.0, 0.0), l.clone(), ld)],
    }
}

/// `(N+1)D[L] + N D[L†] + M*(LρL − ½{L², ρ}) + M(L†ρL† − ½{L†², ρ})`.
pub fn squeezed_dissipator(l: &CMatrix, n: f64, m: Complex64) -> Result<SuperTerm> {
    crate::slh::Bath::squeezed(n, m)?;
    let ld = l.adjoint();
    let ldl = &ld * l;
    let lld = l * &ld;
    let l2 = l * l;
    let ld2 = &ld * &ld;
    let g = -(ldl * Complex64::new(n + 1.0, 0.0) + lld * Complex64::new(n, 0.0) + l2 * m.conj() + ld2 * m) * half();
    Ok(SuperTerm {
        g,
        jumps: vec![
            (Complex64::new(n + 1.0, 0.0), l.clone(), ld.clone()),
            (Complex64::new(n, 0.0), ld.clone(), l.clone()),
            (m.conj(), l.clone(), l.clone()),
            (m, ld.clone(), ld),
        ],
    })
}

/// Master-equation generator on a truncated registry.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    registry: Arc<ModeRegistry>,
    g: SparseMatrix,
    g_adj: SparseMatrix,
    jumps: Vec<(Complex64, SparseMatrix, SparseMatrix)>,
    channels: Vec<String>,
}

impl Liouvillian {
    pub fn build(model: &EffectiveModel, registry: &Arc<ModeRegistry>) -> Result<Self> {
        Self::build_with_cap(model, registry, DEFAULT_SUPEROPERATOR_CAP)
    }

    pub fn build_with_cap(model: &EffectiveModel, registry: &Arc<ModeRegistry>, cap: usize) -> Result<Self> {
        let dim = registry.total_dim();
        if dim.saturating_mul(dim) > cap {
            return Err(Error::DimensionOverflow {
                dim,
                size: dim.saturating_mul(dim),
                cap,
            });
        }
        model.validate()?;
        let h = to_matrix(&model.h, registry)?;
        let mut terms = Vec::new();
        let mut channels = Vec::new();
        for ch in &model.channels {
            let l = to_matrix(&ch.op, registry)?;
            let term = match ch.bath {
                Bath::Vacuum => {
                    channels.push(format!("{} * D[{}]", ch.rate, ch.op));
                    vacuum_dissipator(&l)
                }
                Bath::Squeezed { n, m_re, m_im } => {
                    channels.push(format!("{} * Ds(N={n}, M=({m_re},{m_im}))[{}]", ch.rate, ch.op));
                    squeezed_dissipator(&l, n, Complex64::new(m_re, m_im))?
                }
            };
            terms.push(term.scaled(ch.rate));
        }
        let mut liou = Self::from_parts(registry, &h, terms);
        liou.channels = channels;
        Ok(liou)
    }

    /// `−i[H, ρ]` plus the given terms.
    pub fn from_parts(registry: &Arc<ModeRegistry>, h: &CMatrix, terms: Vec<SuperTerm>) -> Self {
        let mut g = -h * I;
        let mut jumps = Vec::new();
        for t in terms {
            g += &t.g;
            for (c, a, b) in t.jumps {
                jumps.push((c, SparseMatrix::from_dense(&a), SparseMatrix::from_dense(&b)));
            }
        }
        Liouvillian {
            registry: Arc::clone(registry),
            g_adj: SparseMatrix::from_dense(&g.adjoint()),
            g: SparseMatrix::from_dense(&g),
            jumps,
            channels: Vec::new(),
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    /// `out = 𝓛 ρ`, with `scratch` as workspace (both `dim × dim`).
    pub fn apply_into(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        self.g.mul_left_into(rho, out);
        self.g_adj.add_mul_right(Complex64::new(1.0, 0.0), rho, out);
        for (c, a, b) in &self.jumps {
            a.mul_left_into(rho, scratch);
            b.add_mul_right(*c, scratch, out);
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut scratch = CMatrix::zeros(n, n);
        self.apply_into(rho, &mut out, &mut scratch);
        out
    }

    /// Upper bound on the Frobenius operator norm.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.g.frobenius_norm()
            + self
                .jumps
                .iter()
                .map(|(c, a, b)| c.norm() * a.frobenius_norm() * b.frobenius_norm())
                .sum::<f64>()
    }

    /// Column-major superoperator: `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.dim();
        if n * n > DENSE_CAP {
            return Err(Error::DimensionOverflow {
                dim: n,
                size: n * n,
                cap: DENSE_CAP,
            });
        }
        let id = CMatrix::identity(n, n);
        let g = self.g.to_dense();
        let mut sup = id.kronecker(&g) + g.conjugate().kronecker(&id);
        for (c, a, b) in &self.jumps {
            sup += b.to_dense().transpose().kronecker(&a.to_dense()) * *c;
        }
        Ok(sup)
    }
}
