use num_complex::Complex64;

use super::CMatrix;

/// Square compressed-sparse-row matrix, used for the operator factors of a
/// Liouvillian acting on dense density matrices.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn from_dense(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "sparse matrices are square");
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `out = self · x`.
    pub fn mul_left_into(&self, x: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..x.ncols() {
            let xc = &xs[j * n..(j + 1) * n];
            let oc = &mut os[j * n..(j + 1) * n];
            for (i, o) in oc.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.cols[k]];
                }
                *o = acc;
            }
        }
    }

    /// `out += c · x · self`.
    pub fn add_mul_right(&self, c: Complex64, x: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for k in 0..n {
            let xc = &xs[k * n..(k + 1) * n];
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                let j = self.cols[idx];
                let w = c * self.vals[idx];
                let oc = &mut os[j * n..(j + 1) * n];
                for (o, xv) in oc.iter_mut().zip(xc) {
                    *o += w * xv;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let a = CMatrix::from_fn(5, 5, |i, j| {
            if (i + 2 * j) % 3 == 0 {
                Complex64::new(i as f64 - 1.0, j as f64 * 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let x = CMatrix::from_fn(5, 5, |i, j| Complex64::new((i * j) as f64 * 0.1, i as f64 - j as f64));
        let s = SparseMatrix::from_dense(&a);
        assert!((s.to_dense() - &a).norm() == 0.0);
        let mut out = CMatrix::zeros(5, 5);
        s.mul_left_into(&x, &mut out);
        assert!((&out - &a * &x).norm() < 1e-12);
        let mut out = CMatrix::zeros(5, 5);
        s.add_mul_right(Complex64::new(0.0, 2.0), &x, &mut out);
        assert!((&out - (&x * &a) * Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }
}
