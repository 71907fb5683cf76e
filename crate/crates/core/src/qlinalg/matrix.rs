use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        ComplexMatrix {
            nrows,
            ncols,
            data: vec![Complex64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major complex entries.
    pub fn from_vec(nrows: usize, ncols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                nrows * ncols,
                nrows,
                ncols,
                data.len()
            )));
        }
        Ok(ComplexMatrix { nrows, ncols, data })
    }

    /// Build from row-major `(re, im)` pairs.
    pub fn from_parts(nrows: usize, ncols: usize, parts: &[(f64, f64)]) -> Result<Self> {
        Self::from_vec(
            nrows,
            ncols,
            parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect(),
        )
    }

    /// Build from row-major real entries.
    pub fn from_real(nrows: usize, ncols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_vec(
            nrows,
            ncols,
            entries.iter().map(|&re| Complex64::new(re, 0.0)).collect(),
        )
    }

    /// Outer product `v w^dag` of two column vectors.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, &vi) in v.iter().enumerate() {
            for (j, &wj) in w.iter().enumerate() {
                m[(i, j)] = vi * wj.conj();
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        ComplexMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        ComplexMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for r in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(r, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &mut out.data[r * other.ncols..(r + 1) * other.ncols];
                let orow = &other.data[k * other.ncols..(k + 1) * other.ncols];
                for (o, &b) in row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.ncols, v.len());
        (0..self.nrows)
            .map(|r| {
                self.data[r * self.ncols..(r + 1) * self.ncols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.nrows).map(|i| self[(i, i)]).sum()
    }

    /// `Tr (self . other)` without forming the product.
    pub fn trace_mul(&self, other: &Self) -> Complex64 {
        assert_eq!(self.ncols, other.nrows);
        assert_eq!(self.nrows, other.ncols);
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                acc += self[(r, c)] * other[(c, r)];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_ij |self_ij - other_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from Hermiticity, `max |m - m^dag|`.
    pub fn hermiticity_defect(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for c in r..self.ncols {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol
    }

    /// Hermitian part `(m + m^dag)/2`.
    pub fn hermitize(&self) -> Self {
        self.add(&self.dagger()).scale_re(0.5)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.ncols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.ncols + c]
    }
}

/// Kronecker product; `a` indexes the more significant factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    for ar in 0..a.nrows() {
        for ac in 0..a.ncols() {
            let f = a[(ar, ac)];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.nrows() {
                for bc in 0..b.ncols() {
                    out[(ar * b.nrows() + br, ac * b.ncols() + bc)] = f * b[(br, bc)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_hand_expansion() {
        // sigma_z (x) sigma_x against a hand expansion
        let z = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let zx = kron(&z, &x);
        let expect = ComplexMatrix::from_real(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        )
        .unwrap();
        assert_eq!(zx.max_abs_diff(&expect), 0.0);
    }

    #[test]
    fn dagger_and_trace() {
        let m = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0), c(4.0, -1.0)])
            .unwrap();
        let d = m.dagger();
        assert_eq!(d[(0, 1)], c(3.0, 0.0));
        assert_eq!(d[(1, 0)], c(0.0, -2.0));
        assert_eq!(m.trace(), c(5.0, 0.0));
        assert_eq!(m.trace_mul(&ComplexMatrix::identity(2)), m.trace());
    }

    #[test]
    fn matmul_associates_with_kron() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.5), c(0.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)])
            .unwrap();
        let b = ComplexMatrix::from_vec(2, 2, vec![c(0.0, 1.0), c(1.0, 0.0), c(1.0, 1.0), c(0.5, 0.0)])
            .unwrap();
        // (a (x) b)(a (x) b) == (aa) (x) (bb)
        let lhs = kron(&a, &b).matmul(&kron(&a, &b));
        let rhs = kron(&a.matmul(&a), &b.matmul(&b));
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }
}
