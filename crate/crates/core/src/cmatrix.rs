//! Dense complex matrices sized for desk-scale Hilbert spaces (d <= 64,
//! superoperators up to d^2 x d^2). Row-major storage over `Vec<C64>`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, ONE);
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, C64::new(x, 0.0));
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, C64::new(x, 0.0));
        }
        m
    }

    /// Rank-one projector |v><v| (v need not be normalized).
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for i in 0..v.len() {
            for j in 0..w.len() {
                m.set(i, j, v[i] * w[j].conj());
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = ZERO;
            for j in 0..self.cols {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_mut(&mut self, s: C64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &CMatrix, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.conj()).collect() }
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// tr(A B) without forming the product.
    pub fn trace_mul(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self.get(i, j) * other.get(j, i);
            }
        }
        acc
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        let mut out = CMatrix::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for p in 0..rb {
                    for q in 0..cb {
                        out.set(i * rb + p, j * cb + q, a * other.get(p, q));
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &CMatrix) -> CMatrix {
        &self.matmul(other) + &other.matmul(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        num_traits::Float::sqrt(self.data.iter().map(|x| x.norm_sqr()).sum::<f64>())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum (operator 1-norm).
    pub fn norm_one(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.get(i, j).norm()).sum();
            best = best.max(s);
        }
        best
    }

    /// Hermiticity defect: max |A_ij - conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn check_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("{}x{} is not square", self.rows, self.cols)))
        }
    }

    pub fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        self.check_square()?;
        let defect = self.hermiticity_defect();
        if defect <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian { defect, tol })
        }
    }

    /// Solve A X = B by LU with partial pivoting. A is consumed as the
    /// factorization workspace.
    pub fn solve(mut self, b: &CMatrix) -> Result<CMatrix> {
        self.check_square()?;
        assert_eq!(self.rows, b.rows, "solve dimension mismatch");
        let n = self.rows;
        let mut x = b.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..n {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best < f64::EPSILON * 1e-3 {
                return Err(Error::InvalidParameter(format!(
                    "singular matrix in linear solve (pivot {best:.3e} at column {k})"
                )));
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = self.get(k, j);
                    self.set(k, j, self.get(pivot, j));
                    self.set(pivot, j, tmp);
                }
                for j in 0..x.cols {
                    let tmp = x.get(k, j);
                    x.set(k, j, x.get(pivot, j));
                    x.set(pivot, j, tmp);
                }
                perm.swap(k, pivot);
            }
            let akk = self.get(k, k);
            for i in k + 1..n {
                let factor = self.get(i, k) / akk;
                self.set(i, k, factor);
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let v = self.get(i, j) - factor * self.get(k, j);
                    self.set(i, j, v);
                }
                for j in 0..x.cols {
                    let v = x.get(i, j) - factor * x.get(k, j);
                    x.set(i, j, v);
                }
            }
        }
        // back substitution
        for j in 0..x.cols {
            for i in (0..n).rev() {
                let mut acc = x.get(i, j);
                for k in i + 1..n {
                    acc -= self.get(i, k) * x.get(k, j);
                }
                x.set(i, j, acc / self.get(i, i));
            }
        }
        Ok(x)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-ONE)
    }
}

/// Common fixed matrices.
pub mod mats {
    use super::{CMatrix, C64};

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_rows(&[
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            &[C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        ])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn matmul_identity() {
        let a = CMatrix::from_rows(&[&[c(1.0, 2.0), c(3.0, -1.0)], &[c(0.0, 1.0), c(2.0, 0.0)]]);
        let id = CMatrix::identity(2);
        assert_eq!(a.matmul(&id), a);
        assert_eq!(id.matmul(&a), a);
    }

    #[test]
    fn kron_shape_and_values() {
        let a = CMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = CMatrix::identity(2);
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert_eq!(k.get(0, 0), c(1.0, 0.0));
        assert_eq!(k.get(1, 3), c(2.0, 0.0));
        assert_eq!(k.get(2, 0), c(3.0, 0.0));
    }

    #[test]
    fn solve_roundtrip() {
        let a = CMatrix::from_rows(&[
            &[c(2.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)],
            &[c(0.0, 0.3), c(3.0, 0.0), c(1.0, 1.0)],
            &[c(1.0, 0.0), c(0.0, 0.0), c(4.0, -2.0)],
        ]);
        let x_true = CMatrix::from_rows(&[
            &[c(1.0, 0.0)],
            &[c(-2.0, 0.5)],
            &[c(0.25, 1.0)],
        ]);
        let b = a.matmul(&x_true);
        let x = a.clone().solve(&b).unwrap();
        assert!((&x - &x_true).max_abs() < 1e-12);
    }

    #[test]
    fn trace_mul_agrees_with_product_trace() {
        let a = CMatrix::from_rows(&[&[c(1.0, 2.0), c(3.0, -1.0)], &[c(0.0, 1.0), c(2.0, 0.0)]]);
        let b = CMatrix::from_rows(&[&[c(0.5, 0.0), c(1.0, 1.0)], &[c(-1.0, 0.0), c(0.0, 2.0)]]);
        let d = a.trace_mul(&b) - a.matmul(&b).trace();
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn pauli_algebra() {
        let x = mats::pauli_x();
        let y = mats::pauli_y();
        let z = mats::pauli_z();
        // [x, y] = 2i z
        let comm = x.commutator(&y);
        assert!((&comm - &z.scale(c(0.0, 2.0))).max_abs() < 1e-15);
        assert!((&x.matmul(&x) - &CMatrix::identity(2)).max_abs() < 1e-15);
    }
}
