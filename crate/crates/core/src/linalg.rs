//! Small dense real linear algebra: LU with partial pivoting, 1-norm
//! condition estimates and null vectors by complete pivoting.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Copy with every row scaled to unit max-norm, plus the applied factors.
    pub fn row_equilibrated(&self) -> (Self, Vec<T>) {
        let mut out = self.clone();
        let mut scales = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let m = self.row(i).iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
            let s = if m > T::zero() { m.recip() } else { T::one() };
            for j in 0..self.cols {
                out[(i, j)] = out[(i, j)] * s;
            }
            scales.push(s);
        }
        (out, scales)
    }

    fn require_square(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::Contract(format!("expected a square matrix, got {}×{}", self.rows, self.cols)));
        }
        Ok(())
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        self.require_square()?;
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].abs().partial_cmp(&a[(y, k)].abs()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(k);
            if a[(p, k)].is_zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in (k + 1)..n {
                    a[(i, j)] = a[(i, j)] - f * a[(k, j)];
                }
            }
        }
        Ok(Lu { a, perm, sign, singular })
    }

    pub fn determinant(&self) -> Result<T> {
        Ok(self.lu()?.determinant())
    }

    /// 1-norm condition number of the row-equilibrated matrix (∞ if singular).
    pub fn condition_estimate(&self) -> Result<T> {
        let (eq, _) = self.row_equilibrated();
        let lu = eq.lu()?;
        if lu.singular {
            return Ok(T::infinity());
        }
        Ok(eq.norm1() * lu.inverse().norm1())
    }

    /// Solves A x = b, returning the solution and the condition estimate.
    pub fn solve(&self, b: &[T]) -> Result<(Vec<T>, T)> {
        if b.len() != self.rows {
            return Err(Error::Contract("right-hand side length mismatch".into()));
        }
        let (eq, scales) = self.row_equilibrated();
        let lu = eq.lu()?;
        if lu.singular {
            return Ok((vec![T::nan(); self.cols], T::infinity()));
        }
        let rhs: Vec<T> = b.iter().zip(&scales).map(|(&v, &s)| v * s).collect();
        let cond = eq.norm1() * lu.inverse().norm1();
        Ok((lu.solve(&rhs), cond))
    }

    /// Null vector by complete pivoting on the row-equilibrated matrix.
    ///
    /// `rank_tol` bounds the pivot ratio |u_kk / u_11| below which a pivot
    /// counts as zero; more than one such pivot is reported as a
    /// multi-dimensional null space.
    pub fn null_vector(&self, rank_tol: T) -> Result<NullVector<T>> {
        self.require_square()?;
        let n = self.rows;
        if n == 0 {
            return Err(Error::Contract("empty matrix".into()));
        }
        let (mut a, _) = self.row_equilibrated();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, T::zero());
            for i in k..n {
                for j in k..n {
                    if a[(i, j)].abs() > best {
                        (pi, pj, best) = (i, j, a[(i, j)].abs());
                    }
                }
            }
            if pi != k {
                for j in 0..n {
                    a.data.swap(k * n + j, pi * n + j);
                }
            }
            if pj != k {
                for i in 0..n {
                    a.data.swap(i * n + k, i * n + pj);
                }
                col_perm.swap(k, pj);
            }
            pivots.push(best);
            if best.is_zero() {
                continue;
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = T::zero();
                for j in (k + 1)..n {
                    a[(i, j)] = a[(i, j)] - f * a[(k, j)];
                }
            }
        }
        let lead = pivots[0];
        if lead.is_zero() {
            return Err(Error::NullSpace { dimension: n, energy: f64::NAN });
        }
        let ratios: Vec<T> = pivots.iter().map(|&p| p / lead).collect();
        let dimension = ratios.iter().filter(|&&r| r <= rank_tol).count();
        if dimension > 1 {
            return Err(Error::NullSpace { dimension, energy: f64::NAN });
        }
        // back substitution with the last pivoted unknown fixed to 1
        let mut y = vec![T::zero(); n];
        y[n - 1] = T::one();
        for k in (0..n - 1).rev() {
            let s: T = ((k + 1)..n).map(|j| a[(k, j)] * y[j]).sum();
            y[k] = -s / a[(k, k)];
        }
        let mut x = vec![T::zero(); n];
        for (k, &c) in col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        let norm = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        let sign = x.iter().find(|v| !v.is_zero()).map_or(T::one(), |v| v.signum());
        for v in &mut x {
            *v = *v * sign / norm;
        }
        Ok(NullVector {
            vector: x,
            smallest_pivot_ratio: ratios[n - 1],
            next_pivot_ratio: if n > 1 { ratios[n - 2] } else { T::one() },
        })
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug)]
pub struct Lu<T> {
    a: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> T {
        if self.singular {
            return T::zero();
        }
        (0..self.a.rows).fold(self.sign, |acc, i| acc * self.a[(i, i)])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.a.rows;
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: T = (0..i).map(|j| self.a[(i, j)] * y[j]).sum();
            y[i] = y[i] - s;
        }
        for i in (0..n).rev() {
            let s: T = ((i + 1)..n).map(|j| self.a[(i, j)] * y[j]).sum();
            y[i] = (y[i] - s) / self.a[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.a.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NullVector<T> {
    /// Unit 2-norm, first nonzero component positive.
    pub vector: Vec<T>,
    pub smallest_pivot_ratio: T,
    pub next_pivot_ratio: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn determinant_of_small_matrices() {
        assert!((m(&[&[1.0, 2.0], &[3.0, 4.0]]).determinant().unwrap() + 2.0).abs() < 1e-14);
        let a = m(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 5.0]]);
        assert!((a.determinant().unwrap() + 5.0).abs() < 1e-14);
        assert_eq!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).determinant().unwrap(), 0.0);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = m(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let x = [1.0, -2.0, 0.5];
        let (got, cond) = a.solve(&a.mul_vec(&x)).unwrap();
        assert!(cond < 10.0);
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_solve_reports_infinite_condition() {
        let (_, cond) = m(&[&[1.0, 2.0], &[2.0, 4.0]]).solve(&[1.0, 1.0]).unwrap();
        assert!(cond.is_infinite());
    }

    #[test]
    fn null_vector_of_rank_one_deficient() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let nv = a.null_vector(1e-8).unwrap();
        let r = a.mul_vec(&nv.vector);
        assert!(r.iter().all(|v| v.abs() < 1e-13));
        assert!(nv.vector[0] > 0.0);
        assert!(nv.smallest_pivot_ratio < 1e-14 && nv.next_pivot_ratio > 1e-3);
    }

    #[test]
    fn two_dimensional_null_space_is_rejected() {
        let a = m(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[3.0, 3.0, 3.0]]);
        assert!(matches!(a.null_vector(1e-8), Err(Error::NullSpace { dimension: 2, .. })));
    }

    #[test]
    fn non_square_is_a_contract_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(a.lu(), Err(Error::Contract(_))));
    }

    proptest! {
        #[test]
        fn inverse_times_matrix_is_identity(entries in prop::collection::vec(-2.0f64..2.0, 16)) {
            let mut a = Matrix::zeros(4, 4);
            for i in 0..4 {
                for j in 0..4 {
                    a[(i, j)] = entries[4 * i + j] + if i == j { 5.0 } else { 0.0 };
                }
            }
            let inv = a.lu().unwrap().inverse();
            for i in 0..4 {
                for j in 0..4 {
                    let v: f64 = (0..4).map(|l| inv[(i, l)] * a[(l, j)]).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((v - expected).abs() < 1e-12);
                }
            }
        }
    }
}
