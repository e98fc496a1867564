use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_vec(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column(v: &[T]) -> Self {
        Self::from_vec(v.len(), 1, v.to_vec())
    }

    pub fn row(v: &[T]) -> Self {
        Self::from_vec(1, v.len(), v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimensions");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "add dimensions"
        );
        Self::from_vec(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(-T::one()))
    }

    pub fn scale(&self, c: T) -> Self {
        Self::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&a| a * c).collect(),
        )
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Copies `block` into `self` with its top-left corner at `(r, c)`.
    pub fn set_block(&mut self, r: usize, c: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r + i, c + j)] = block[(i, j)];
            }
        }
    }

    pub fn lu(&self) -> Result<Lu<T>> {
        assert!(self.is_square(), "LU of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[(x, k)].abs().partial_cmp(&a[(y, k)].abs()).unwrap())
                .unwrap();
            if a[(p, k)].is_zero() {
                return Err(Error::Singular {
                    cond: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / pivot;
                a[(i, k)] = l;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= l * v;
                }
            }
        }
        Ok(Lu { lu: a, perm })
    }

    /// Exact 1-norm condition number. The matrices here are small enough that
    /// forming the inverse is cheaper than estimating.
    pub fn cond1(&self) -> Result<T> {
        let lu = self.lu()?;
        let inv = lu.solve(&Self::identity(self.rows));
        Ok(self.norm1() * inv.norm1())
    }

    /// Solves `self * X = rhs`, refusing ill-conditioned systems.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let lu = self.lu()?;
        let inv = lu.solve(&Self::identity(self.rows));
        let cond = self.norm1() * inv.norm1();
        if !(cond <= T::COND_LIMIT) {
            return Err(Error::Singular {
                cond: cond.as_f64(),
            });
        }
        Ok(lu.solve(rhs))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }

    /// Lower-triangular `L` with `self = L Lᵀ`.
    pub fn cholesky(&self) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut l = Self::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::Precondition(
                    "matrix is not positive definite".into(),
                ));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
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

/// Partially pivoted LU factors, `P A = L U`.
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn solve(&self, rhs: &Matrix<T>) -> Matrix<T> {
        let n = self.lu.rows;
        assert_eq!(rhs.rows, n);
        let mut x = Matrix::from_fn(n, rhs.cols, |i, j| rhs[(self.perm[i], j)]);
        for c in 0..rhs.cols {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    #[test]
    fn solve_and_inverse() {
        let a = M::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.5],
            vec![3.0, 0.2, -2.0],
        ]);
        let inv = a.inverse().unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&M::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_refused() {
        let a = M::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            a.solve(&M::identity(2)),
            Err(Error::Singular { .. })
        ));
        let b = M::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]);
        assert!(matches!(b.inverse(), Err(Error::Singular { .. })));
    }

    #[test]
    fn cholesky_factor() {
        let p = M::from_rows(&[vec![4.0, 1.2], vec![1.2, 2.0]]);
        let l = p.cholesky().unwrap();
        assert!(l.matmul(&l.transpose()).max_abs_diff(&p) < 1e-15);
        assert!(l[(0, 1)] == 0.0);
    }
}
