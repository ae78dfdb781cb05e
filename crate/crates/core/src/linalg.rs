//! Small dense linear algebra on coordinate vectors of length 2n (or 4n for
//! the doubled space). Storage is inline for the common low dimensions.

use std::ops::{Index, IndexMut};

use smallvec::SmallVec;

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Coordinates of a point, tangent vector or covector.
pub type Coords<T> = SmallVec<[T; 4]>;

pub fn zeros<T: Real>(len: usize) -> Coords<T> {
    SmallVec::from_elem(T::zero(), len)
}

pub fn from_slice<T: Real>(xs: &[T]) -> Coords<T> {
    SmallVec::from_slice(xs)
}

pub fn add<T: Real>(a: &[T], b: &[T]) -> Coords<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Coords<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Real>(s: T, a: &[T]) -> Coords<T> {
    a.iter().map(|&x| s * x).collect()
}

/// `a + s * b`
pub fn axpy<T: Real>(a: &[T], s: T, b: &[T]) -> Coords<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    size: usize,
    data: SmallVec<[T; 16]>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: SmallVec::from_elem(T::zero(), size * size),
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(size);
        for r in 0..size {
            for c in 0..size {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Coords<T>]) -> Self {
        let size = cols.len();
        Self::from_fn(size, |r, c| cols[c][r])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.size, |r, c| self[(c, r)])
    }

    pub fn mul_vec(&self, v: &[T]) -> Coords<T> {
        (0..self.size)
            .map(|r| (0..self.size).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `vᵀ M`, i.e. the action of the transpose on a covector.
    pub fn transpose_mul_vec(&self, v: &[T]) -> Coords<T> {
        (0..self.size)
            .map(|c| (0..self.size).map(|r| self[(r, c)] * v[r]).sum())
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_fn(self.size, |r, c| {
            (0..self.size).map(|k| self[(r, k)] * other[(k, c)]).sum()
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.size, |r, c| self[(r, c)] + other[(r, c)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.size, |r, c| self[(r, c)] - other[(r, c)])
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            size: self.size,
            data: self.data.iter().map(|&x| s * x).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        max_abs(&self.data)
    }

    fn lu(&self) -> Option<(Self, SmallVec<[usize; 8]>, bool)> {
        let n = self.size;
        let mut a = self.clone();
        let mut perm: SmallVec<[usize; 8]> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let pivot = (k..n)
                .max_by(|&i, &j| {
                    a[(i, k)]
                        .abs()
                        .partial_cmp(&a[(j, k)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(k);
            if a[(pivot, k)] == T::zero() || !a[(pivot, k)].is_finite() {
                return None;
            }
            if pivot != k {
                for c in 0..n {
                    let tmp = a[(k, c)];
                    a[(k, c)] = a[(pivot, c)];
                    a[(pivot, c)] = tmp;
                }
                perm.swap(k, pivot);
                odd = !odd;
            }
            for r in (k + 1)..n {
                let factor = a[(r, k)] / a[(k, k)];
                a[(r, k)] = factor;
                for c in (k + 1)..n {
                    let v = a[(k, c)];
                    a[(r, c)] = a[(r, c)] - factor * v;
                }
            }
        }
        Some((a, perm, odd))
    }

    pub fn det(&self) -> T {
        match self.lu() {
            None => T::zero(),
            Some((lu, _, odd)) => {
                let d = (0..self.size).fold(T::one(), |acc, i| acc * lu[(i, i)]);
                if odd {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Solves `M x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Coords<T>> {
        let (lu, perm, _) = self.lu().ok_or(LabError::SingularMatrix)?;
        let n = self.size;
        let mut y: Coords<T> = perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                let v = y[c];
                y[r] = y[r] - lu[(r, c)] * v;
            }
        }
        for r in (0..n).rev() {
            for c in (r + 1)..n {
                let v = y[c];
                y[r] = y[r] - lu[(r, c)] * v;
            }
            y[r] = y[r] / lu[(r, r)];
        }
        Ok(y)
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &Self) -> Result<Self> {
        let cols: Vec<Coords<T>> = (0..self.size)
            .map(|c| {
                let col: Coords<T> = (0..self.size).map(|r| b[(r, c)]).collect();
                self.solve(&col)
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_columns(&cols))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.size + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.size + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn det_of_two_by_two_matches_formula() {
        let m = Matrix::from_fn(2, |r, c| [[3.0, 7.0], [-2.0, 5.0]][r][c]);
        assert_abs_diff_eq!(m.det(), 3.0 * 5.0 + 14.0, epsilon = 1e-12);
    }

    #[test]
    fn det_tracks_row_swaps() {
        let m = Matrix::from_fn(3, |r, c| [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0]][r][c]);
        assert_abs_diff_eq!(m.det(), -2.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_recovers_rhs() {
        let m = Matrix::from_fn(3, |r, c| [[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]][r][c]);
        let x = [1.0, -2.0, 0.25];
        let b = m.mul_vec(&x);
        let sol = m.solve(&b).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(sol[i], x[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = Matrix::from_fn(2, |r, c| [[1.0, 2.0], [2.0, 4.0]][r][c]);
        assert_eq!(m.solve(&[1.0, 1.0]), Err(LabError::SingularMatrix));
        assert_eq!(m.det(), 0.0);
    }
}
