use crate::{Error, Real, Result};
use serde::{Deserialize, Serialize};

/// Small dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Matrix { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.cols.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    out[(i, j)] = out[(i, j)] + a * o[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn sub(&self, o: &Self) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| *a - *b).collect() }
    }

    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), |m, x| m.max(x))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors with partial pivoting.
struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

const PIVOT_TOL: f64 = 1e-13;
const RANK_TOL: f64 = 1e-9;

fn lu<T: Real>(a: &Matrix<T>) -> Result<Lu<T>> {
    assert_eq!(a.rows, a.cols, "square matrix required");
    let n = a.rows;
    let scale = a.max_abs();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap()).unwrap();
        if m[(p, k)].abs() <= T::lit(PIVOT_TOL) * scale || scale == T::zero() {
            return Err(Error::Singular { rank: rank(a, T::lit(RANK_TOL)), size: n });
        }
        if p != k {
            for j in 0..n {
                m.data.swap(p * n + j, k * n + j);
            }
            perm.swap(p, k);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            m[(i, k)] = f;
            for j in k + 1..n {
                let v = m[(k, j)];
                m[(i, j)] = m[(i, j)] - f * v;
            }
        }
    }
    Ok(Lu { lu: m, perm })
}

impl<T: Real> Lu<T> {
    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        let mut y: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] = y[i] - self.lu[(i, j)] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] = y[i] - self.lu[(i, j)] * y[j];
            }
            y[i] = y[i] / self.lu[(i, i)];
        }
        y
    }
}

/// Solves `A x = b`, returning `x` and the 1-norm condition number.
pub fn linsolve<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    let f = lu(a)?;
    let x = f.solve(b);
    let inv = inverse_from(&f);
    Ok((x, a.norm1() * inv.norm1()))
}

fn inverse_from<T: Real>(f: &Lu<T>) -> Matrix<T> {
    let n = f.lu.rows;
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = f.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

pub fn inverse<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(inverse_from(&lu(a)?))
}

pub fn det<T: Real>(a: &Matrix<T>) -> T {
    match lu(a) {
        Err(_) => T::zero(),
        Ok(f) => {
            let n = a.rows;
            let mut d = (0..n).fold(T::one(), |acc, i| acc * f.lu[(i, i)]);
            // parity of the permutation
            let mut seen = vec![false; n];
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                let mut len = 0;
                let mut j = s;
                while !seen[j] {
                    seen[j] = true;
                    j = f.perm[j];
                    len += 1;
                }
                if len % 2 == 0 {
                    d = -d;
                }
            }
            d
        }
    }
}

/// Numerical rank by Gaussian elimination with complete pivoting; pivots at
/// or below `tol` times the largest entry count as zero.
pub fn rank<T: Real>(a: &Matrix<T>, tol: T) -> usize {
    let mut m = a.clone();
    let (r, c) = (m.rows, m.cols);
    let scale = m.max_abs();
    if scale == T::zero() {
        return 0;
    }
    let mut rank = 0;
    let mut rows: Vec<usize> = (0..r).collect();
    let mut cols: Vec<usize> = (0..c).collect();
    while rank < r.min(c) {
        let mut best = (rank, rank, T::zero());
        for i in rank..r {
            for j in rank..c {
                let v = m[(rows[i], cols[j])].abs();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= tol * scale {
            break;
        }
        rows.swap(rank, best.0);
        cols.swap(rank, best.1);
        let (pr, pc) = (rows[rank], cols[rank]);
        for i in rank + 1..r {
            let f = m[(rows[i], pc)] / m[(pr, pc)];
            for j in rank..c {
                let v = m[(pr, cols[j])];
                m[(rows[i], cols[j])] = m[(rows[i], cols[j])] - f * v;
            }
        }
        rank += 1;
    }
    rank
}

/// Dimension of the numerical kernel of a square matrix.
pub fn kernel_dimension<T: Real>(a: &Matrix<T>, tol: T) -> usize {
    a.cols - rank(a, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let (x, c) = linsolve(&Matrix::<f64>::identity(3), &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        assert_eq!(c, 1.0);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let (x, _) = linsolve(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(x, vec![0.5, 0.25]);
    }

    #[test]
    fn singular_reports_rank() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(linsolve(&a, &[1.0, 1.0]), Err(Error::Singular { rank: 1, size: 2 }));
        assert_eq!(kernel_dimension(&a, 1e-9), 1);
    }

    #[test]
    fn determinant_with_pivoting() {
        let a = Matrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]);
        assert!((det(&a) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn residual_bound() {
        let a = Matrix::<f64>::from_rows(&[vec![4.0, 1.0, 0.3], vec![1.0, 3.0, -1.0], vec![0.2, -1.0, 5.0]]);
        let b = [1.0, 2.0, -0.5];
        let (x, _) = linsolve(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() <= 1e-10 * 2.0);
        }
    }
}
