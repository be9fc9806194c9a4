//! Small dense complex matrices.

use std::ops::{Index, IndexMut, Mul};

use num_traits::{One, Zero};

use super::complex::{Cx, CxExt};
use super::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<R>>,
}

impl<R: Real> CMat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Cx::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn scalar(n: usize, s: Cx<R>) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Cx<R>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[Cx<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Cx<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map(&self, f: impl Fn(Cx<R>) -> Cx<R>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: Cx<R>) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Cx::<R>::one()))
    }

    pub fn trace(&self) -> Cx<R> {
        (0..self.rows.min(self.cols)).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn mul_vec(&self, v: &[Cx<R>]) -> Vec<Cx<R>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(Cx::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.cabs().to_f64()).fold(0.0, f64::max)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Cx<R> {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Cx::<R>::one();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].cabs().partial_cmp(&a[(j, k)].cabs()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(k);
            let pivot = a[(p, k)];
            if pivot == Cx::zero() {
                return Cx::zero();
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            det = det * pivot;
            let inv = pivot.cinv();
            for i in k + 1..n {
                let f = a[(i, k)] * inv;
                if f == Cx::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] = a[(i, j)] - f * t;
                }
            }
        }
        det
    }

    /// Inverse by Gauss–Jordan with partial pivoting; `None` if singular.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].cabs().partial_cmp(&a[(j, k)].cabs()).unwrap_or(std::cmp::Ordering::Equal))?;
            if a[(p, k)] == Cx::zero() {
                return None;
            }
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let d = a[(k, k)].cinv();
            for j in 0..n {
                a[(k, j)] = a[(k, j)] * d;
                inv[(k, j)] = inv[(k, j)] * d;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == Cx::zero() {
                    continue;
                }
                for j in 0..n {
                    let (akj, ikj) = (a[(k, j)], inv[(k, j)]);
                    a[(i, j)] = a[(i, j)] - f * akj;
                    inv[(i, j)] = inv[(i, j)] - f * ikj;
                }
            }
        }
        Some(inv)
    }

    /// First-order bound on |δ det| given entrywise absolute errors:
    /// Σ |cofactor_ij| · err_ij.
    pub fn det_error_bound(&self, errors: &[f64]) -> f64 {
        assert_eq!(errors.len(), self.data.len());
        let det = self.det();
        match self.inverse() {
            Some(inv) => {
                let mut acc = 0.0;
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        acc += (det * inv[(j, i)]).cabs().to_f64() * errors[i * self.cols + j];
                    }
                }
                acc
            }
            None => f64::INFINITY,
        }
    }

    pub fn convert<S: Real>(&self) -> CMat<S> {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| super::complex::convert(z)).collect(),
        }
    }

    pub fn entries(&self) -> &[Cx<R>] {
        &self.data
    }
}

impl<R: Real> Index<(usize, usize)> for CMat<R> {
    type Output = Cx<R>;

    fn index(&self, (i, j): (usize, usize)) -> &Cx<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for CMat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<R> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Mul for &CMat<R> {
    type Output = CMat<R>;

    fn mul(self, rhs: &CMat<R>) -> CMat<R> {
        assert_eq!(self.cols, rhs.rows);
        CMat::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).fold(Cx::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)])
        })
    }
}

/// Eigenvalues of a 2×2 matrix by the quadratic formula, ordered by
/// (Re, Im).
pub fn eig2<R: Real>(m: &CMat<R>) -> [Cx<R>; 2] {
    assert_eq!((m.rows(), m.cols()), (2, 2));
    let half = Cx::new(R::half(), R::zero());
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr * half * half - det).csqrt();
    let mean = tr * half;
    // avoid cancellation: take the larger-modulus root first
    let (a, b) = if (mean + disc).cabs() >= (mean - disc).cabs() { (mean + disc, mean - disc) } else { (mean - disc, mean + disc) };
    let b = if a == Cx::zero() { b } else { det / a };
    order_pair([a, b])
}

/// Eigenvalues of a rank ≤ 2 matrix.
pub fn eigenvalues<R: Real>(m: &CMat<R>) -> Vec<Cx<R>> {
    match m.rows() {
        1 => vec![m[(0, 0)]],
        2 => eig2(m).to_vec(),
        n => panic!("eigenvalues only implemented for rank <= 2, got {n}"),
    }
}

pub fn order_pair<R: Real>(p: [Cx<R>; 2]) -> [Cx<R>; 2] {
    let key = |z: &Cx<R>| (z.re.to_f64(), z.im.to_f64());
    if key(&p[1]) < key(&p[0]) {
        [p[1], p[0]]
    } else {
        p
    }
}
