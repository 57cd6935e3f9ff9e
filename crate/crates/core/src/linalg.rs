//! Dense row-major matrices and the symmetric positive-definite solves used by
//! the ridge systems.

use std::ops::{Index, IndexMut};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, OckError, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows. `cols` is only consulted when
    /// `rows` is empty.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R], cols: usize) -> Result<Self> {
        let cols = rows.first().map_or(cols, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return invalid(format!("row {i} has {} entries, expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return invalid(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    /// `self * otherᵀ`, computed from contiguous row dot products.
    pub fn matmul_transpose(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return invalid(format!(
                "cannot multiply {:?} by transpose of {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        cross_products(self, other, &mut out, false);
        Ok(out)
    }

    /// `self * selfᵀ`, computing one triangle and mirroring it.
    pub fn outer_gram(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        cross_products(self, self, &mut out, true);
        for i in 0..self.rows {
            for j in 0..i {
                out.data[j * self.rows + i] = out.data[i * self.rows + j];
            }
        }
        out
    }

    /// `selfᵀ * self`.
    pub fn gram(&self) -> Self {
        let q = self.cols;
        let mut out = Self::zeros(q, q);
        for row in self.rows_iter() {
            for (a, &ra) in row.iter().enumerate() {
                if ra == T::zero() {
                    continue;
                }
                axpy(ra, &row[a..], &mut out.data[a * q + a..(a + 1) * q]);
            }
        }
        for a in 0..q {
            for b in 0..a {
                out.data[a * q + b] = out.data[b * q + a];
            }
        }
        out
    }

    /// `selfᵀ * other`.
    pub fn transpose_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return invalid(format!(
                "cannot multiply transpose of {:?} by {:?}",
                self.shape(),
                other.shape()
            ));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                axpy(a, b_row, &mut out.data[i * other.cols..(i + 1) * other.cols]);
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return invalid(format!(
                "cannot multiply {:?} by vector of length {}",
                self.shape(),
                v.len()
            ));
        }
        Ok(self.rows_iter().map(|r| dot(r, v)).collect())
    }

    pub fn add_diagonal(&mut self, shift: T) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += shift;
        }
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Reorders rows so that row `i` of the result is row `perm[i]` of `self`.
    pub fn select_rows(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(perm.len() * self.cols);
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Self {
            rows: perm.len(),
            cols: self.cols,
            data,
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with independent accumulators so the loop vectorizes.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let base = c * 8;
        for l in 0..8 {
            acc[l] += a[base + l] * b[base + l];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Row-by-row inner products `out[i][j] = aᵢ · bⱼ` in 2×2 register blocks.
/// With `lower_only`, blocks strictly above the diagonal are skipped (the
/// diagonal blocks are filled completely).
fn cross_products<T: Real>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>, lower_only: bool) {
    let (n, m, k) = (a.rows, b.rows, a.cols);
    let mut i = 0;
    while i < n {
        let i2 = (i + 1).min(n - 1);
        let (a0, a1) = (a.row(i), a.row(i2));
        let j_end = if lower_only { (i2 + 1).min(m) } else { m };
        let mut j = 0;
        while j < j_end {
            let j2 = (j + 1).min(m - 1);
            let (b0, b1) = (b.row(j), b.row(j2));
            let mut acc = [[T::zero(); 4]; 4];
            let chunks = k / 4;
            for c in 0..chunks {
                let o = 4 * c;
                for l in 0..4 {
                    let (x0, x1, y0, y1) = (a0[o + l], a1[o + l], b0[o + l], b1[o + l]);
                    acc[0][l] += x0 * y0;
                    acc[1][l] += x0 * y1;
                    acc[2][l] += x1 * y0;
                    acc[3][l] += x1 * y1;
                }
            }
            let mut sums = [T::zero(); 4];
            for (s, row) in sums.iter_mut().zip(&acc) {
                *s = (row[0] + row[2]) + (row[1] + row[3]);
            }
            for l in chunks * 4..k {
                sums[0] += a0[l] * b0[l];
                sums[1] += a0[l] * b1[l];
                sums[2] += a1[l] * b0[l];
                sums[3] += a1[l] * b1[l];
            }
            out.data[i * m + j] = sums[0];
            out.data[i * m + j2] = sums[1];
            out.data[i2 * m + j] = sums[2];
            out.data[i2 * m + j2] = sums[3];
            j += 2;
        }
        i += 2;
    }
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Returns `None` when a pivot is not strictly positive or not finite.
    pub fn factor(a: &Matrix<T>) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return None;
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
                let v = a[(i, j)] - s;
                if i == j {
                    if !(v > T::zero()) || !v.is_finite() {
                        return None;
                    }
                    l[(i, i)] = v.sqrt();
                } else {
                    l[(i, j)] = v / l[(j, j)];
                }
            }
        }
        Some(Self { l })
    }

    pub fn factor_matrix(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.l.nrows();
        assert_eq!(b.nrows(), n, "right-hand side row count");
        let r = b.ncols();
        // forward: L Y = B, column-major scratch so each solve is contiguous
        let mut out = Matrix::zeros(n, r);
        let mut col = vec![T::zero(); n];
        for c in 0..r {
            for i in 0..n {
                col[i] = b[(i, c)];
            }
            for i in 0..n {
                let s = dot(&self.l.row(i)[..i], &col[..i]);
                col[i] = (col[i] - s) / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = col[i];
                for k in i + 1..n {
                    s -= self.l[(k, i)] * col[k];
                }
                col[i] = s / self.l[(i, i)];
            }
            for i in 0..n {
                out[(i, c)] = col[i];
            }
        }
        out
    }

    /// Smallest and largest diagonal entries of `L`, squared; a cheap
    /// conditioning indicator.
    pub fn pivot_range(&self) -> (T, T) {
        let n = self.l.nrows();
        (0..n).fold((T::infinity(), T::zero()), |(lo, hi), i| {
            let p = self.l[(i, i)] * self.l[(i, i)];
            (lo.min(p), hi.max(p))
        })
    }
}

/// LU factorization with partial pivoting.
fn lu_solve<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.nrows();
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pv > T::zero()) {
            return None;
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..x.ncols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            lu[(i, k)] = f;
            if f == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..x.ncols() {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for c in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    x.is_finite().then_some(x)
}

/// Which route produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    JitteredCholesky,
    PivotedLu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub jitter: f64,
    pub relative_residual: f64,
}

/// Solves the symmetric system `A X = B`, where `A` is positive definite in
/// exact arithmetic.
///
/// Cholesky is tried first. On failure a single jitter of
/// `1e-10 · trace(A) / n` is added to the diagonal, and as a last resort a
/// partially pivoted LU solve is used on the original matrix.
pub fn solve_spd<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(Matrix<T>, SolveReport)> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return invalid(format!(
            "system shape {:?} incompatible with right-hand side {:?}",
            a.shape(),
            b.shape()
        ));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(OckError::Numerical {
            message: "system contains non-finite entries".into(),
            diagnostics: diagnostics(a),
        });
    }
    let finish = |x: Matrix<T>, method: SolveMethod, jitter: f64| {
        let relative_residual = relative_residual(a, &x, b).to_f64_lossy();
        (
            x,
            SolveReport {
                method,
                jitter,
                relative_residual,
            },
        )
    };
    if let Some(ch) = Cholesky::factor(a) {
        let x = ch.solve(b);
        if x.is_finite() {
            return Ok(finish(x, SolveMethod::Cholesky, 0.0));
        }
    }
    let jitter = T::lit(1e-10) * a.trace().abs() / T::from_count(n.max(1));
    warn!(
        "Cholesky failed on {n}x{n} system; retrying with diagonal jitter {}",
        jitter
    );
    let mut shifted = a.clone();
    shifted.add_diagonal(jitter);
    if let Some(ch) = Cholesky::factor(&shifted) {
        let x = ch.solve(b);
        if x.is_finite() {
            return Ok(finish(x, SolveMethod::JitteredCholesky, jitter.to_f64_lossy()));
        }
    }
    warn!("jittered Cholesky failed; falling back to pivoted LU");
    match lu_solve(a, b) {
        Some(x) => Ok(finish(x, SolveMethod::PivotedLu, 0.0)),
        None => Err(OckError::Numerical {
            message: "linear solve failed after Cholesky, jitter and LU fallbacks".into(),
            diagnostics: diagnostics(a),
        }),
    }
}

/// `‖A X − B‖_F / ‖B‖_F`, or `‖A X‖_F` when `B` vanishes.
pub fn relative_residual<T: Real>(a: &Matrix<T>, x: &Matrix<T>, b: &Matrix<T>) -> T {
    let ax = a.matmul(x).expect("residual shapes");
    let r = ax.sub(b).expect("residual shapes").frobenius_norm();
    let nb = b.frobenius_norm();
    if nb > T::zero() {
        r / nb
    } else {
        r
    }
}

fn diagonal_range<T: Real>(a: &Matrix<T>) -> (T, T) {
    (0..a.nrows().min(a.ncols())).fold((T::infinity(), T::neg_infinity()), |(lo, hi), i| {
        (lo.min(a[(i, i)]), hi.max(a[(i, i)]))
    })
}

fn diagonal_ratio<T: Real>(a: &Matrix<T>) -> T {
    let (lo, hi) = diagonal_range(a);
    if lo != T::zero() {
        hi / lo
    } else {
        T::infinity()
    }
}

fn diagonal_min<T: Real>(a: &Matrix<T>) -> T {
    diagonal_range(a).0
}

fn diagonal_max<T: Real>(a: &Matrix<T>) -> T {
    diagonal_range(a).1
}

fn diagnostics<T: Real>(a: &Matrix<T>) -> String {
    format!(
        "size={}x{}, trace={}, diag_min={}, diag_max={}, diag_ratio={}, max_abs={}, finite={}",
        a.nrows(),
        a.ncols(),
        a.trace(),
        diagonal_min(a),
        diagonal_max(a),
        diagonal_ratio(a),
        a.max_abs(),
        a.is_finite()
    )
}
