//! Dense complex matrices and Hermitian positive-definite solves.
//!
//! Storage is row-major. Only the handful of operations the simulator
//! needs are provided; this is not a general linear algebra library.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::LinalgError;

/// Dense `rows × cols` complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (rows, cols),
                found: (data.len(), 1),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` for every entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| self.data[r * self.cols + c])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose `Aᴴ`.
    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, other.cols),
                found: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, a) in self.row(r).iter().enumerate() {
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A x` for a vector of length `cols`.
    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        self.matvec_into(x, &mut out)?;
        Ok(out)
    }

    pub fn matvec_into(&self, x: &[Complex64], out: &mut [Complex64]) -> Result<(), LinalgError> {
        if x.len() != self.cols || out.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.rows, self.cols),
                found: (out.len(), x.len()),
            });
        }
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    /// `Aᴴ y` for a vector of length `rows`, without forming `Aᴴ`.
    pub fn conj_transpose_matvec_into(
        &self,
        y: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), LinalgError> {
        if y.len() != self.rows || out.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, self.rows),
                found: (out.len(), y.len()),
            });
        }
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (row, ym) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * ym;
            }
        }
        Ok(())
    }

    /// Gram matrix `AᴴA` (`cols × cols`, Hermitian).
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for row in self.data.chunks_exact(n) {
            for i in 0..n {
                let ci = row[i].conj();
                let g_row = &mut g.data[i * n..(i + 1) * n];
                for j in i..n {
                    g_row[j] += ci * row[j];
                }
            }
        }
        for i in 0..n {
            g.data[i * n + i].im = 0.0;
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i].conj();
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Lower-triangular Cholesky factorization of a Hermitian positive-definite matrix.
    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        Cholesky::factor(self)
    }

    fn same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.rows, self.cols),
                found: (other.rows, other.cols),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// Cholesky factor `W = L Lᴴ` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: ComplexMatrix,
}

impl Cholesky {
    fn factor(w: &ComplexMatrix) -> Result<Self, LinalgError> {
        if w.rows != w.cols {
            return Err(LinalgError::NotSquare(w.rows, w.cols));
        }
        let n = w.rows;
        let mut l = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let mut diag = w[(j, j)].re;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if !diag.is_finite() || diag <= 0.0 {
                return Err(LinalgError::NotPositiveDefinite { pivot: j });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut s = w[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &ComplexMatrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// `ln det W = 2 Σ ln L_ii`.
    pub fn ln_det(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.lower[(i, i)].re.ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solves `W x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, 1),
                found: (b.len(), 1),
            });
        }
        let l = &self.lower;
        // forward: L z = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * b[k];
            }
            b[i] = s / l[(i, i)].re;
        }
        // backward: Lᴴ x = z
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * b[k];
            }
            b[i] = s / l[(i, i)].re;
        }
        Ok(())
    }

    /// Solves `W X = B` column by column.
    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if b.rows != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.dim(), b.cols),
                found: (b.rows, b.cols),
            });
        }
        let mut out = b.clone();
        let mut col = vec![Complex64::new(0.0, 0.0); b.rows];
        for c in 0..b.cols {
            for (r, v) in col.iter_mut().enumerate() {
                *v = b[(r, c)];
            }
            self.solve_in_place(&mut col)?;
            for (r, v) in col.iter().enumerate() {
                out[(r, c)] = *v;
            }
        }
        Ok(out)
    }

    /// 2-norm condition number estimate of `W`, from power iteration on `W`
    /// and inverse iteration through this factor.
    pub fn condition_estimate(&self, w: &ComplexMatrix) -> f64 {
        const ITERS: usize = 12;
        let n = self.dim();
        if n == 1 {
            return 1.0;
        }
        let start: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0, 0.1 * i as f64))
            .collect();

        let mut v = normalized(start.clone());
        let mut lambda_max = 0.0_f64;
        for _ in 0..ITERS {
            let wv = w.matvec(&v).expect("square factor");
            lambda_max = norm(&wv);
            if lambda_max == 0.0 {
                return f64::INFINITY;
            }
            v = normalized(wv);
        }

        let mut u = normalized(start);
        let mut inv_max = 0.0_f64;
        for _ in 0..ITERS {
            self.solve_in_place(&mut u).expect("dimension checked");
            inv_max = norm(&u);
            if !inv_max.is_finite() {
                return f64::INFINITY;
            }
            u = normalized(u);
        }
        // the iterates only approach the extremes from inside, so also use the
        // diagonal of the factor which bounds the spread from below
        let diag: Vec<f64> = (0..n).map(|i| self.lower[(i, i)].re).collect();
        let dmax = diag.iter().cloned().fold(0.0, f64::max);
        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        (lambda_max * inv_max).max((dmax / dmin).powi(2))
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let n = norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    v
}
