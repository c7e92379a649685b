//! Least squares by incremental QR factorisation.
//!
//! Rows are folded one at a time into an upper-triangular factor with Givens
//! rotations, so a design with tens of millions of rows never needs to be
//! materialised. The response is carried as an extra column of the factor.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Relative size below which a diagonal entry of R counts as zero.
const RANK_TOL: f64 = 1e-10;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.as_ref().len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: cols,
                    found: r.as_ref().len(),
                });
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Running triangular factor of `[X | y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrAccumulator {
    cols: usize,
    rows: usize,
    // (cols + 1) x (cols + 1), row-major, upper triangle used.
    r: Vec<f64>,
    scratch: Vec<f64>,
}

impl QrAccumulator {
    pub fn new(cols: usize) -> Self {
        let w = cols + 1;
        Self {
            cols,
            rows: 0,
            r: vec![0.0; w * w],
            scratch: vec![0.0; w],
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Data rows folded in so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Folds in one observation `x · w ≈ y`.
    pub fn push(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.cols);
        self.scratch[..self.cols].copy_from_slice(x);
        self.scratch[self.cols] = y;
        self.rotate_in();
        self.rows += 1;
    }

    /// Folds in the factor of another accumulator over the same columns.
    pub fn merge(&mut self, other: &QrAccumulator) {
        assert_eq!(self.cols, other.cols, "column count mismatch");
        let w = self.cols + 1;
        for i in 0..w {
            self.scratch.copy_from_slice(&other.r[i * w..(i + 1) * w]);
            self.rotate_in();
        }
        self.rows += other.rows;
    }

    fn rotate_in(&mut self) {
        let w = self.cols + 1;
        let v = &mut self.scratch;
        for i in 0..w {
            let b = v[i];
            if b == 0.0 {
                continue;
            }
            let row = &mut self.r[i * w..(i + 1) * w];
            let a = row[i];
            let h = libm::sqrt(a * a + b * b);
            let (c, s) = (a / h, b / h);
            row[i] = h;
            for j in i + 1..w {
                let (rj, vj) = (row[j], v[j]);
                row[j] = c * rj + s * vj;
                v[j] = c * vj - s * rj;
            }
        }
    }

    /// Minimiser of `‖y − Xw‖² + ridge · Σ_{penalized j} w_j²`.
    pub fn solve(&self, ridge: f64, penalized: &[bool]) -> Result<Vec<f64>> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidConfig("ridge must be a finite value ≥ 0".into()));
        }
        let p = self.cols;
        let w = p + 1;
        let mut acc = self.clone();
        if ridge > 0.0 {
            let lambda = libm::sqrt(ridge);
            for j in 0..p {
                if penalized.get(j).copied().unwrap_or(true) {
                    acc.scratch.iter_mut().for_each(|v| *v = 0.0);
                    acc.scratch[j] = lambda;
                    acc.rotate_in();
                }
            }
        }
        let r = &acc.r;
        let max_diag = (0..p).map(|j| r[j * w + j].abs()).fold(0.0, f64::max);
        for j in 0..p {
            if !(r[j * w + j].abs() > RANK_TOL * max_diag) {
                return Err(Error::RankDeficient { column: j });
            }
        }
        let mut coef = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = r[i * w + p];
            for j in i + 1..p {
                s -= r[i * w + j] * coef[j];
            }
            coef[i] = s / r[i * w + i];
        }
        if coef.iter().any(|c| !c.is_finite()) {
            return Err(Error::RankDeficient { column: 0 });
        }
        Ok(coef)
    }
}

/// Ordinary (optionally ridge-penalised) least squares on an explicit design.
///
/// With `include_intercept` a constant column is appended; its weight is the
/// last entry of the result and is not penalised.
pub fn fit_ols(x: &DesignMatrix, y: &[f64], ridge: f64, include_intercept: bool) -> Result<Vec<f64>> {
    if y.len() != x.rows() {
        return Err(Error::ShapeMismatch {
            expected: x.rows(),
            found: y.len(),
        });
    }
    let cols = x.cols() + usize::from(include_intercept);
    if x.rows() < cols || cols == 0 {
        return Err(Error::Underdetermined {
            rows: x.rows(),
            cols,
        });
    }
    let mut acc = QrAccumulator::new(cols);
    let mut row = vec![1.0; cols];
    for (i, &target) in y.iter().enumerate() {
        row[..x.cols()].copy_from_slice(x.row(i));
        acc.push(&row, target);
    }
    acc.solve(ridge, &penalty_mask(x.cols(), include_intercept))
}

/// `true` for every coefficient column, `false` for the intercept.
pub fn penalty_mask(coefficients: usize, include_intercept: bool) -> Vec<bool> {
    let mut mask = vec![true; coefficients];
    if include_intercept {
        mask.push(false);
    }
    mask
}

/// `w · x` with the optional trailing intercept weight.
#[inline]
pub fn linear_predict(weights: &[f64], x: &[f64]) -> f64 {
    let dot: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
    if weights.len() > x.len() {
        dot + weights[x.len()]
    } else {
        dot
    }
}
