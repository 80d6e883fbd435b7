//! Compressed-row sparse matrices.
//!
//! Only what the MDP matrices need: assembly from triplets, row access,
//! matrix-vector products, densification and the coordinate-list CSV format
//! (`row,col,value`).

use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Entries with magnitude below this are never stored.
pub const DROP_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; near-zero results are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: r + 1,
                });
            }
            if c >= cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: c + 1,
                });
            }
            per_row[r].push((c, v));
        }

        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut entries in per_row {
            entries.sort_by_key(|&(c, _)| c);
            let mut iter = entries.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v.abs() >= DROP_TOLERANCE {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(col, value)` pairs of one row, columns strictly increasing.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).map(|(_, v)| v).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect())
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v)))
            .expect("transposed indices are in range")
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        let lhs = self.triplets().map(|(r, c, v)| (r, c, alpha * v));
        let rhs = other.triplets().map(|(r, c, v)| (r, c, beta * v));
        Self::from_triplets(self.rows, self.cols, lhs.chain(rhs))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let triplets = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(m.nrows(), m.ncols(), triplets).expect("dense indices are in range")
    }

    /// Coordinate-list CSV with a `row,col,value` header.
    pub fn to_coo_csv(&self) -> String {
        let mut out = String::from("row,col,value\n");
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r},{c},{v}").unwrap();
        }
        out
    }

    /// Parses the coordinate-list CSV produced by [`SparseMatrix::to_coo_csv`].
    /// The dimensions are inferred from the largest indices unless given.
    pub fn from_coo_csv(reader: impl BufRead, dims: Option<(usize, usize)>) -> Result<Self> {
        let mut triplets = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("row")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Config(format!("line {}: expected `row,col,value`", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let r: usize = fields[0].parse().map_err(|_| bad())?;
            let c: usize = fields[1].parse().map_err(|_| bad())?;
            let v: f64 = fields[2].parse().map_err(|_| bad())?;
            triplets.push((r, c, v));
        }
        let (rows, cols) = dims.unwrap_or_else(|| {
            let n = triplets
                .iter()
                .map(|&(r, c, _)| r.max(c) + 1)
                .max()
                .unwrap_or(0);
            (n, n)
        });
        Self::from_triplets(rows, cols, triplets)
    }
}
