//! Hermitian embedding of the policy-evaluation system and its decomposition
//! into a linear combination of Pauli strings.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::hermitian_deviation;
use crate::pauli::PauliString;
use crate::sparse::SparseMatrix;

/// Coefficients with magnitude below this are dropped by [`lcu_decompose`].
pub const COEFFICIENT_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Where the original system lives inside the embedded one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMap {
    /// `[[0, B], [B^dagger, 0]]`: rhs `(r, 0)`, solution `(0, q)`.
    Block { original_dim: usize },
    /// The source was already Hermitian; only padding was added.
    Direct { original_dim: usize },
}

#[derive(Debug, Clone)]
pub struct EmbeddedSystem {
    pub h: DMatrix<Complex64>,
    pub rhs: Vec<f64>,
    pub n_qubits: usize,
    pub map: EmbeddingMap,
}

impl EmbeddedSystem {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn original_dim(&self) -> usize {
        match self.map {
            EmbeddingMap::Block { original_dim } | EmbeddingMap::Direct { original_dim } => original_dim,
        }
    }

    /// Range of embedded indices carrying the solution vector.
    pub fn solution_range(&self) -> std::ops::Range<usize> {
        match self.map {
            EmbeddingMap::Block { original_dim } => original_dim..2 * original_dim,
            EmbeddingMap::Direct { original_dim } => 0..original_dim,
        }
    }

    pub fn extract_solution<T: Copy>(&self, embedded: &[T]) -> Vec<T> {
        embedded[self.solution_range()].to_vec()
    }

    /// The embedded vector whose solution block is `q` and is zero elsewhere.
    pub fn embed_solution(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[self.solution_range()].copy_from_slice(q);
        out
    }

    /// Wraps an already-Hermitian system, padding to a power of two with an
    /// identity diagonal and zero rhs.
    pub fn from_hermitian(h: DMatrix<Complex64>, rhs: Vec<f64>) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: h.ncols(),
            });
        }
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: rhs.len(),
            });
        }
        let deviation = hermitian_deviation(&h);
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian(deviation));
        }
        let padded = n.next_power_of_two().max(2);
        let mut full = DMatrix::identity(padded, padded);
        full.view_mut((0, 0), (n, n)).copy_from(&h);
        let mut full_rhs = rhs;
        full_rhs.resize(padded, 0.0);
        Ok(Self {
            h: full,
            rhs: full_rhs,
            n_qubits: padded.trailing_zeros() as usize,
            map: EmbeddingMap::Direct { original_dim: n },
        })
    }
}

/// Builds `[[0, B], [B^dagger, 0]]` with rhs `(r, 0)` and pads to the next
/// power of two with an identity diagonal and zero rhs.
pub fn hermitian_embed(b: &SparseMatrix, r: &[f64]) -> Result<EmbeddedSystem> {
    let n = b.rows();
    if !b.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.cols(),
        });
    }
    if r.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: r.len(),
        });
    }
    let padded = (2 * n).next_power_of_two().max(2);
    let mut h = DMatrix::zeros(padded, padded);
    for (i, j, v) in b.triplets() {
        h[(i, n + j)] = Complex64::new(v, 0.0);
        h[(n + j, i)] = Complex64::new(v, 0.0);
    }
    for k in 2 * n..padded {
        h[(k, k)] = Complex64::new(1.0, 0.0);
    }
    let mut rhs = vec![0.0; padded];
    rhs[..n].copy_from_slice(r);
    Ok(EmbeddedSystem {
        h,
        rhs,
        n_qubits: padded.trailing_zeros() as usize,
        map: EmbeddingMap::Block { original_dim: n },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcuTerm {
    pub coefficient: f64,
    pub pauli: PauliString,
}

#[derive(Debug, Clone)]
pub struct LcuDecomposition {
    n_qubits: usize,
    terms: Vec<LcuTerm>,
    source_norm: f64,
    /// Sum of squared coefficients removed by truncation.
    dropped_weight: f64,
}

fn sort_terms(terms: &mut [LcuTerm]) {
    terms.sort_by(|a, b| {
        b.coefficient
            .abs()
            .total_cmp(&a.coefficient.abs())
            .then_with(|| a.pauli.cmp(&b.pauli))
    });
}

fn validate_square_power_of_two(h: &DMatrix<Complex64>) -> Result<usize> {
    let dim = h.nrows();
    if h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: h.ncols(),
        });
    }
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    let deviation = hermitian_deviation(h);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(deviation));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// `Tr(H P) / 2^N` for every one of the `4^N` Pauli strings, zeros included,
/// sorted by magnitude then label.
pub fn pauli_coefficients(h: &DMatrix<Complex64>) -> Result<Vec<LcuTerm>> {
    let n_qubits = validate_square_power_of_two(h)?;
    let dim = h.nrows();
    let mut terms: Vec<LcuTerm> = (0..1usize << (2 * n_qubits))
        .into_par_iter()
        .map(|index| {
            let pauli = PauliString::from_index(n_qubits, index);
            let x = pauli.x_mask();
            let trace: Complex64 = (0..dim).map(|j| pauli.phase(j) * h[(j, j ^ x)]).sum();
            LcuTerm {
                coefficient: trace.re / dim as f64,
                pauli,
            }
        })
        .collect();
    sort_terms(&mut terms);
    Ok(terms)
}

/// Pauli-basis decomposition `H = sum_i a_i P_i`, dropping negligible terms.
pub fn lcu_decompose(h: &DMatrix<Complex64>) -> Result<LcuDecomposition> {
    let n_qubits = validate_square_power_of_two(h)?;
    let terms = pauli_coefficients(h)?
        .into_iter()
        .filter(|t| t.coefficient.abs() >= COEFFICIENT_CUTOFF)
        .collect();
    Ok(LcuDecomposition {
        n_qubits,
        terms,
        source_norm: h.norm(),
        dropped_weight: 0.0,
    })
}

/// Keeps the `L` largest-magnitude terms.
pub fn lcu_truncate(lcu: &LcuDecomposition, keep: usize) -> Result<LcuDecomposition> {
    if keep == 0 || keep > lcu.terms.len() {
        return Err(Error::TruncationOutOfRange {
            requested: keep,
            available: lcu.terms.len(),
        });
    }
    let dropped: f64 = lcu.terms[keep..].iter().map(|t| t.coefficient.powi(2)).sum();
    Ok(LcuDecomposition {
        n_qubits: lcu.n_qubits,
        terms: lcu.terms[..keep].to_vec(),
        source_norm: lcu.source_norm,
        dropped_weight: lcu.dropped_weight + dropped,
    })
}

impl LcuDecomposition {
    /// Builds a decomposition from explicit terms; duplicates are merged.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = LcuTerm>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<PauliString, f64> = Default::default();
        for term in terms {
            if term.pauli.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    actual: term.pauli.n_qubits(),
                });
            }
            *merged.entry(term.pauli).or_default() += term.coefficient;
        }
        let mut terms: Vec<LcuTerm> = merged
            .into_iter()
            .map(|(pauli, coefficient)| LcuTerm { coefficient, pauli })
            .collect();
        sort_terms(&mut terms);
        let weight: f64 = terms.iter().map(|t| t.coefficient.powi(2)).sum();
        Ok(Self {
            n_qubits,
            terms,
            source_norm: (weight * (1usize << n_qubits) as f64).sqrt(),
            dropped_weight: 0.0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[LcuTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Frobenius norm of the decomposed matrix.
    pub fn source_norm(&self) -> f64 {
        self.source_norm
    }

    /// `||H - H_L||_F` for the terms removed by truncation.
    pub fn truncation_error(&self) -> f64 {
        (self.dropped_weight * (1usize << self.n_qubits) as f64).sqrt()
    }

    /// `sum_i a_i^2`.
    pub fn coefficient_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.powi(2)).sum()
    }

    /// `|sum_i a_i^2 2^N - ||H||_F^2|` including truncated weight.
    pub fn parseval_residual(&self) -> f64 {
        let scale = (1usize << self.n_qubits) as f64;
        ((self.coefficient_weight() + self.dropped_weight) * scale - self.source_norm.powi(2)).abs()
    }

    /// Dense `sum_i a_i P_i`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            let x = term.pauli.x_mask();
            for j in 0..dim {
                m[(j ^ x, j)] += term.pauli.phase(j) * term.coefficient;
            }
        }
        m
    }

    /// `pauli_string,coefficient` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pauli_string,coefficient\n");
        for t in &self.terms {
            writeln!(out, "{},{}", t.pauli, t.coefficient).unwrap();
        }
        out
    }
}

/// `(term index, coefficient)` pairs in decomposition order.
pub fn lcu_histogram(lcu: &LcuDecomposition) -> Vec<(usize, f64)> {
    lcu.terms.iter().map(|t| t.coefficient).enumerate().collect()
}

pub fn histogram_csv(rows: &[(usize, f64)]) -> String {
    let mut out = String::from("index,coefficient\n");
    for (k, a) in rows {
        writeln!(out, "{k},{a}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, to_complex};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_and_z_are_single_terms() {
        let i = DMatrix::from_diagonal_element(2, 2, c(1.0));
        let lcu = lcu_decompose(&i).unwrap();
        assert_eq!(lcu.len(), 1);
        assert_eq!(lcu.terms()[0].pauli.label(), "I");
        assert!((lcu.terms()[0].coefficient - 1.0).abs() < 1e-15);
        assert_eq!(lcu_histogram(&lcu), vec![(0, 1.0)]);

        let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let lcu = lcu_decompose(&z).unwrap();
        assert_eq!(lcu.len(), 1);
        assert_eq!(lcu.terms()[0].pauli.label(), "Z");
    }

    #[test]
    fn truncation_keeps_dominant_term() {
        let h = DMatrix::from_row_slice(2, 2, &[c(1.1), c(0.0), c(0.0), c(0.9)]);
        let lcu = lcu_decompose(&h).unwrap();
        assert_eq!(lcu.len(), 2);
        let full = lcu_truncate(&lcu, 2).unwrap();
        assert_eq!(full.truncation_error(), 0.0);
        let one = lcu_truncate(&lcu, 1).unwrap();
        assert_eq!(one.terms()[0].pauli.label(), "I");
        assert!((one.terms()[0].coefficient - 1.0).abs() < 1e-15);
        assert!((one.truncation_error() - 0.1 * 2f64.sqrt()).abs() < 1e-14);
        assert!(one.parseval_residual() < 1e-12);
        assert!(matches!(lcu_truncate(&lcu, 3), Err(Error::TruncationOutOfRange { .. })));
        assert!(lcu_truncate(&lcu, 0).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
            + DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        let lcu = lcu_decompose(&h).unwrap();
        let labels: Vec<String> = lcu.terms().iter().map(|t| t.pauli.label()).collect();
        assert_eq!(labels, vec!["X", "Z"]);
    }

    #[test]
    fn non_power_of_two_is_rejected() {
        let h = DMatrix::<Complex64>::identity(3, 3);
        assert!(matches!(lcu_decompose(&h), Err(Error::NotPowerOfTwo(3))));
        let not_hermitian = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(lcu_decompose(&not_hermitian), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn embedding_of_symmetric_block_has_signed_singular_values() {
        let b = SparseMatrix::from_triplets(2, 2, [(0, 0, 2.0), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 1.0)]).unwrap();
        let sys = hermitian_embed(&b, &[1.0, 0.0]).unwrap();
        assert_eq!(sys.dim(), 4);
        assert_eq!(sys.rhs, vec![1.0, 0.0, 0.0, 0.0]);
        let (values, _) = hermitian_eigen(&sys.h);
        let sv = b.to_dense().singular_values();
        let mut expected: Vec<f64> = sv.iter().flat_map(|&s| [s, -s]).collect();
        expected.sort_by(f64::total_cmp);
        for (a, e) in values.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_embedding_spectrum() {
        let sys = hermitian_embed(&SparseMatrix::identity(2), &[0.3, -0.7]).unwrap();
        let (values, _) = hermitian_eigen(&sys.h);
        for (a, e) in values.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - e).abs() < 1e-12);
        }
        // H (0, q) = (r, 0) with q = r.
        let x = sys.embed_solution(&[0.3, -0.7]);
        let hx = to_complex(&DMatrix::from_column_slice(4, 1, &x));
        let hx = &sys.h * hx;
        for k in 0..4 {
            assert!((hx[k].re - sys.rhs[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn padding_rows_are_identity() {
        let b = SparseMatrix::identity(3);
        let sys = hermitian_embed(&b, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sys.dim(), 8);
        assert_eq!(sys.n_qubits, 3);
        for k in 6..8 {
            assert_eq!(sys.h[(k, k)], c(1.0));
            assert_eq!(sys.rhs[k], 0.0);
            for j in 0..8 {
                if j != k {
                    assert_eq!(sys.h[(k, j)], c(0.0));
                }
            }
        }
        assert_eq!(sys.solution_range(), 3..6);
    }

    #[test]
    fn csv_lists_labels() {
        let lcu = LcuDecomposition::from_terms(
            3,
            [LcuTerm {
                coefficient: 0.125,
                pauli: "XZI".parse().unwrap(),
            }],
        )
        .unwrap();
        assert_eq!(lcu.to_csv(), "pauli_string,coefficient\nXZI,0.125\n");
    }
}
