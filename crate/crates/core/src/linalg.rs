//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pivots below this magnitude abort elimination.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();

    for k in 0..n {
        let (pivot_row, pivot) = (k..n)
            .map(|r| (r, lu[(r, k)]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .expect("non-empty pivot column");
        if pivot.abs() < PIVOT_TOLERANCE {
            return Err(Error::SingularMatrix { column: k, pivot });
        }
        if pivot_row != k {
            lu.swap_rows(k, pivot_row);
            x.swap(k, pivot_row);
        }
        for r in (k + 1)..n {
            let factor = lu[(r, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in (k + 1)..n {
                lu[(r, c)] -= factor * lu[(k, c)];
            }
            lu[(r, k)] = 0.0;
            x[r] -= factor * x[k];
        }
    }
    for k in (0..n).rev() {
        let tail: f64 = ((k + 1)..n).map(|c| lu[(k, c)] * x[c]).sum();
        x[k] = (x[k] - tail) / lu[(k, k)];
    }
    Ok(x)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest entry of `|H - H^dagger|`.
pub fn hermitian_deviation(h: &DMatrix<Complex64>) -> f64 {
    (h - h.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `exp(i t H)` for Hermitian `H`, built from its eigendecomposition.
pub fn hermitian_exp_i(h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let (values, vectors) = hermitian_eigen(h);
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&l| Complex64::from_polar(1.0, l * t)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// Largest entry of `|U^dagger U - I|`.
pub fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let product = u.adjoint() * u;
    let identity = DMatrix::<Complex64>::identity(n, n);
    (product - identity).iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_with_pivoting() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let x = lu_solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        let residual = &a * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(vec![5.0, 3.0, 6.0]);
        assert!(residual.amax() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(Error::SingularMatrix { column: 1, .. })));
    }

    #[test]
    fn exp_of_pauli_z() {
        let z = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let u = hermitian_exp_i(&z, std::f64::consts::PI);
        assert!((u[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((u[(1, 1)] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!(u[(0, 1)].norm() < 1e-12);
        assert!(unitarity_deviation(&u) < 1e-12);
    }
}
