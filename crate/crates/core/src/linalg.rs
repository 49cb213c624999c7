//! Dense symmetric eigen-decomposition with ascending ordering.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen(a: &DMatrix<f64>) -> Eigen {
    let se = SymmetricEigen::new(a.clone());
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(a.nrows(), n);
    for (c, &i) in order.iter().enumerate() {
        let mut col: DVector<f64> = se.eigenvectors.column(i).into_owned();
        // fix the sign so the largest component is positive; keeps output deterministic
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
        if col[imax] < 0.0 {
            col = -col;
        }
        vectors.set_column(c, &col);
    }
    Eigen { values, vectors }
}

/// Spectral norm of a real matrix (largest singular value).
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let e = symmetric_eigen(&ata);
    e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal_is_sorted() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![3.0, -1.0, 2.0]));
        let e = symmetric_eigen(&a);
        assert_eq!(e.values, alloc::vec![-1.0, 2.0, 3.0]);
        assert!((e.vectors[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruction() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let e = symmetric_eigen(&a);
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let r = &e.vectors * d * e.vectors.transpose();
        assert!((r - a).norm() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_rotation_is_one() {
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let a = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((spectral_norm(&a) - 1.0).abs() < 1e-12);
    }
}
