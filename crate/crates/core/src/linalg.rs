//! Small dense helpers over `DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Number of singular values above `rel_tol · ‖m‖`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// `f g^H`, the coordinate form of `f ⊗ g`.
pub fn outer(f: &[Complex64], g: &[Complex64]) -> CMatrix {
    DMatrix::from_fn(f.len(), g.len(), |i, j| f[i] * g[j].conj())
}

pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|c| c.conj())
}

pub fn column(v: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(v)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_norm_of_outer_product() {
        let f = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        let g = [Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)];
        let m = outer(&f, &g);
        assert_eq!(numerical_rank(&m, 1e-8), 1);
        let expected = (5.0f64).sqrt() * (3.0f64).sqrt();
        assert!((op_norm(&m) - expected).abs() < 1e-12);
        assert_eq!(numerical_rank(&CMatrix::zeros(3, 3), 1e-8), 0);
    }
}
