//! Dense helpers: hermitian eigendecompositions, vector algebra, dense propagators.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Largest `|A - A^*|` entry.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub use crate::eigen::{hermitian_eig, hermitian_eigenvalues};

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Trace norm of a hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Applies `f` to the spectrum of a hermitian matrix.
pub fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eig(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v))));
    &vecs * d * vecs.adjoint()
}

/// `exp(-i tau H)` for hermitian `H`.
pub fn expm_hermitian(h: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    hermitian_function(h, |l| C64::from_polar(1.0, -tau * l))
}

/// Cached eigendecomposition for repeated application of `exp(-i tau H)`.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    vals: Vec<f64>,
    vecs: DMatrix<C64>,
}

impl DensePropagator {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let (vals, vecs) = hermitian_eig(h);
        Self { vals, vecs }
    }

    pub fn apply(&self, v: &[C64], tau: f64) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        let mut coeff = self.vecs.adjoint() * x;
        for (c, &l) in coeff.iter_mut().zip(&self.vals) {
            *c *= C64::from_polar(1.0, -tau * l);
        }
        (&self.vecs * coeff).iter().copied().collect()
    }
}

pub fn to_dvector(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_pauli_x() {
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        let t = 0.7f64;
        let u = expm_hermitian(&h, t);
        assert!((u[(0, 0)] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - C64::new(0.0, -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(-0.25, 0.0),
        ]));
        assert!((trace_norm(&m) - 0.75).abs() < 1e-15);
    }
}
