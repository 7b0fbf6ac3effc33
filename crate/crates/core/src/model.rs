//! Lattice discretization: modes, the free one-body operator and the pair interaction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eig, hermiticity_defect};
use crate::{Error, Result, C64};

/// `M` equally spaced sites on a ring of circumference `M * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub modes: usize,
    pub spacing: f64,
}

impl ModeBasis {
    pub fn new(modes: usize, spacing: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { modes, spacing })
    }

    pub fn length(&self) -> f64 {
        self.modes as f64 * self.spacing
    }

    pub fn position(&self, i: usize) -> f64 {
        i as f64 * self.spacing
    }

    /// Minimal-image displacement `x_i - x_j`, in `(-L/2, L/2]`.
    pub fn displacement(&self, i: usize, j: usize) -> f64 {
        let m = self.modes as i64;
        let mut d = (i as i64 - j as i64).rem_euclid(m);
        if 2 * d > m {
            d -= m;
        }
        d as f64 * self.spacing
    }
}

/// Hermitian operator on the one-particle space.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyOperator {
    matrix: DMatrix<C64>,
}

impl OneBodyOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let defect = hermiticity_defect(&matrix);
        let scale = matrix.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if defect > 1e-12 * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Adds a real external potential on the diagonal.
    pub fn with_potential(&self, potential: &[f64]) -> Result<Self> {
        if potential.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: potential.len(),
            });
        }
        let mut m = self.matrix.clone();
        for (i, v) in potential.iter().enumerate() {
            m[(i, i)] += C64::new(*v, 0.0);
        }
        Ok(Self { matrix: m })
    }
}

/// Periodic finite-difference Laplacian `-Δ` with stencil `(-1, 2, -1) / s^2`.
pub fn build_kinetic(basis: &ModeBasis) -> OneBodyOperator {
    let m = basis.modes;
    let s2 = basis.spacing * basis.spacing;
    let mut h = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        h[(i, i)] += C64::new(2.0 / s2, 0.0);
        h[(i, (i + 1) % m)] -= C64::new(1.0 / s2, 0.0);
        h[(i, (i + m - 1) % m)] -= C64::new(1.0 / s2, 0.0);
    }
    OneBodyOperator { matrix: h }
}

/// Real symmetric pair kernel `W[x][y] = w(x - y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyKernel {
    matrix: DMatrix<f64>,
}

impl TwoBodyKernel {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * factor,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|v| *v == 0.0)
    }
}

/// Interaction profiles selectable from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interaction {
    Constant { value: f64 },
    /// `strength * exp(-(r / width)^2)`.
    Gaussian { strength: f64, width: f64 },
    Zero,
    /// `values[d]` is `w` at displacement `d * spacing`, `d = 0..M`; must satisfy
    /// `values[d] == values[M - d]`.
    Table { values: Vec<f64> },
}

/// Samples an even profile at all lattice displacements.
pub fn build_interaction(basis: &ModeBasis, w: impl Fn(f64) -> f64) -> Result<TwoBodyKernel> {
    let m = basis.modes;
    for d in 0..m {
        let r = basis.displacement(d, 0);
        let (a, b) = (w(r), w(-r));
        if !a.is_finite() {
            return Err(Error::InvalidInput(format!("interaction is not finite at r = {r}")));
        }
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::NotSymmetric((a - b).abs()));
        }
    }
    let matrix = DMatrix::from_fn(m, m, |x, y| w(basis.displacement(x, y)));
    Ok(TwoBodyKernel { matrix })
}

pub fn build_interaction_kind(basis: &ModeBasis, kind: &Interaction) -> Result<TwoBodyKernel> {
    match kind {
        Interaction::Constant { value } => build_interaction(basis, |_| *value),
        Interaction::Gaussian { strength, width } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidInput("gaussian width must be positive".into()));
            }
            build_interaction(basis, |r| strength * (-(r / width).powi(2)).exp())
        }
        Interaction::Zero => build_interaction(basis, |_| 0.0),
        Interaction::Table { values } => {
            let m = basis.modes;
            if values.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: values.len(),
                });
            }
            for d in 0..m {
                let (a, b) = (values[d], values[(m - d) % m]);
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric((a - b).abs()));
                }
            }
            let matrix = DMatrix::from_fn(m, m, |x, y| values[(x + m - y) % m]);
            Ok(TwoBodyKernel { matrix })
        }
    }
}

/// Smallest `C` with `D_w^2 <= C (1 + h0)`, where `D_w` multiplies by the profile
/// `x -> w(x - x_0)`. Equals the top eigenvalue of `(1+h0)^{-1/2} D_w^2 (1+h0)^{-1/2}`.
pub fn relative_bound_constant(w: &TwoBodyKernel, h0: &OneBodyOperator) -> Result<f64> {
    let m = h0.dim();
    if w.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: w.dim(),
        });
    }
    let shifted = h0.matrix() + DMatrix::<C64>::identity(m, m);
    let (vals, vecs) = hermitian_eig(&shifted);
    if vals[0] <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "1 + h0 is not positive definite (lowest eigenvalue {})",
            vals[0]
        )));
    }
    let inv_sqrt = &vecs
        * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            m,
            vals.iter().map(|v| C64::new(v.powf(-0.5), 0.0)),
        ))
        * vecs.adjoint();
    let dw2 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        (0..m).map(|x| C64::new(w.get(x, 0).powi(2), 0.0)),
    ));
    let sandwich = &inv_sqrt * dw2 * &inv_sqrt;
    Ok(crate::linalg::max_eigenvalue(&sandwich))
}

/// `v[x] = sum_y W[x][y] |u_y|^2`.
pub fn mean_field(w: &TwoBodyKernel, u: &[C64]) -> Vec<f64> {
    let m = w.dim();
    (0..m)
        .map(|x| (0..m).map(|y| w.get(x, y) * u[y].norm_sqr()).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_mode_laplacian() {
        let b = ModeBasis::new(2, 1.0).unwrap();
        let h = build_kinetic(&b);
        let want = [[2.0, -2.0], [-2.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(h.matrix()[(i, j)], C64::new(want[i][j], 0.0));
            }
        }
    }

    #[test]
    fn laplacian_spectrum_is_nonnegative_with_zero_mode() {
        let b = ModeBasis::new(5, 0.5).unwrap();
        let vals = crate::linalg::hermitian_eigenvalues(build_kinetic(&b).matrix());
        assert!(vals[0].abs() < 1e-12);
        assert!(vals.iter().all(|v| *v > -1e-12));
    }

    #[test]
    fn minimal_image_displacement() {
        let b = ModeBasis::new(4, 1.0).unwrap();
        assert_eq!(b.displacement(3, 0), -1.0);
        assert_eq!(b.displacement(0, 3), 1.0);
        assert_eq!(b.displacement(2, 0), 2.0);
    }

    #[test]
    fn asymmetric_profile_is_rejected() {
        let b = ModeBasis::new(3, 1.0).unwrap();
        assert!(build_interaction(&b, |r| r).is_err());
        let t = Interaction::Table { values: vec![1.0, 0.5, 0.2] };
        assert!(build_interaction_kind(&b, &t).is_err());
    }

    #[test]
    fn non_hermitian_one_body_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(OneBodyOperator::new(m).is_err());
    }

    #[test]
    fn constant_unit_interaction_bound_is_one() {
        let b = ModeBasis::new(6, 1.0).unwrap();
        let w = build_interaction_kind(&b, &Interaction::Constant { value: 1.0 }).unwrap();
        let c = relative_bound_constant(&w, &build_kinetic(&b)).unwrap();
        assert!((c - 1.0).abs() < 1e-12, "{c}");
    }
}
