//! Weyl operators `W(f) = exp(a^*(f) - a(f))` on the truncated Fock space and the
//! fluctuation dynamics generated with the unprojected kernels `K1~`, `K2~`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bogoliubov::{
    build_kernels, check_initial, evolve, quadratic_hamiltonian, BogHamiltonian, FluctuationOptions, FluctuationRun,
};
use crate::fock::{annihilate_op, create_op, product_state, FockBasis, FockVector, OccupationSpace};
use crate::hartree::{hartree_hamiltonian, HartreeTrajectory};
use crate::linalg;
use crate::model::{OneBodyOperator, TwoBodyKernel};
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// Largest tolerated Poisson mass above the truncation.
pub const TAIL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct WeylOperator {
    pub f: Vec<C64>,
    pub matrix: DMatrix<C64>,
    basis: Arc<FockBasis>,
}

impl WeylOperator {
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    /// `W(f) Omega`.
    pub fn coherent_state(&self) -> FockVector {
        let amps = self.matrix.column(0).iter().copied().collect();
        FockVector {
            basis: self.basis.clone(),
            amps,
        }
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        let amps = (&self.matrix * linalg::to_dvector(&v.amps)).iter().copied().collect();
        FockVector {
            basis: self.basis.clone(),
            amps,
        }
    }

    /// Highest particle number on which the truncated operator is trusted:
    /// `n_max - ceil(|f|^2 + 6 |f|)`.
    pub fn safe_core(&self) -> usize {
        safe_core(&self.f, self.basis.n_max())
    }
}

pub fn safe_core(f: &[C64], n_max: usize) -> usize {
    let r = linalg::norm(f);
    n_max.saturating_sub((r * r + 6.0 * r).ceil() as usize)
}

/// Poisson mass `P(n > n_max)` with mean `|f|^2`.
pub fn poisson_tail(mean: f64, n_max: usize) -> f64 {
    let mut term = (-mean).exp();
    for n in 1..=n_max {
        term *= mean / n as f64;
    }
    let mut tail = 0.0;
    let mut n = n_max;
    loop {
        n += 1;
        term *= mean / n as f64;
        tail += term;
        if term <= tail * 1e-17 || term < 1e-300 {
            return tail;
        }
    }
}

pub fn weyl_op(f: &[C64], basis: Arc<FockBasis>) -> Result<WeylOperator> {
    if f.len() != basis.modes() {
        return Err(Error::DimensionMismatch {
            expected: basis.modes(),
            found: f.len(),
        });
    }
    let mean = linalg::norm(f).powi(2);
    let n_max = basis.n_max();
    if mean > n_max as f64 / 4.0 {
        return Err(Error::Precondition(format!(
            "|f|^2 = {mean} exceeds n_max / 4 = {}",
            n_max as f64 / 4.0
        )));
    }
    let tail = poisson_tail(mean, n_max);
    if tail > TAIL_LIMIT {
        return Err(Error::Precondition(format!("coherent tail {tail:.3e} above the truncation")));
    }
    // exp(a^*(f) - a(f)) = exp(-i H) with hermitian H = i (a^*(f) - a(f)).
    let gen = create_op(basis.as_ref(), f).sub(&annihilate_op(basis.as_ref(), f));
    let h = gen.scale(C64::new(0.0, 1.0)).to_dense();
    Ok(WeylOperator {
        f: f.to_vec(),
        matrix: linalg::expm_hermitian(&h, 1.0),
        basis,
    })
}

/// `exp(-|f|^2 / 2) sum_n f^{(x)n} / sqrt(n!)` truncated at `n_max`.
pub fn coherent_series(f: &[C64], basis: Arc<FockBasis>) -> FockVector {
    let mean = linalg::norm(f).powi(2);
    let mut out = FockVector::zeros(basis.clone());
    let mut inv_fact_root = 1.0;
    for n in 0..=basis.n_max() {
        if n > 0 {
            inv_fact_root /= (n as f64).sqrt();
        }
        let block = product_state(f, basis.sector(n).clone());
        for (slot, a) in out.sector_mut(n).iter_mut().zip(&block.amps) {
            *slot = a * (inv_fact_root * (-0.5 * mean).exp());
        }
    }
    out
}

/// `dGamma(h + K1~) + pairing(K2~)`.
pub fn assemble_tilde_h(
    u: &[C64],
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    basis: &FockBasis,
) -> Result<BogHamiltonian> {
    let kern = build_kernels(u, w)?;
    let h = hartree_hamiltonian(h0, w, u);
    let op = quadratic_hamiltonian(basis, &(&h + &kern.k1_tilde), &kern.k2_tilde)?;
    Ok(BogHamiltonian { op, h, time: 0.0 })
}

/// `i dXi/dt = H~(t) Xi` with the exponential midpoint rule; no tangency requirement.
pub fn solve_coherent_fluct(
    xi0: &FockVector,
    traj: &HartreeTrajectory,
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    times: &[f64],
    opts: &FluctuationOptions,
) -> Result<FluctuationRun> {
    check_initial(xi0, None)?;
    let basis = xi0.basis.clone();
    let generator = |u: &[C64]| -> Result<(SparseOperator, DMatrix<C64>)> {
        let kern = build_kernels(u, w)?;
        let h = hartree_hamiltonian(h0, w, u);
        let op = quadratic_hamiltonian(basis.as_ref(), &(&h + &kern.k1_tilde), &kern.k2_tilde)?;
        Ok((op, kern.k2_tilde))
    };
    evolve(xi0, traj, h0, times, opts, &generator, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::assemble_bog_h;
    use crate::model::{build_interaction, build_kinetic, ModeBasis};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_displacement_is_identity() {
        let basis = Arc::new(FockBasis::new(2, 4).unwrap());
        let w = weyl_op(&[c(0.0, 0.0); 2], basis.clone()).unwrap();
        assert!((w.matrix.clone() - DMatrix::identity(basis.dim(), basis.dim())).norm() < 1e-13);
    }

    #[test]
    fn coherent_state_matches_series() {
        let basis = Arc::new(FockBasis::new(2, 14).unwrap());
        let f = [c(0.4, 0.2), c(-0.1, 0.3)];
        let w = weyl_op(&f, basis.clone()).unwrap();
        let psi = w.coherent_state();
        let series = coherent_series(&f, basis);
        assert!(psi.distance(&series).unwrap() < 1e-8);
        assert!((psi.number_expectation() - linalg::norm(&f).powi(2)).abs() < 1e-8);
    }

    #[test]
    fn rejects_heavy_tail() {
        let basis = Arc::new(FockBasis::new(1, 4).unwrap());
        assert!(weyl_op(&[c(1.0, 0.0)], basis).is_err());
    }

    #[test]
    fn poisson_tail_values() {
        assert!((poisson_tail(1.0, 0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(poisson_tail(0.0, 3) == 0.0);
    }

    #[test]
    fn tilde_hamiltonian_differs_only_with_interaction() {
        let b = ModeBasis::new(3, 1.0).unwrap();
        let h0 = build_kinetic(&b);
        let basis = FockBasis::new(3, 3).unwrap();
        let u: Vec<C64> = [c(0.6, 0.0), c(0.0, 0.64), c(0.48, 0.0)].to_vec();
        let zero = build_interaction(&b, |_| 0.0).unwrap();
        let a = assemble_tilde_h(&u, &h0, &zero, &basis).unwrap();
        let p = assemble_bog_h(&u, &h0, &zero, &basis).unwrap();
        assert_eq!(a.op.sub(&p.op).max_abs(), 0.0);
        let w = build_interaction(&b, |r| (-r * r).exp()).unwrap();
        let a = assemble_tilde_h(&u, &h0, &w, &basis).unwrap();
        let p = assemble_bog_h(&u, &h0, &w, &basis).unwrap();
        assert!(a.op.sub(&p.op).max_abs() > 1e-3);
    }
}
