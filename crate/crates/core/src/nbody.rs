//! Exact mean-field `N`-body dynamics on a fixed particle-number sector.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::fock::symmetric::binomial_f64;
use crate::fock::{dgamma, two_body_op, OccupationSpace, SectorBasis, SectorVector};
use crate::krylov::{expm_apply, KrylovOptions};
use crate::linalg::{self, DensePropagator};
use crate::model::{OneBodyOperator, TwoBodyKernel};
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// `H_N = dGamma(h0) + 1/(N-1) sum_{i<j} w(x_i - x_j)` restricted to sector `N`.
#[derive(Debug, Clone)]
pub struct NBodyHamiltonian {
    pub sector: Arc<SectorBasis>,
    pub op: SparseOperator,
}

impl NBodyHamiltonian {
    pub fn particles(&self) -> usize {
        self.sector.particles()
    }

    pub fn energy(&self, psi: &SectorVector) -> f64 {
        self.op.expectation(&psi.amps).re
    }
}

pub fn build_hamiltonian(h0: &OneBodyOperator, w: &TwoBodyKernel, particles: usize) -> Result<NBodyHamiltonian> {
    if particles < 2 {
        return Err(Error::InvalidInput(format!(
            "the mean-field coupling 1/(N-1) needs N >= 2, got {particles}"
        )));
    }
    if w.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: w.dim(),
        });
    }
    let sector = Arc::new(SectorBasis::new(h0.dim(), particles)?);
    let kinetic = dgamma(sector.as_ref(), h0.matrix());
    let pair = two_body_op(sector.as_ref(), w);
    let op = kinetic.lin_comb(
        C64::new(1.0, 0.0),
        &pair,
        C64::new(1.0 / (particles as f64 - 1.0), 0.0),
    );
    Ok(NBodyHamiltonian { sector, op })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub krylov: KrylovOptions,
    /// Sectors smaller than this are propagated by dense diagonalization.
    pub dense_threshold: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            krylov: KrylovOptions::default(),
            dense_threshold: 500,
        }
    }
}

/// `Psi(t) = exp(-i t H_N) Psi_0` at each of the nondecreasing `times >= 0`.
pub fn propagate_exact(
    h: &NBodyHamiltonian,
    psi0: &SectorVector,
    times: &[f64],
    opts: &PropagationOptions,
) -> Result<Vec<SectorVector>> {
    if psi0.basis.as_ref() != h.sector.as_ref() {
        return Err(Error::InvalidInput("initial state lives in a different sector".into()));
    }
    if times.iter().any(|t| *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("output times must be nonnegative and nondecreasing".into()));
    }
    let dense = (h.sector.dim() < opts.dense_threshold).then(|| DensePropagator::new(&h.op.to_dense()));
    let mut out = Vec::with_capacity(times.len());
    let mut cur = psi0.amps.clone();
    let mut t_cur = 0.0;
    for &t in times {
        let dt = t - t_cur;
        if dt > 0.0 {
            cur = match &dense {
                Some(p) => p.apply(&cur, dt),
                None => expm_apply(&h.op, &cur, dt, &opts.krylov)?,
            };
            t_cur = t;
        }
        out.push(SectorVector {
            basis: psi0.basis.clone(),
            amps: cur.clone(),
        });
    }
    Ok(out)
}

/// `k`-particle reduced density matrix with trace one, in the occupation basis of
/// sector `k`. Entries are `<Psi, A_b^* A_a Psi> / C(N, k)` with
/// `A_a = prod_x a_x^{a_x} / sqrt(a_x!)`.
pub fn reduced_density(psi: &SectorVector, k: usize) -> Result<DMatrix<C64>> {
    let n = psi.particles();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= k <= N = {n}, got {k}")));
    }
    let m = psi.modes();
    let small = SectorBasis::new(m, k)?;
    let rest = SectorBasis::new(m, n - k)?;
    let mut images = vec![vec![C64::new(0.0, 0.0); rest.dim()]; small.dim()];
    let mut buf = vec![0u8; m];
    for (i, &amp) in psi.amps.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = psi.basis.state(i);
        for (a, img) in images.iter_mut().enumerate() {
            let alpha = small.state(a);
            if alpha.iter().zip(occ).any(|(x, y)| x > y) {
                continue;
            }
            let mut coeff = 1.0;
            for x in 0..m {
                buf[x] = occ[x] - alpha[x];
                coeff *= binomial_f64(occ[x] as usize, alpha[x] as usize);
            }
            let r = rest.index_of(&buf).expect("remainder lies in sector N-k");
            img[r] += amp * coeff.sqrt();
        }
    }
    let norm = binomial_f64(n, k) * psi.norm().powi(2);
    let d = small.dim();
    Ok(DMatrix::from_fn(d, d, |a, b| linalg::inner(&images[b], &images[a]) / norm))
}

/// One-particle density matrix `gamma[x][y] = <a_y^* a_x> / N`.
pub fn one_particle_density(psi: &SectorVector) -> Result<DMatrix<C64>> {
    reduced_density(psi, 1)
}

/// `|u><u|`.
pub fn projector(u: &[C64]) -> DMatrix<C64> {
    let v = linalg::to_dvector(u);
    &v * v.adjoint()
}

/// `Tr |a - b|` for hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(linalg::trace_norm(&(a - b)))
}
