//! Lanczos approximation of `exp(-i tau H) v` for sparse hermitian `H`.
//!
//! The interval is split into substeps no longer than `max_substep`. Each substep
//! builds a Lanczos basis of dimension at most `dim` (fully reorthogonalized) and
//! is shortened until the a posteriori estimate `beta_0 * beta_m * |[exp(-i s T) e_1]_m|`
//! drops below `tol * s`.

use nalgebra::DMatrix;

use crate::eigen::tridiagonal_eig;
use crate::linalg::{axpy, inner, norm};
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub dim: usize,
    pub tol: f64,
    pub max_substep: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            dim: 30,
            tol: 1e-10,
            max_substep: 0.1,
        }
    }
}

struct LanczosBasis {
    q: Vec<Vec<C64>>,
    beta0: f64,
    beta_last: f64,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
}

impl LanczosBasis {
    fn build(h: &SparseOperator, v: &[C64], dim: usize) -> Self {
        let n = v.len();
        let beta0 = norm(v);
        let m_max = dim.min(n).max(1);
        let mut q: Vec<Vec<C64>> = vec![v.iter().map(|x| x / beta0).collect()];
        let mut alpha = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut beta_last = 0.0;
        for j in 0..m_max {
            h.apply_into(&q[j], &mut w);
            let a = inner(&q[j], &w).re;
            alpha.push(a);
            // Full reorthogonalization, applied twice.
            for _ in 0..2 {
                for qi in &q {
                    let c = inner(qi, &w);
                    axpy(-c, qi, &mut w);
                }
            }
            let b = norm(&w);
            beta_last = b;
            if j + 1 == m_max || b <= 1e-13 * (a.abs() + beta.last().copied().unwrap_or(0.0) + 1.0) {
                if j + 1 < m_max {
                    beta_last = 0.0;
                }
                break;
            }
            beta.push(b);
            q.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        beta.truncate(k - 1);
        q.truncate(k);
        let (eigvals, eigvecs) = tridiagonal_eig(&alpha, &beta, true);
        Self {
            q,
            beta0,
            beta_last,
            eigvals,
            eigvecs: eigvecs.expect("vectors requested"),
        }
    }

    /// Coefficients of `exp(-i s T) e_1` in the Lanczos basis.
    fn coefficients(&self, s: f64) -> Vec<C64> {
        let k = self.eigvals.len();
        (0..k)
            .map(|r| {
                (0..k)
                    .map(|c| {
                        C64::from_polar(1.0, -s * self.eigvals[c])
                            * (self.eigvecs[(r, c)] * self.eigvecs[(0, c)])
                    })
                    .sum()
            })
            .collect()
    }

    fn error_estimate(&self, coeff: &[C64]) -> f64 {
        self.beta0 * self.beta_last * coeff.last().map(|c| c.norm()).unwrap_or(0.0)
    }

    fn assemble(&self, coeff: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.q[0].len()];
        for (qi, c) in self.q.iter().zip(coeff) {
            axpy(c * self.beta0, qi, &mut out);
        }
        out
    }
}

/// `exp(-i tau H) v` for hermitian sparse `H`; `tau` may be negative.
pub fn expm_apply(h: &SparseOperator, v: &[C64], tau: f64, opts: &KrylovOptions) -> Result<Vec<C64>> {
    if v.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: v.len(),
        });
    }
    let mut out = v.to_vec();
    if tau == 0.0 || norm(v) == 0.0 {
        return Ok(out);
    }
    let sign = tau.signum();
    let total = tau.abs();
    let mut done = 0.0;
    let mut step = total.min(opts.max_substep);
    while done < total {
        let remaining = total - done;
        let mut s = step.min(remaining).min(opts.max_substep);
        let basis = LanczosBasis::build(h, &out, opts.dim);
        let mut halvings = 0;
        let coeff = loop {
            let coeff = basis.coefficients(sign * s);
            let est = basis.error_estimate(&coeff);
            if est <= opts.tol * s || basis.beta_last == 0.0 {
                break coeff;
            }
            halvings += 1;
            if halvings > 60 || s < 1e-14 * total.max(1.0) {
                return Err(Error::KrylovNotConverged { step: s, estimate: est });
            }
            s *= 0.5;
        };
        out = basis.assemble(&coeff);
        done += s;
        step = if halvings == 0 { (2.0 * s).min(opts.max_substep) } else { s };
        if remaining - s < 1e-15 * total {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm_hermitian;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn matches_dense_exponential() {
        let hd = random_hermitian(60, 7) * C64::new(4.0, 0.0);
        let h = SparseOperator::from_dense(&hd, 0.0);
        let v: Vec<C64> = (0..60).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        for &tau in &[0.3, -1.7, 5.0] {
            let got = expm_apply(&h, &v, tau, &KrylovOptions { max_substep: 0.5, ..Default::default() }).unwrap();
            let want = expm_hermitian(&hd, tau) * nalgebra::DVector::from_vec(v.clone());
            let err: f64 = got.iter().zip(want.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-9, "tau {tau}: err {err}");
        }
    }

    #[test]
    fn invariant_subspace_is_exact() {
        let h = SparseOperator::diagonal_real(&[1.0, 2.0, 3.0]);
        let v = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let out = expm_apply(&h, &v, 2.0, &KrylovOptions::default()).unwrap();
        assert!((out[0] - C64::from_polar(1.0, -2.0)).norm() < 1e-13);
    }
}
