//! Second-quantized operators assembled as sparse matrices on an occupation basis.
//!
//! Matrix elements leaving the space (total particle number above `n_max`, or a
//! different sector for sector spaces) are dropped, so each builder returns the
//! compression of the operator to the truncated space.

use nalgebra::DMatrix;

use super::basis::OccupationSpace;
use crate::model::TwoBodyKernel;
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// `coeff * a^*_{c_1} ... a^*_{c_p} a_{d_1} ... a_{d_q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: C64,
    pub create: Vec<usize>,
    pub annihilate: Vec<usize>,
}

impl Monomial {
    pub fn new(coeff: C64, create: &[usize], annihilate: &[usize]) -> Self {
        Self {
            coeff,
            create: create.to_vec(),
            annihilate: annihilate.to_vec(),
        }
    }
}

/// Applies a normal-ordered monomial to an occupation tuple in place; returns the
/// amplitude, or `None` when the result vanishes or overflows.
fn act(buf: &mut [u8], create: &[usize], annihilate: &[usize]) -> Option<f64> {
    let mut amp = 1.0;
    for &d in annihilate.iter().rev() {
        let n = buf[d];
        if n == 0 {
            return None;
        }
        amp *= f64::from(n).sqrt();
        buf[d] = n - 1;
    }
    for &c in create.iter().rev() {
        let n = buf[c].checked_add(1)?;
        amp *= f64::from(n).sqrt();
        buf[c] = n;
    }
    Some(amp)
}

/// Sparse matrix of `sum_k terms[k]` on `space`.
pub fn assemble<S: OccupationSpace + ?Sized>(space: &S, terms: &[Monomial]) -> SparseOperator {
    let dim = space.dim();
    let mut trips = Vec::new();
    let mut buf = vec![0u8; space.modes()];
    for col in 0..dim {
        let occ = space.state(col);
        for t in terms {
            if t.coeff == C64::new(0.0, 0.0) {
                continue;
            }
            buf.copy_from_slice(occ);
            if let Some(amp) = act(&mut buf, &t.create, &t.annihilate) {
                if let Some(row) = space.index_of(&buf) {
                    trips.push((row, col, t.coeff * amp));
                }
            }
        }
    }
    SparseOperator::from_triplets(dim, trips)
}

/// `a^*(f) = sum_x f_x a^*_x`.
pub fn create_op<S: OccupationSpace + ?Sized>(space: &S, f: &[C64]) -> SparseOperator {
    assert_eq!(f.len(), space.modes());
    let terms: Vec<Monomial> = f
        .iter()
        .enumerate()
        .map(|(x, &fx)| Monomial::new(fx, &[x], &[]))
        .collect();
    assemble(space, &terms)
}

/// `a(f) = sum_x conj(f_x) a_x`, the exact adjoint of [`create_op`].
pub fn annihilate_op<S: OccupationSpace + ?Sized>(space: &S, f: &[C64]) -> SparseOperator {
    create_op(space, f).adjoint()
}

/// `dGamma(A) = sum_{x,y} A_xy a^*_x a_y`.
pub fn dgamma<S: OccupationSpace + ?Sized>(space: &S, a: &DMatrix<C64>) -> SparseOperator {
    let m = space.modes();
    assert_eq!((a.nrows(), a.ncols()), (m, m));
    let mut terms = Vec::with_capacity(m * m);
    for x in 0..m {
        for y in 0..m {
            terms.push(Monomial::new(a[(x, y)], &[x], &[y]));
        }
    }
    assemble(space, &terms)
}

pub fn number_op<S: OccupationSpace + ?Sized>(space: &S) -> SparseOperator {
    let diag: Vec<f64> = (0..space.dim()).map(|i| space.particles(i) as f64).collect();
    SparseOperator::diagonal_real(&diag)
}

/// Largest `|K_xy - K_yx|`.
pub fn symmetry_defect(k: &DMatrix<C64>) -> f64 {
    (k - k.transpose()).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Creation half `1/2 sum K_xy a^*_x a^*_y` of the pairing operator.
pub fn pair_creation_op<S: OccupationSpace + ?Sized>(space: &S, k: &DMatrix<C64>) -> SparseOperator {
    let m = space.modes();
    let mut terms = Vec::with_capacity(m * m);
    for x in 0..m {
        for y in 0..m {
            terms.push(Monomial::new(k[(x, y)] * 0.5, &[x, y], &[]));
        }
    }
    assemble(space, &terms)
}

/// `1/2 sum (K_xy a^*_x a^*_y + conj(K_xy) a_x a_y)` for symmetric `K`.
pub fn pairing_op<S: OccupationSpace + ?Sized>(space: &S, k: &DMatrix<C64>) -> Result<SparseOperator> {
    let m = space.modes();
    if (k.nrows(), k.ncols()) != (m, m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: k.nrows(),
        });
    }
    let defect = symmetry_defect(k);
    if defect > 1e-12 {
        return Err(Error::NotSymmetric(defect));
    }
    let half = pair_creation_op(space, k);
    Ok(half.add(&half.adjoint()))
}

/// `1/2 sum_{x,y} W_xy a^*_x a^*_y a_y a_x`, diagonal in occupation numbers.
pub fn two_body_op<S: OccupationSpace + ?Sized>(space: &S, w: &TwoBodyKernel) -> SparseOperator {
    let m = space.modes();
    assert_eq!(w.dim(), m);
    let diag: Vec<f64> = (0..space.dim())
        .map(|i| {
            let occ = space.state(i);
            let mut e = 0.0;
            for x in 0..m {
                let nx = f64::from(occ[x]);
                if nx == 0.0 {
                    continue;
                }
                e += 0.5 * w.get(x, x) * nx * (nx - 1.0);
                for y in x + 1..m {
                    e += w.get(x, y) * nx * f64::from(occ[y]);
                }
            }
            e
        })
        .collect();
    SparseOperator::diagonal_real(&diag)
}

/// `1/2 sum_{a,b,c,d} V(a,b,c,d) a^*_a a^*_b a_c a_d`.
pub fn quartic_op<S: OccupationSpace + ?Sized>(
    space: &S,
    v: impl Fn(usize, usize, usize, usize) -> C64,
) -> SparseOperator {
    let m = space.modes();
    let mut terms = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let val = v(a, b, c, d);
                    if val != C64::new(0.0, 0.0) {
                        terms.push(Monomial::new(0.5 * val, &[a, b], &[c, d]));
                    }
                }
            }
        }
    }
    assemble(space, &terms)
}

/// `sum_{a,b,c} T(a,b,c) a^*_a a_b a_c`.
pub fn cubic_op<S: OccupationSpace + ?Sized>(
    space: &S,
    t: impl Fn(usize, usize, usize) -> C64,
) -> SparseOperator {
    let m = space.modes();
    let mut terms = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let val = t(a, b, c);
                if val != C64::new(0.0, 0.0) {
                    terms.push(Monomial::new(val, &[a], &[b, c]));
                }
            }
        }
    }
    assemble(space, &terms)
}

/// Verifies that every entry changes the particle number by one of `band`.
pub fn check_band<S: OccupationSpace + ?Sized>(space: &S, op: &SparseOperator, band: &[i64]) -> Result<()> {
    for (r, c, _) in op.entries() {
        let delta = space.particles(r) as i64 - space.particles(c) as i64;
        if !band.contains(&delta) {
            return Err(Error::BandViolation(delta));
        }
    }
    Ok(())
}

/// Diagonal operator `f(occupation)`.
pub fn diagonal_op<S: OccupationSpace + ?Sized>(space: &S, f: impl Fn(&[u8]) -> f64) -> SparseOperator {
    let diag: Vec<f64> = (0..space.dim()).map(|i| f(space.state(i))).collect();
    SparseOperator::diagonal_real(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::basis::FockBasis;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn creation_on_vacuum_single_mode() {
        let b = FockBasis::new(1, 3).unwrap();
        let a = create_op(&b, &[c(1.0)]);
        // |n> -> sqrt(n+1) |n+1>
        for n in 0..3 {
            assert!((a.get(n + 1, n) - c(((n + 1) as f64).sqrt())).norm() < 1e-15);
        }
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn ccr_on_low_sectors() {
        let b = FockBasis::new(3, 5).unwrap();
        let f = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.7, 0.0)];
        let g = [C64::new(0.1, -0.4), C64::new(0.6, 0.2), C64::new(-0.3, 0.3)];
        let af = annihilate_op(&b, &f);
        let ag_star = create_op(&b, &g);
        let comm = af.matmul(&ag_star).sub(&ag_star.matmul(&af));
        let fg: C64 = f.iter().zip(&g).map(|(x, y)| x.conj() * y).sum();
        // [a(f), a*(g)] = <f, g> away from the truncation edge.
        let low = b.sector_range(4).start;
        for (r, cc, v) in comm.entries() {
            if r < low && cc < low {
                let want = if r == cc { fg } else { C64::new(0.0, 0.0) };
                assert!((v - want).norm() < 1e-13);
            }
        }
        for i in 0..low {
            assert!((comm.get(i, i) - fg).norm() < 1e-13);
        }
    }

    #[test]
    fn pairing_on_vacuum() {
        let b = FockBasis::new(2, 2).unwrap();
        let mut k = DMatrix::<C64>::zeros(2, 2);
        k[(0, 0)] = c(1.0);
        let p = pairing_op(&b, &k).unwrap();
        let idx = b.index_of(&[2, 0]).unwrap();
        assert!((p.get(idx, 0) - c(0.5 * 2f64.sqrt())).norm() < 1e-15);
        assert!(p.hermiticity_defect() < 1e-15);
        check_band(&b, &p, &[-2, 2]).unwrap();
    }

    #[test]
    fn asymmetric_pairing_kernel_is_rejected() {
        let b = FockBasis::new(2, 2).unwrap();
        let mut k = DMatrix::<C64>::zeros(2, 2);
        k[(0, 1)] = c(1.0);
        assert!(matches!(pairing_op(&b, &k), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn two_body_matches_quartic_assembly() {
        let basis = crate::model::ModeBasis::new(3, 1.0).unwrap();
        let w = crate::model::build_interaction(&basis, |r| (-r * r).exp()).unwrap();
        let b = FockBasis::new(3, 4).unwrap();
        let diag = two_body_op(&b, &w);
        let quartic = quartic_op(&b, |a, bb, cc, d| {
            if a == d && bb == cc {
                c(w.get(a, bb))
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((diag.to_dense() - quartic.to_dense()).norm() < 1e-13);
    }

    #[test]
    fn dgamma_identity_is_number() {
        let b = FockBasis::new(3, 3).unwrap();
        let d = dgamma(&b, &DMatrix::identity(3, 3));
        assert!((d.to_dense() - number_op(&b).to_dense()).norm() < 1e-14);
        check_band(&b, &d, &[0]).unwrap();
    }
}
