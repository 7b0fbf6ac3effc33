//! Symmetric tensor products in occupation coordinates.
//!
//! For normalized occupation states `|a>` (k particles) and `|b>` (l particles) the
//! symmetric product with prefactor `1/sqrt(k! l! (k+l)!)` over all permutations is
//! `|a> (x)_s |b> = prod_i sqrt(C(a_i + b_i, a_i)) |a + b>`.

use std::sync::Arc;

use super::basis::{OccupationSpace, SectorBasis};
use super::vector::SectorVector;
use crate::linalg;
use crate::{Error, Result, C64};

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `k! / prod_i occ_i!`.
pub fn multinomial(occ: &[u8]) -> f64 {
    let mut total = 0usize;
    let mut acc = 1.0;
    for &o in occ {
        total += o as usize;
        acc *= binomial_f64(total, o as usize);
    }
    acc
}

/// `a^*(f)` from sector `n` to sector `n + 1`.
pub fn create_between(f: &[C64], v: &SectorVector, to: &Arc<SectorBasis>) -> Result<SectorVector> {
    check_chain(v, to, 1)?;
    let mut out = SectorVector::zeros(to.clone());
    let mut buf = vec![0u8; v.modes()];
    for (i, &amp) in v.amps.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = v.basis.state(i);
        for (x, &fx) in f.iter().enumerate() {
            if fx == C64::new(0.0, 0.0) {
                continue;
            }
            buf.copy_from_slice(occ);
            buf[x] += 1;
            let j = to.index_of(&buf).expect("target lies in the next sector");
            out.amps[j] += fx * amp * f64::from(buf[x]).sqrt();
        }
    }
    Ok(out)
}

/// `a(f)` from sector `n` to sector `n - 1`.
pub fn annihilate_between(f: &[C64], v: &SectorVector, to: &Arc<SectorBasis>) -> Result<SectorVector> {
    check_chain(v, to, -1)?;
    let mut out = SectorVector::zeros(to.clone());
    let mut buf = vec![0u8; v.modes()];
    for (i, &amp) in v.amps.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let occ = v.basis.state(i);
        for (x, &fx) in f.iter().enumerate() {
            if occ[x] == 0 || fx == C64::new(0.0, 0.0) {
                continue;
            }
            buf.copy_from_slice(occ);
            buf[x] -= 1;
            let j = to.index_of(&buf).expect("target lies in the previous sector");
            out.amps[j] += fx.conj() * amp * f64::from(occ[x]).sqrt();
        }
    }
    Ok(out)
}

fn check_chain(v: &SectorVector, to: &SectorBasis, step: i64) -> Result<()> {
    if to.modes() != v.modes() {
        return Err(Error::DimensionMismatch {
            expected: v.modes(),
            found: to.modes(),
        });
    }
    if to.particles() as i64 != v.particles() as i64 + step {
        return Err(Error::InvalidInput(format!(
            "target sector {} is not sector {} {:+}",
            to.particles(),
            v.particles(),
            step
        )));
    }
    Ok(())
}

/// `u^{(x)k}` in occupation coordinates: amplitude `sqrt(k!/occ!) prod_i u_i^{occ_i}`.
pub fn product_state(u: &[C64], basis: Arc<SectorBasis>) -> SectorVector {
    let amps = (0..basis.dim())
        .map(|i| {
            let occ = basis.state(i);
            let mut a = C64::new(multinomial(occ).sqrt(), 0.0);
            for (x, &o) in occ.iter().enumerate() {
                a *= u[x].powu(u32::from(o));
            }
            a
        })
        .collect();
    SectorVector { basis, amps }
}

/// `a (x)_s b`.
pub fn sym_tensor(a: &SectorVector, b: &SectorVector) -> Result<SectorVector> {
    if a.modes() != b.modes() {
        return Err(Error::DimensionMismatch {
            expected: a.modes(),
            found: b.modes(),
        });
    }
    if a.particles() == b.particles() && a.particles() > 0 && a.inner(b).norm() > 1e-12 * a.norm() * b.norm() {
        log::warn!("symmetric product of non-orthogonal factors: its norm is not the product of norms");
    }
    let target = Arc::new(SectorBasis::new(a.modes(), a.particles() + b.particles())?);
    let mut out = SectorVector::zeros(target.clone());
    let m = a.modes();
    let mut buf = vec![0u8; m];
    for (i, &x) in a.amps.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let oa = a.basis.state(i);
        for (j, &y) in b.amps.iter().enumerate() {
            if y == C64::new(0.0, 0.0) {
                continue;
            }
            let ob = b.basis.state(j);
            let mut coeff = 1.0;
            for k in 0..m {
                buf[k] = oa[k] + ob[k];
                coeff *= binomial_f64(buf[k] as usize, oa[k] as usize);
            }
            let idx = target.index_of(&buf).expect("sum of occupations lies in the target sector");
            out.amps[idx] += x * y * coeff.sqrt();
        }
    }
    Ok(out)
}

/// Dense symmetric tensor `psi(x_1, ..., x_n)`, row-major over `M^n` entries.
pub fn to_tensor(v: &SectorVector) -> Vec<C64> {
    let m = v.modes();
    let n = v.particles();
    let len = m.pow(n as u32);
    let mut out = vec![C64::new(0.0, 0.0); len];
    let mut occ = vec![0u8; m];
    for (idx, slot) in out.iter_mut().enumerate() {
        occ.iter_mut().for_each(|o| *o = 0);
        let mut rest = idx;
        for _ in 0..n {
            occ[rest % m] += 1;
            rest /= m;
        }
        let i = v.basis.index_of(&occ).expect("tuple occupations lie in the sector");
        *slot = v.amps[i] / multinomial(&occ).sqrt();
    }
    out
}

/// Projects a dense `n`-particle tensor onto the symmetric occupation basis.
pub fn from_tensor(t: &[C64], basis: Arc<SectorBasis>) -> Result<SectorVector> {
    let m = basis.modes();
    let n = basis.particles();
    if t.len() != m.pow(n as u32) {
        return Err(Error::DimensionMismatch {
            expected: m.pow(n as u32),
            found: t.len(),
        });
    }
    let mut out = SectorVector::zeros(basis.clone());
    let mut occ = vec![0u8; m];
    for (idx, &val) in t.iter().enumerate() {
        occ.iter_mut().for_each(|o| *o = 0);
        let mut rest = idx;
        for _ in 0..n {
            occ[rest % m] += 1;
            rest /= m;
        }
        let i = basis.index_of(&occ).expect("tuple occupations lie in the sector");
        out.amps[i] += val;
    }
    for i in 0..basis.dim() {
        out.amps[i] /= multinomial(basis.state(i)).sqrt();
    }
    Ok(out)
}

/// `sum_{n} a^*(u)^{N-n} / sqrt((N-n)!) phi_n`, i.e. `sum_n u^{(x)(N-n)} (x)_s phi_n`.
///
/// `phis[n]` must be in sector `n` and satisfy `a(u) phi_n = 0` for `n >= 1`.
pub fn hartree_block(u: &[C64], phis: &[SectorVector], particles: usize) -> Result<SectorVector> {
    let m = u.len();
    if (linalg::norm(u) - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("condensate is not normalized (|u| = {})", linalg::norm(u))));
    }
    let sectors = (0..=particles)
        .map(|n| SectorBasis::new(m, n).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    // Horner scheme: acc_n = a^*(u) acc_{n-1} + phi_n / sqrt((N-n)!).
    let mut acc = SectorVector::zeros(sectors[0].clone());
    for n in 0..=particles {
        if n > 0 {
            let lifted = create_between(u, &acc, &sectors[n])?;
            acc = lifted;
        }
        if let Some(phi) = phis.get(n) {
            if phi.particles() != n || phi.modes() != m {
                return Err(Error::InvalidInput(format!("entry {n} is not a vector in sector {n}")));
            }
            if n >= 1 {
                let lowered = annihilate_between(u, phi, &sectors[n - 1])?;
                if lowered.norm() > 1e-10 {
                    return Err(Error::Precondition(format!(
                        "sector {n} is not orthogonal to the condensate (|a(u) phi| = {:.3e})",
                        lowered.norm()
                    )));
                }
            }
            let remaining = particles - n;
            let mut scale = 1.0;
            for k in 1..=remaining {
                scale *= (k as f64).sqrt();
            }
            for (a, p) in acc.amps.iter_mut().zip(&phi.amps) {
                *a += p / scale;
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sector(m: usize, n: usize) -> Arc<SectorBasis> {
        Arc::new(SectorBasis::new(m, n).unwrap())
    }

    #[test]
    fn u_sym_u_is_root_two_u_squared() {
        let u = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let u1 = product_state(&u, sector(2, 1));
        let prod = sym_tensor(&u1, &u1).unwrap();
        let u2 = product_state(&u, sector(2, 2));
        for (a, b) in prod.amps.iter().zip(&u2.amps) {
            assert!((a - b * 2f64.sqrt()).norm() < 1e-14);
        }
    }

    #[test]
    fn tensor_round_trip_and_norm() {
        let b = sector(3, 3);
        let v = SectorVector::new(
            b.clone(),
            (0..b.dim()).map(|i| C64::new(i as f64 + 1.0, -(i as f64))).collect(),
        )
        .unwrap();
        let t = to_tensor(&v);
        let tn: f64 = t.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((tn - v.norm()).abs() < 1e-12);
        let back = from_tensor(&t, b).unwrap();
        assert!(linalg::distance(&back.amps, &v.amps) < 1e-12);
    }

    #[test]
    fn product_state_is_normalized() {
        let u = [C64::new(0.5, 0.1), C64::new(-0.3, 0.4), C64::new(0.2, 0.0)];
        let n = linalg::norm(&u);
        let u: Vec<C64> = u.iter().map(|x| x / n).collect();
        let v = product_state(&u, sector(3, 5));
        assert!((v.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn hartree_block_of_orthogonal_excitation_is_unit() {
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let phi1 = SectorVector::new(sector(2, 1), vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let phi0 = SectorVector::zeros(sector(2, 0));
        let psi = hartree_block(&u, &[phi0, phi1], 5).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        assert!((psi.amplitude(&[4, 1]) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn hartree_block_rejects_non_orthogonal_input() {
        let u = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let phi1 = SectorVector::new(sector(2, 1), vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let phi0 = SectorVector::zeros(sector(2, 0));
        assert!(matches!(hartree_block(&u, &[phi0, phi1], 3), Err(Error::Precondition(_))));
    }
}
