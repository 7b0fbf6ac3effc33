//! One-particle unitaries built from Givens rotations and their exact second-quantized
//! action `Gamma(R)` on occupation-basis vectors.
//!
//! A Givens block on modes `(p, q)` conserves `n_p + n_q = s` and acts on the
//! `s + 1` states of each block through the closed binomial formula, so no Fock-space
//! exponential is needed.

use nalgebra::DMatrix;

use crate::fock::{FockBasis, FockVector, OccupationSpace, SectorBasis, SectorVector};
use crate::fock::symmetric::binomial_f64;
use crate::linalg;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
struct Givens {
    p: usize,
    q: usize,
    // [[g_pp, g_pq], [g_qp, g_qq]] acting on coefficient pairs (f_p, f_q).
    g: [[C64; 2]; 2],
}

impl Givens {
    fn adjoint(&self) -> Self {
        let g = self.g;
        Self {
            p: self.p,
            q: self.q,
            g: [[g[0][0].conj(), g[1][0].conj()], [g[0][1].conj(), g[1][1].conj()]],
        }
    }

    /// `d[k][l]`: amplitude of `|n_p = k>` in the image of `|n_p = l>` at fixed `s`.
    fn block(&self, s: usize) -> Vec<Vec<C64>> {
        let [[g00, g01], [g10, g11]] = self.g;
        let mut d = vec![vec![C64::new(0.0, 0.0); s + 1]; s + 1];
        for l in 0..=s {
            for k in 0..=s {
                let mut acc = C64::new(0.0, 0.0);
                let lo = k.saturating_sub(s - l);
                let hi = k.min(l);
                for i in lo..=hi {
                    let j = k - i;
                    acc += g00.powu(i as u32)
                        * g10.powu((l - i) as u32)
                        * g01.powu(j as u32)
                        * g11.powu((s - l - j) as u32)
                        * (binomial_f64(l, i) * binomial_f64(s - l, j));
                }
                let norm = (binomial_f64(s, l) / binomial_f64(s, k)).sqrt();
                d[k][l] = acc * norm;
            }
        }
        d
    }

    fn apply<S: OccupationSpace + ?Sized>(&self, space: &S, amps: &[C64], blocks: &[Vec<Vec<C64>>]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        let mut buf = vec![0u8; space.modes()];
        for (i, &a) in amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let occ = space.state(i);
            let l = occ[self.p] as usize;
            let s = l + occ[self.q] as usize;
            let d = &blocks[s];
            buf.copy_from_slice(occ);
            for (k, row) in d.iter().enumerate() {
                let c = row[l];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                buf[self.p] = k as u8;
                buf[self.q] = (s - k) as u8;
                let j = space.index_of(&buf).expect("rotation preserves the sector");
                out[j] += c * a;
            }
        }
        out
    }
}

/// Unitary `R` on the one-particle space, stored as a product of Givens rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRotation {
    modes: usize,
    steps: Vec<Givens>,
    matrix: DMatrix<C64>,
}

impl ModeRotation {
    pub fn identity(modes: usize) -> Self {
        Self {
            modes,
            steps: Vec::new(),
            matrix: DMatrix::identity(modes, modes),
        }
    }

    /// Rotation with `R u = e_0` for a unit vector `u`.
    pub fn aligning(u: &[C64]) -> Result<Self> {
        let m = u.len();
        let n = linalg::norm(u);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("vector to align is not normalized (|u| = {n})")));
        }
        let mut v = u.to_vec();
        let mut steps = Vec::new();
        for k in (1..m).rev() {
            let (a, b) = (v[k - 1], v[k]);
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g = if r == 0.0 {
                [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]
            } else {
                [[a.conj() / r, b.conj() / r], [-b / r, a / r]]
            };
            v[k - 1] = C64::new(r, 0.0);
            v[k] = C64::new(0.0, 0.0);
            steps.push(Givens { p: k - 1, q: k, g });
        }
        if m == 1 {
            // A single mode only needs a phase.
            return Ok(Self {
                modes: 1,
                steps: Vec::new(),
                matrix: DMatrix::from_element(1, 1, u[0].conj() / u[0].norm()),
            });
        }
        let mut rot = Self {
            modes: m,
            steps,
            matrix: DMatrix::identity(m, m),
        };
        rot.matrix = rot.compute_matrix();
        Ok(rot)
    }

    fn compute_matrix(&self) -> DMatrix<C64> {
        let mut r = DMatrix::<C64>::identity(self.modes, self.modes);
        for st in &self.steps {
            for c in 0..self.modes {
                let (fp, fq) = (r[(st.p, c)], r[(st.q, c)]);
                r[(st.p, c)] = st.g[0][0] * fp + st.g[0][1] * fq;
                r[(st.q, c)] = st.g[1][0] * fp + st.g[1][1] * fq;
            }
        }
        r
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// The one-particle matrix `R`.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Self {
        Self {
            modes: self.modes,
            steps: self.steps.iter().rev().map(Givens::adjoint).collect(),
            matrix: self.matrix.adjoint(),
        }
    }

    /// `R f`.
    pub fn apply_one(&self, f: &[C64]) -> Vec<C64> {
        (&self.matrix * linalg::to_dvector(f)).iter().copied().collect()
    }

    /// `R A R^*`.
    pub fn conjugate_one(&self, a: &DMatrix<C64>) -> DMatrix<C64> {
        &self.matrix * a * self.matrix.adjoint()
    }

    fn blocks(&self, n_max: usize) -> Vec<Vec<Vec<Vec<C64>>>> {
        self.steps
            .iter()
            .map(|st| (0..=n_max).map(|s| st.block(s)).collect())
            .collect()
    }

    fn apply_amps<S: OccupationSpace + ?Sized>(&self, space: &S, n_max: usize, amps: &[C64]) -> Vec<C64> {
        if self.modes == 1 {
            let ph = self.matrix[(0, 0)];
            return (0..space.dim())
                .map(|i| amps[i] * ph.powu(space.particles(i) as u32))
                .collect();
        }
        let blocks = self.blocks(n_max);
        let mut cur = amps.to_vec();
        for (st, b) in self.steps.iter().zip(&blocks) {
            cur = st.apply(space, &cur, b);
        }
        cur
    }

    /// `Gamma(R)` on a sector vector.
    pub fn apply_sector(&self, v: &SectorVector) -> SectorVector {
        assert_eq!(v.modes(), self.modes);
        let amps = self.apply_amps(v.basis.as_ref(), v.particles(), &v.amps);
        SectorVector {
            basis: v.basis.clone(),
            amps,
        }
    }

    /// `Gamma(R)` on a Fock vector.
    pub fn apply_fock(&self, v: &FockVector) -> FockVector {
        assert_eq!(v.modes(), self.modes);
        let amps = self.apply_amps(v.basis.as_ref(), v.n_max(), &v.amps);
        FockVector {
            basis: v.basis.clone(),
            amps,
        }
    }

    /// Dense matrix of `Gamma(R)` on a Fock basis.
    pub fn dense_fock(&self, basis: &FockBasis) -> DMatrix<C64> {
        let dim = basis.dim();
        let mut out = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for c in 0..dim {
            e[c] = C64::new(1.0, 0.0);
            let col = self.apply_amps(basis, basis.n_max(), &e);
            for r in 0..dim {
                out[(r, c)] = col[r];
            }
            e[c] = C64::new(0.0, 0.0);
        }
        out
    }

    /// Dense matrix of `Gamma(R)` on a sector.
    pub fn dense_sector(&self, basis: &SectorBasis) -> DMatrix<C64> {
        let dim = basis.dim();
        let mut out = DMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for c in 0..dim {
            e[c] = C64::new(1.0, 0.0);
            let col = self.apply_amps(basis, basis.particles(), &e);
            for r in 0..dim {
                out[(r, c)] = col[r];
            }
            e[c] = C64::new(0.0, 0.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilate_op, create_op, product_state};
    use std::sync::Arc;

    fn unit(v: &[C64]) -> Vec<C64> {
        let n = linalg::norm(v);
        v.iter().map(|x| x / n).collect()
    }

    fn sample_u() -> Vec<C64> {
        unit(&[C64::new(0.4, 0.2), C64::new(-0.3, 0.5), C64::new(0.1, -0.6), C64::new(0.2, 0.0)])
    }

    #[test]
    fn aligns_to_first_mode() {
        let u = sample_u();
        let r = ModeRotation::aligning(&u).unwrap();
        let ru = r.apply_one(&u);
        assert!((ru[0] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(ru[1..].iter().all(|x| x.norm() < 1e-14));
        let id = r.matrix() * r.matrix().adjoint();
        assert!((id - DMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn second_quantized_action_maps_product_states() {
        let u = sample_u();
        let r = ModeRotation::aligning(&u).unwrap();
        let sector = Arc::new(SectorBasis::new(4, 5).unwrap());
        let psi = product_state(&u, sector.clone());
        let rotated = r.apply_sector(&psi);
        let e0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let want = product_state(&e0, sector);
        assert!(linalg::distance(&rotated.amps, &want.amps) < 1e-12);
    }

    #[test]
    fn intertwines_creation_operators() {
        let u = sample_u();
        let r = ModeRotation::aligning(&u).unwrap();
        let basis = FockBasis::new(4, 4).unwrap();
        let g = r.dense_fock(&basis);
        assert!((&g * g.adjoint() - DMatrix::identity(basis.dim(), basis.dim())).norm() < 1e-12);
        let f = unit(&[C64::new(0.1, 0.3), C64::new(0.7, 0.0), C64::new(-0.2, 0.2), C64::new(0.0, -0.5)]);
        // Gamma(R) a(f) Gamma(R)^* = a(R f) on states below the truncation edge.
        let lhs = &g * annihilate_op(&basis, &f).to_dense() * g.adjoint();
        let rhs = annihilate_op(&basis, &r.apply_one(&f)).to_dense();
        assert!((lhs - rhs).norm() < 1e-12);
        let lhs_c = &g * create_op(&basis, &f).to_dense() * g.adjoint();
        let rhs_c = create_op(&basis, &r.apply_one(&f)).to_dense();
        assert!((lhs_c - rhs_c).norm() < 1e-12);
    }

    #[test]
    fn inverse_undoes_rotation() {
        let u = sample_u();
        let r = ModeRotation::aligning(&u).unwrap();
        let basis = Arc::new(FockBasis::new(4, 3).unwrap());
        let amps = (0..basis.dim()).map(|i| C64::new((i as f64).cos(), (2.0 * i as f64).sin())).collect();
        let v = FockVector::new(basis, amps).unwrap();
        let back = r.inverse().apply_fock(&r.apply_fock(&v));
        assert!(back.distance(&v).unwrap() < 1e-12);
    }
}
