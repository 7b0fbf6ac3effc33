//! The excitation map `U_N = sum_j Q^{(x)j} a(u)^{N-j} / sqrt((N-j)!)` from sector `N`
//! onto the `u`-orthogonal Fock layers with at most `N` particles, and the operators
//! appearing when `H_N` is conjugated by it.
//!
//! Everything is built in the rotated mode basis where `u` is mode 0. There
//! `N_+ = sum_{k >= 1} n_k` is diagonal, `F_+` is the set of states with `n_0 = 0`, and
//! `U_N` only relabels `|N - j, rest> -> |0, rest>`. Operators are mapped back to the
//! lab frame by conjugation with `Gamma(R)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bogoliubov::{build_kernels, complement_projector};
use crate::fock::{
    annihilate_between, annihilate_op, create_op, cubic_op, dgamma, from_tensor, pair_creation_op, quartic_op,
    to_tensor, FockBasis, FockVector, OccupationSpace, SectorBasis, SectorVector,
};
use crate::hartree::{hartree_energy, hartree_hamiltonian};
use crate::linalg;
use crate::model::{mean_field, OneBodyOperator, TwoBodyKernel};
use crate::rotation::ModeRotation;
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

#[derive(Debug, Clone)]
pub struct ExcitationFrame {
    u: Vec<C64>,
    particles: usize,
    rotation: ModeRotation,
    basis: Arc<FockBasis>,
}

impl ExcitationFrame {
    pub fn new(u: &[C64], particles: usize) -> Result<Self> {
        let n = linalg::norm(u);
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("condensate is not normalized (|u| = {n})")));
        }
        Ok(Self {
            u: u.to_vec(),
            particles,
            rotation: ModeRotation::aligning(u)?,
            basis: Arc::new(FockBasis::new(u.len(), particles)?),
        })
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.u.len()
    }

    /// Fock basis with `n_max = N` on which excitation vectors live.
    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn rotation(&self) -> &ModeRotation {
        &self.rotation
    }

    /// `Q = 1 - |u><u|`.
    pub fn projector(&self) -> DMatrix<C64> {
        complement_projector(&self.u)
    }

    /// Lab-frame one-particle vectors of the rotated modes, `f_a = R^* e_a`.
    pub fn mode_vectors(&self) -> Vec<Vec<C64>> {
        let r = self.rotation.matrix();
        (0..self.modes())
            .map(|a| (0..self.modes()).map(|x| r[(a, x)].conj()).collect())
            .collect()
    }

    /// `N_+` on every state of the rotated basis.
    pub fn excited_numbers(&self) -> Vec<f64> {
        (0..self.basis.dim())
            .map(|i| (self.basis.particles(i) - self.basis.state(i)[0] as usize) as f64)
            .collect()
    }

    /// Keeps only matrix elements between states with `n_0 = 0`.
    pub fn compress(&self, op: &SparseOperator) -> SparseOperator {
        let b = self.basis.as_ref();
        op.filter(|r, c| b.state(r)[0] == 0 && b.state(c)[0] == 0)
    }

    /// Dense `Gamma(R)^* X Gamma(R)` for a rotated-frame operator `X`.
    pub fn to_lab(&self, op: &SparseOperator) -> DMatrix<C64> {
        let g = self.rotation.dense_fock(&self.basis);
        g.adjoint() * op.to_dense() * g
    }

    fn diag_of(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.excited_numbers().into_iter().map(f).collect()
    }
}

/// `U_N Psi` for `Psi` in sector `N`.
pub fn apply_u_n(frame: &ExcitationFrame, psi: &SectorVector) -> Result<FockVector> {
    let n = frame.particles;
    if psi.particles() != n || psi.modes() != frame.modes() {
        return Err(Error::InvalidInput(format!(
            "expected a vector in sector {n} over {} modes",
            frame.modes()
        )));
    }
    let rotated = frame.rotation.apply_sector(psi);
    let mut out = FockVector::zeros(frame.basis.clone());
    let mut buf = vec![0u8; frame.modes()];
    for (i, &amp) in rotated.amps.iter().enumerate() {
        buf.copy_from_slice(rotated.basis.state(i));
        buf[0] = 0;
        let j = frame.basis.index_of(&buf).expect("excitations lie below the truncation");
        out.amps[j] = amp;
    }
    Ok(frame.rotation.inverse().apply_fock(&out))
}

/// `U_N^* Phi` for `Phi` on the `u`-orthogonal layers.
pub fn apply_u_n_star(frame: &ExcitationFrame, phi: &FockVector) -> Result<SectorVector> {
    let n = frame.particles;
    if phi.modes() != frame.modes() {
        return Err(Error::DimensionMismatch {
            expected: frame.modes(),
            found: phi.modes(),
        });
    }
    if (n + 1..=phi.n_max()).any(|k| phi.sector_norm(k) > 0.0) {
        return Err(Error::Precondition(format!("sectors above {n} must be empty")));
    }
    let phi = if phi.n_max() == n { phi.clone() } else { phi.embed(frame.basis.clone())? };
    let defect = crate::bogoliubov::tangency_defect(&phi, &frame.u);
    if defect > 1e-8 {
        return Err(Error::Precondition(format!(
            "vector is not orthogonal to the condensate (|a(u) Phi| = {defect:.3e})"
        )));
    }
    let rotated = frame.rotation.apply_fock(&phi);
    let sector = Arc::new(SectorBasis::new(frame.modes(), n)?);
    let mut out = SectorVector::zeros(sector.clone());
    let mut buf = vec![0u8; frame.modes()];
    for (i, &amp) in rotated.amps.iter().enumerate() {
        let occ = frame.basis.state(i);
        if occ[0] != 0 || amp == C64::new(0.0, 0.0) {
            continue;
        }
        buf.copy_from_slice(occ);
        buf[0] = (n - frame.basis.particles(i)) as u8;
        out.amps[sector.index_of(&buf).expect("completion lies in sector N")] = amp;
    }
    Ok(frame.rotation.inverse().apply_sector(&out))
}

/// `Q^{(x)n}` applied slot by slot to a dense symmetric tensor.
fn project_slots(v: &SectorVector, q: &DMatrix<C64>) -> Result<SectorVector> {
    let m = v.modes();
    let n = v.particles();
    let mut t = to_tensor(v);
    for slot in 0..n {
        let stride = m.pow(slot as u32);
        let mut next = vec![C64::new(0.0, 0.0); t.len()];
        for (idx, val) in next.iter_mut().enumerate() {
            let x = (idx / stride) % m;
            let base = idx - x * stride;
            *val = (0..m).map(|y| q[(x, y)] * t[base + y * stride]).sum();
        }
        t = next;
    }
    from_tensor(&t, v.basis.clone())
}

/// Dense matrix of `U_N` from sector `N` to the Fock basis with `n_max = N`, built from
/// powers of `a(u)` and slotwise projections on dense tensors. Reference construction
/// for small sizes.
pub fn dense_excitation_map(u: &[C64], particles: usize) -> Result<DMatrix<C64>> {
    let m = u.len();
    let sectors = (0..=particles)
        .map(|n| SectorBasis::new(m, n).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let fock = FockBasis::new(m, particles)?;
    let q = complement_projector(u);
    let top = &sectors[particles];
    let mut out = DMatrix::zeros(fock.dim(), top.dim());
    for col in 0..top.dim() {
        let mut v = SectorVector::zeros(top.clone());
        v.amps[col] = C64::new(1.0, 0.0);
        let mut fact: f64 = 1.0;
        for j in (0..=particles).rev() {
            let comp = project_slots(&v, &q)?;
            let range = fock.sector_range(j);
            for (k, &a) in comp.amps.iter().enumerate() {
                out[(range.start + k, col)] = a / fact.sqrt();
            }
            if j > 0 {
                v = annihilate_between(u, &v, &sectors[j - 1])?;
                fact *= (particles - j + 1) as f64;
            }
        }
    }
    Ok(out)
}

/// `G` with `i dU_N/dt = G U_N`, in the lab frame on the basis of `frame`:
/// `G = a^*(u) a(g) - sqrt(N - N_+) a(g) - a^*(g) sqrt(N - N_+) - <i u', u> (N - N_+)`
/// with `g = Q i u'`.
pub fn build_du_generator(frame: &ExcitationFrame, u_dot: &[C64]) -> Result<SparseOperator> {
    let m = frame.modes();
    if u_dot.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: u_dot.len(),
        });
    }
    let ov = linalg::inner(&frame.u, u_dot);
    if ov.re.abs() > 1e-8 * linalg::norm(u_dot).max(1.0) {
        return Err(Error::Precondition(format!(
            "<u, u'> must be purely imaginary, real part {:.3e}",
            ov.re
        )));
    }
    let iu: Vec<C64> = u_dot.iter().map(|z| z * C64::new(0.0, 1.0)).collect();
    let g = (&frame.projector() * linalg::to_dvector(&iu)).iter().copied().collect::<Vec<_>>();
    let b = frame.basis.as_ref();
    let gr = frame.rotation.apply_one(&g);
    let e0: Vec<C64> = (0..m).map(|x| C64::new(if x == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
    let n = frame.particles as f64;
    let root = frame.diag_of(|np| (n - np).max(0.0).sqrt());
    let ag = annihilate_op(b, &gr);
    let mut op = create_op(b, &e0).matmul(&ag);
    op = op.sub(&ag.scale_rows(&root));
    op = op.sub(&create_op(b, &gr).scale_cols(&root));
    // <i u', u> is conjugate-linear in its first slot.
    let phase = linalg::inner(&iu, &frame.u);
    op = op.sub(&SparseOperator::diagonal_real(&frame.diag_of(|np| n - np)).scale(phase));
    Ok(SparseOperator::from_dense(&frame.to_lab(&op), 0.0))
}

/// One-body matrix `R A R^*` in the rotated frame.
fn rotated(frame: &ExcitationFrame, a: &DMatrix<C64>) -> DMatrix<C64> {
    frame.rotation.conjugate_one(a)
}

/// Pair kernel `R K R^T` in the rotated frame.
fn rotated_pair(frame: &ExcitationFrame, k: &DMatrix<C64>) -> DMatrix<C64> {
    let r = frame.rotation.matrix();
    r * k * r.transpose()
}

/// Leading part of the conjugated Hamiltonian in the rotated frame, compressed to `F_+`:
/// `N e + dGamma(Q(h + K1 - e)Q) + sqrt(N - N_+) a(Q h u) + h.c. + pairing(K2)`.
pub fn leading_terms_rotated(frame: &ExcitationFrame, h0: &OneBodyOperator, w: &TwoBodyKernel) -> Result<SparseOperator> {
    let m = frame.modes();
    let b = frame.basis.as_ref();
    let u = &frame.u;
    let kern = build_kernels(u, w)?;
    let h = hartree_hamiltonian(h0, w, u);
    let e = hartree_energy(h0, w, u);
    let q = frame.projector();
    let id = DMatrix::<C64>::identity(m, m);
    let one = &q * (&h + &kern.k1 - &id * C64::new(e, 0.0)) * &q;
    let n = frame.particles as f64;
    let mut op = dgamma(b, &rotated(frame, &one));
    op = op.add(&SparseOperator::identity(b.dim()).scale(C64::new(n * e, 0.0)));
    let qhu: Vec<C64> = (&q * &h * linalg::to_dvector(u)).iter().copied().collect();
    let root = frame.diag_of(|np| (n - np).max(0.0).sqrt());
    let lin = annihilate_op(b, &frame.rotation.apply_one(&qhu)).scale_rows(&root);
    op = op.add(&lin).add(&lin.adjoint());
    let pair = pair_creation_op(b, &rotated_pair(frame, &kern.k2));
    op = op.add(&pair).add(&pair.adjoint());
    Ok(frame.compress(&op))
}

/// `<f_a (x) f_b, W f_c (x) f_d>` on rotated modes.
fn two_body_element(w: &TwoBodyKernel, f: &[Vec<C64>], a: usize, b: usize, c: usize, d: usize) -> C64 {
    let m = w.dim();
    let mut acc = C64::new(0.0, 0.0);
    for x in 0..m {
        let left = f[a][x].conj() * f[c][x];
        if left == C64::new(0.0, 0.0) {
            continue;
        }
        for y in 0..m {
            acc += left * w.get(x, y) * f[b][y].conj() * f[d][y];
        }
    }
    acc
}

/// `R_1` in the rotated frame, compressed to `F_+`.
pub fn assemble_r1_rotated(frame: &ExcitationFrame, _h0: &OneBodyOperator, w: &TwoBodyKernel) -> Result<SparseOperator> {
    let m = frame.modes();
    let b = frame.basis.as_ref();
    let u = &frame.u;
    let n = frame.particles as f64;
    if frame.particles < 2 {
        return Err(Error::InvalidInput("the remainder needs N >= 2".into()));
    }
    let kern = build_kernels(u, w)?;
    let q = frame.projector();
    let v = mean_field(w, u);
    let mu = crate::hartree::chemical_potential(w, u);
    let vdiag = DMatrix::from_fn(m, m, |x, y| {
        if x == y {
            C64::new(v[x] - mu, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let nplus = frame.excited_numbers();
    let diag = |f: &dyn Fn(f64) -> f64| nplus.iter().map(|&np| f(np)).collect::<Vec<f64>>();

    // dGamma(Q(w*|u|^2 + K1 - mu)Q) (1 - N_+) / (N - 1).
    let one = &q * (&vdiag + &kern.k1) * &q;
    let mut op = dgamma(b, &rotated(frame, &one)).scale_cols(&diag(&|np| (1.0 - np) / (n - 1.0)));

    // -[N_+ sqrt(N - N_+) a(Q (w*|u|^2) u) / (N - 1) + h.c.].
    let vu: Vec<C64> = u.iter().zip(&v).map(|(z, vx)| z * vx).collect();
    let qvu: Vec<C64> = (&q * linalg::to_dvector(&vu)).iter().copied().collect();
    let lin = annihilate_op(b, &frame.rotation.apply_one(&qvu))
        .scale_rows(&diag(&|np| np * (n - np).max(0.0).sqrt() / (n - 1.0)));
    op = op.sub(&lin).sub(&lin.adjoint());

    // 1/2 sum K2 a^* a^* (sqrt((N - N_+)(N - N_+ - 1)) / (N - 1) - 1) + h.c.
    let pair = pair_creation_op(b, &rotated_pair(frame, &kern.k2))
        .scale_cols(&diag(&|np| ((n - np) * (n - np - 1.0)).max(0.0).sqrt() / (n - 1.0) - 1.0));
    op = op.add(&pair).add(&pair.adjoint());

    // sqrt(N - N_+) / (N - 1) sum <u (x) f_a, W f_b (x) f_c> a^*_a a_b a_c + h.c.
    let f = frame.mode_vectors();
    let mut fu = f.clone();
    fu[0] = u.clone();
    let cubic = cubic_op(b, |a, bb, c| {
        if a == 0 || bb == 0 || c == 0 {
            return C64::new(0.0, 0.0);
        }
        two_body_element_with(w, &fu, &f, a, bb, c)
    })
    .scale_rows(&diag(&|np| (n - np).max(0.0).sqrt() / (n - 1.0)));
    op = op.add(&cubic).add(&cubic.adjoint());
    Ok(frame.compress(&op))
}

/// `<u (x) f_a, W f_b (x) f_c>`.
fn two_body_element_with(w: &TwoBodyKernel, fu: &[Vec<C64>], f: &[Vec<C64>], a: usize, b: usize, c: usize) -> C64 {
    let m = w.dim();
    let mut acc = C64::new(0.0, 0.0);
    for x in 0..m {
        let left = fu[0][x].conj() * f[b][x];
        if left == C64::new(0.0, 0.0) {
            continue;
        }
        for y in 0..m {
            acc += left * w.get(x, y) * f[a][y].conj() * f[c][y];
        }
    }
    acc
}

/// `R_2 = 1/(2(N-1)) sum <f_a (x) f_b, W f_c (x) f_d> a^*_a a^*_b a_c a_d` over excited
/// modes, in the rotated frame.
pub fn assemble_r2_rotated(frame: &ExcitationFrame, w: &TwoBodyKernel) -> Result<SparseOperator> {
    if frame.particles < 2 {
        return Err(Error::InvalidInput("the remainder needs N >= 2".into()));
    }
    let b = frame.basis.as_ref();
    let f = frame.mode_vectors();
    let scale = 1.0 / (frame.particles as f64 - 1.0);
    let op = quartic_op(b, |a, bb, c, d| {
        if a == 0 || bb == 0 || c == 0 || d == 0 {
            return C64::new(0.0, 0.0);
        }
        two_body_element(w, &f, a, bb, c, d) * scale
    });
    Ok(frame.compress(&op))
}

/// Lab-frame `R_1` on the basis of `frame`.
pub fn assemble_r1(frame: &ExcitationFrame, h0: &OneBodyOperator, w: &TwoBodyKernel) -> Result<SparseOperator> {
    Ok(SparseOperator::from_dense(&frame.to_lab(&assemble_r1_rotated(frame, h0, w)?), 0.0))
}

/// Lab-frame `R_2` on the basis of `frame`.
pub fn assemble_r2(frame: &ExcitationFrame, w: &TwoBodyKernel) -> Result<SparseOperator> {
    Ok(SparseOperator::from_dense(&frame.to_lab(&assemble_r2_rotated(frame, w)?), 0.0))
}

/// Right side of the conjugation identity: leading terms plus `R_1 + R_2`, in the lab
/// frame on the basis of `frame`.
pub fn conjugated_hamiltonian(frame: &ExcitationFrame, h0: &OneBodyOperator, w: &TwoBodyKernel) -> Result<SparseOperator> {
    let op = leading_terms_rotated(frame, h0, w)?
        .add(&assemble_r1_rotated(frame, h0, w)?)
        .add(&assemble_r2_rotated(frame, w)?);
    Ok(SparseOperator::from_dense(&frame.to_lab(&op), 0.0))
}

/// Keeps the `F_+` states with at most `cut` particles.
fn restrict_dense(frame: &ExcitationFrame, op: &SparseOperator, cut: usize) -> (DMatrix<C64>, Vec<f64>) {
    let b = frame.basis.as_ref();
    let keep: Vec<usize> = (0..b.dim()).filter(|&i| b.state(i)[0] == 0 && b.particles(i) <= cut).collect();
    let full = op.to_dense();
    let d = DMatrix::from_fn(keep.len(), keep.len(), |r, c| full[(keep[r], keep[c])]);
    let numbers = keep.iter().map(|&i| b.particles(i) as f64).collect();
    (d, numbers)
}

/// Smallest `c` with `+-R <= c (N + 1)` on `F_+` below `cut` particles.
fn weighted_norm(frame: &ExcitationFrame, op: &SparseOperator, cut: usize) -> f64 {
    let (d, numbers) = restrict_dense(frame, op, cut);
    let dim = numbers.len();
    let s = DMatrix::from_fn(dim, dim, |r, c| d[(r, c)] / ((numbers[r] + 1.0) * (numbers[c] + 1.0)).sqrt());
    linalg::hermitian_eigenvalues(&s).iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Fitted `C` with `+-1^{<=cut} R_1 1^{<=cut} <= C sqrt(cut / N) (N + 1)`.
pub fn r1_bound_constant(frame: &ExcitationFrame, h0: &OneBodyOperator, w: &TwoBodyKernel, cut: usize) -> Result<f64> {
    if cut == 0 || cut > frame.particles {
        return Err(Error::InvalidInput(format!("cut must lie in 1..={}", frame.particles)));
    }
    let r1 = assemble_r1_rotated(frame, h0, w)?;
    let c = weighted_norm(frame, &r1, cut);
    Ok(c / (cut as f64 / frame.particles as f64).sqrt())
}

/// Operator norm of `R_2` on `F_+` below `cut` particles.
pub fn r2_norm(frame: &ExcitationFrame, w: &TwoBodyKernel, cut: usize) -> Result<f64> {
    let r2 = assemble_r2_rotated(frame, w)?;
    let (d, _) = restrict_dense(frame, &r2, cut);
    Ok(linalg::hermitian_eigenvalues(&d).iter().fold(0.0, |acc: f64, v| acc.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{hartree_block, product_state};
    use crate::model::{build_interaction, build_kinetic, ModeBasis};
    use crate::nbody::build_hamiltonian;

    fn unit(v: &[C64]) -> Vec<C64> {
        let n = linalg::norm(v);
        v.iter().map(|x| x / n).collect()
    }

    fn sample_u(m: usize) -> Vec<C64> {
        unit(&(0..m).map(|x| C64::from_polar(1.0 + 0.4 * x as f64, 0.9 * x as f64)).collect::<Vec<_>>())
    }

    #[test]
    fn hartree_state_maps_to_vacuum() {
        let u = sample_u(3);
        let frame = ExcitationFrame::new(&u, 4).unwrap();
        let psi = product_state(&u, Arc::new(SectorBasis::new(3, 4).unwrap()));
        let phi = apply_u_n(&frame, &psi).unwrap();
        let vac = FockVector::vacuum(frame.basis().clone());
        assert!(phi.distance(&vac).unwrap() < 1e-13);
    }

    #[test]
    fn matches_dense_reference_and_round_trips() {
        let u = sample_u(3);
        let frame = ExcitationFrame::new(&u, 3).unwrap();
        let dense = dense_excitation_map(&u, 3).unwrap();
        let sector = Arc::new(SectorBasis::new(3, 3).unwrap());
        let psi = SectorVector::new(
            sector.clone(),
            (0..sector.dim()).map(|i| C64::new((i as f64).sin(), (2.0 * i as f64).cos())).collect(),
        )
        .unwrap();
        let phi = apply_u_n(&frame, &psi).unwrap();
        let want: Vec<C64> = (&dense * linalg::to_dvector(&psi.amps)).iter().copied().collect();
        assert!(linalg::distance(&phi.amps, &want) < 1e-12);
        assert!((phi.norm() - psi.norm()).abs() < 1e-12);
        let back = apply_u_n_star(&frame, &phi).unwrap();
        assert!(linalg::distance(&back.amps, &psi.amps) < 1e-12);
        let phis: Vec<SectorVector> = (0..=3).map(|n| phi.sector_vector(n)).collect();
        let hb = hartree_block(&u, &phis, 3).unwrap();
        assert!(linalg::distance(&hb.amps, &psi.amps) < 1e-12);
    }

    #[test]
    fn rejects_condensate_component() {
        let u = sample_u(2);
        let frame = ExcitationFrame::new(&u, 2).unwrap();
        let mut phi = FockVector::zeros(frame.basis().clone());
        let one = create_op(frame.basis().as_ref(), &u).apply(&FockVector::vacuum(frame.basis().clone()).amps);
        phi.amps = one;
        assert!(apply_u_n_star(&frame, &phi).is_err());
    }

    #[test]
    fn gauge_motion_generator() {
        let u = sample_u(2);
        let frame = ExcitationFrame::new(&u, 3).unwrap();
        let lambda = 0.7;
        let udot: Vec<C64> = u.iter().map(|z| z * C64::new(0.0, lambda)).collect();
        let g = build_du_generator(&frame, &udot).unwrap().to_dense();
        let zero = build_du_generator(&frame, &[C64::new(0.0, 0.0); 2]).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        // G = lambda (N - N_+) on F_+.
        let ud = dense_excitation_map(&u, 3).unwrap();
        let p = &ud * ud.adjoint();
        let nplus = frame.to_lab(&SparseOperator::diagonal_real(&frame.excited_numbers()));
        let want = (DMatrix::identity(p.nrows(), p.ncols()) * C64::new(3.0, 0.0) - nplus) * C64::new(lambda, 0.0);
        assert!((&p * g * &p - &p * want * &p).norm() < 1e-12);
    }

    #[test]
    fn conjugation_identity_small() {
        let b = ModeBasis::new(2, 1.0).unwrap();
        let w = build_interaction(&b, |r| 1.3 * (-r * r).exp()).unwrap();
        let h0 = build_kinetic(&b);
        let u = sample_u(2);
        let n = 3;
        let frame = ExcitationFrame::new(&u, n).unwrap();
        let ud = dense_excitation_map(&u, n).unwrap();
        let hn = build_hamiltonian(&h0, &w, n).unwrap().op.to_dense();
        let lhs = &ud * hn * ud.adjoint();
        let rhs = conjugated_hamiltonian(&frame, &h0, &w).unwrap().to_dense();
        let res = (&lhs - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(res < 1e-10, "{res}");
    }
}
