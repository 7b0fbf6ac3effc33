//! Dense verification suite for the excitation-map algebra, the fluctuation generator
//! and the operator inequalities, at sizes small enough for full matrices.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bogoliubov::{assemble_bog_h, build_kernels, hierarchy_rhs, verify_bog_bounds};
use crate::excitation::{
    apply_u_n, build_du_generator, conjugated_hamiltonian, dense_excitation_map, r1_bound_constant, r2_norm,
    ExcitationFrame,
};
use crate::fock::{
    annihilate_op, create_op, dgamma, from_tensor, to_tensor, FockBasis, FockVector, OccupationSpace, SectorBasis, SectorVector,
};
use crate::hartree::solve_hartree;
use crate::linalg;
use crate::model::{build_interaction, build_kinetic, ModeBasis, OneBodyOperator, TwoBodyKernel};
use crate::nbody::build_hamiltonian;
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// How a check's measured value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Criterion {
    AtMost(f64),
    AtLeast(f64),
    /// A fitted constant that only has to exist.
    Finite,
}

impl Criterion {
    fn holds(&self, v: f64) -> bool {
        match *self {
            Criterion::AtMost(l) => v <= l,
            Criterion::AtLeast(l) => v >= l,
            Criterion::Finite => v.is_finite(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Criterion::AtMost(l) => format!("<= {l:e}"),
            Criterion::AtLeast(l) => format!(">= {l:e}"),
            Criterion::Finite => "finite".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraCheck {
    pub name: String,
    pub modes: usize,
    pub particles: usize,
    pub value: f64,
    pub criterion: Criterion,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlgebraReport {
    pub checks: Vec<AlgebraCheck>,
}

impl AlgebraReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn push(&mut self, name: &str, (modes, particles): (usize, usize), value: f64, criterion: Criterion) {
        self.checks.push(AlgebraCheck {
            name: name.into(),
            modes,
            particles,
            value,
            criterion,
            pass: criterion.holds(value),
        });
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:>3} {:>3} {:>12}  {:<12} {}\n", "check", "M", "N", "value", "criterion", "result");
        for c in &self.checks {
            out += &format!(
                "{:<28} {:>3} {:>3} {:>12.4e}  {:<12} {}\n",
                c.name,
                c.modes,
                c.particles,
                c.value,
                c.criterion.describe(),
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

/// Gaussian test model used by the suite: `w(r) = 1.3 exp(-r^2)` on a unit lattice.
pub fn test_model(modes: usize) -> Result<(OneBodyOperator, TwoBodyKernel)> {
    let b = ModeBasis::new(modes, 1.0)?;
    Ok((build_kinetic(&b), build_interaction(&b, |r| 1.3 * (-r * r).exp())?))
}

/// A normalized condensate with nontrivial phases.
pub fn test_condensate(modes: usize) -> Vec<C64> {
    let raw: Vec<C64> = (0..modes).map(|x| C64::from_polar(1.0 + 0.4 * x as f64, 0.9 * x as f64)).collect();
    let n = linalg::norm(&raw);
    raw.iter().map(|z| z / n).collect()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_amps(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..len).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let n = linalg::norm(&v);
    v.iter().map(|z| z / n).collect()
}

/// Largest entry of `U_N H_N U_N^* - (assembled right side)`.
pub fn master_identity_residual(h0: &OneBodyOperator, w: &TwoBodyKernel, u: &[C64], particles: usize) -> Result<f64> {
    let frame = ExcitationFrame::new(u, particles)?;
    let v = dense_excitation_map(u, particles)?;
    let hn = build_hamiltonian(h0, w, particles)?.op.to_dense();
    let lhs = &v * hn * v.adjoint();
    let rhs = conjugated_hamiltonian(&frame, h0, w)?.to_dense();
    Ok(max_abs(&(lhs - rhs)))
}

/// Residuals of `(U_N(t+d) - U_N(t-d)) / 2d + i G U_N(t)` along a Hartree trajectory from
/// `u0`, centered at `center`, for each `d` in `deltas`. Each `center / d` must be integral.
pub fn derivative_residuals(
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    u0: &[C64],
    particles: usize,
    center: f64,
    deltas: &[f64],
) -> Result<Vec<f64>> {
    deltas
        .iter()
        .map(|&d| {
            let k = (center / d).round() as usize;
            if k == 0 || ((k as f64) * d - center).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("center {center} is not a positive multiple of {d}")));
            }
            // Eight RK4 steps per offset keep the trajectory error far below d^2.
            let sub = 8;
            let traj = solve_hartree(h0, w, u0, (k + 1) as f64 * d, d / sub as f64)?;
            let at = |j: usize| traj.states[j * sub].clone();
            let (lo, mid, hi) = (at(k - 1), at(k), at(k + 1));
            let frame = ExcitationFrame::new(&mid, particles)?;
            let g = build_du_generator(&frame, &traj.derivatives[k * sub])?.to_dense();
            let fd = (dense_excitation_map(&hi, particles)? - dense_excitation_map(&lo, particles)?) * C64::new(0.5 / d, 0.0);
            let exact = g * dense_excitation_map(&mid, particles)? * C64::new(0.0, -1.0);
            Ok(max_abs(&(fd - exact)))
        })
        .collect()
}

/// Largest sector residual between the hierarchy and the assembled generator over
/// `samples` random states on `F^{<= n_max}`.
pub fn hierarchy_residual(
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    u: &[C64],
    n_max: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let basis = FockBasis::shared(u.len(), n_max)?;
    let bog = assemble_bog_h(u, h0, w, &basis)?;
    let kern = build_kernels(u, w)?;
    let hk = &bog.h + &kern.k1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let phi = FockVector::new(basis.clone(), random_amps(&mut rng, basis.dim()))?;
        let hphi = FockVector::new(basis.clone(), bog.op.apply(&phi.amps))?;
        for (n, s) in hierarchy_rhs(&phi, &kern, &hk)?.iter().enumerate() {
            worst = worst.max(linalg::distance(&s.amps, hphi.sector(n)));
        }
    }
    Ok(worst)
}

/// `max |V^* V - 1|` for the dense map, and the gap between the occupation-coordinate
/// map and the dense one on a random vector.
pub fn excitation_unitarity_residual(u: &[C64], particles: usize, seed: u64) -> Result<f64> {
    let v = dense_excitation_map(u, particles)?;
    let iso = max_abs(&(v.adjoint() * &v - DMatrix::identity(v.ncols(), v.ncols())));
    let frame = ExcitationFrame::new(u, particles)?;
    let sector = Arc::new(SectorBasis::new(u.len(), particles)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = SectorVector::new(sector.clone(), random_amps(&mut rng, sector.dim()))?;
    let fast = apply_u_n(&frame, &psi)?;
    let dense: Vec<C64> = (&v * linalg::to_dvector(&psi.amps)).iter().copied().collect();
    Ok(iso.max(linalg::distance(&fast.amps, &dense)))
}

/// Residuals of the four identities `U a^*(u)a(u) U^* = N - N_+`,
/// `U a^*(u)a(f) U^* = sqrt(N - N_+) a(f)`, `U a^*(f)a(u) U^* = a^*(f) sqrt(N - N_+)` and
/// `U a^*(f)a(g) U^* = a^*(f)a(g)` on `F_+^{<= N}`, for `f, g` orthogonal to `u`.
pub fn conjugation_identity_residuals(u: &[C64], particles: usize) -> Result<[f64; 4]> {
    let m = u.len();
    if m < 2 {
        return Err(Error::InvalidInput("the identities need an orthogonal direction".into()));
    }
    let frame = ExcitationFrame::new(u, particles)?;
    let q = frame.projector();
    let orth = |k: usize| -> Vec<C64> {
        let f: Vec<C64> = q.column(k).iter().copied().collect();
        let n = linalg::norm(&f);
        f.iter().map(|z| z / n).collect()
    };
    let (f, g) = (orth(1), orth(0));
    let v = dense_excitation_map(u, particles)?;
    let p = &v * v.adjoint();
    let sector = SectorBasis::new(m, particles)?;
    let outer = |a: &[C64], b: &[C64]| DMatrix::from_fn(m, m, |x, y| a[x] * b[y].conj());
    let conj = |a: &[C64], b: &[C64]| &v * dgamma(&sector, &outer(a, b)).to_dense() * v.adjoint();
    let basis = frame.basis().as_ref();
    let n = particles as f64;
    let excited = frame.excited_numbers();
    let remaining = frame.to_lab(&SparseOperator::diagonal_real(&excited.iter().map(|x| n - x).collect::<Vec<_>>()));
    let root = frame.to_lab(&SparseOperator::diagonal_real(
        &excited.iter().map(|x| (n - x).max(0.0).sqrt()).collect::<Vec<_>>(),
    ));
    let af = annihilate_op(basis, &f).to_dense();
    let cf = create_op(basis, &f).to_dense();
    let rhs = [
        remaining,
        &root * af,
        cf * &root,
        dgamma(basis, &outer(&f, &g)).to_dense(),
    ];
    let lhs = [conj(u, u), conj(u, &f), conj(&f, u), conj(&f, &g)];
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = max_abs(&(&lhs[k] - &p * &rhs[k] * &p));
    }
    Ok(out)
}

/// Gap between the occupation-basis `N`-body Hamiltonian and a first-quantized tensor
/// evaluation of `sum_j h0_j + 1/(N-1) sum_{i<j} w(x_i - x_j)` on a random state.
pub fn two_body_oracle_residual(h0: &OneBodyOperator, w: &TwoBodyKernel, particles: usize, seed: u64) -> Result<f64> {
    let m = h0.dim();
    let h = build_hamiltonian(h0, w, particles)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi = SectorVector::new(h.sector.clone(), random_amps(&mut rng, h.sector.dim()))?;
    let t = to_tensor(&psi);
    let mut out = vec![C64::new(0.0, 0.0); t.len()];
    let coupling = 1.0 / (particles as f64 - 1.0);
    let digits = |mut idx: usize| -> Vec<usize> {
        (0..particles)
            .map(|_| {
                let d = idx % m;
                idx /= m;
                d
            })
            .collect()
    };
    let stride: Vec<usize> = (0..particles).map(|j| m.pow(j as u32)).collect();
    for (idx, slot) in out.iter_mut().enumerate() {
        let x = digits(idx);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..particles {
            let base = idx - x[j] * stride[j];
            for y in 0..m {
                acc += h0.matrix()[(x[j], y)] * t[base + y * stride[j]];
            }
        }
        let mut pot = 0.0;
        for i in 0..particles {
            for j in i + 1..particles {
                pot += w.get(x[i], x[j]);
            }
        }
        *slot = acc + t[idx] * (coupling * pot);
    }
    let want = from_tensor(&out, h.sector.clone())?;
    Ok(linalg::distance(&h.op.apply(&psi.amps), &want.amps))
}

/// Default grid of `(M, N)`.
pub const DEFAULT_SIZES: [(usize, usize); 4] = [(2, 2), (2, 3), (3, 2), (3, 3)];

/// Runs every check at each `(M, N)`.
pub fn verify_algebra(sizes: &[(usize, usize)]) -> Result<AlgebraReport> {
    let mut report = AlgebraReport::default();
    for &(m, n) in sizes {
        if m < 2 || n < 2 {
            return Err(Error::InvalidInput(format!("sizes need M >= 2 and N >= 2, got ({m}, {n})")));
        }
        let size = (m, n);
        let (h0, w) = test_model(m)?;
        let u = test_condensate(m);
        report.push("master_identity", size, master_identity_residual(&h0, &w, &u, n)?, Criterion::AtMost(1e-10));
        let fd = derivative_residuals(&h0, &w, &u, n, 0.2, &[0.02, 0.01])?;
        report.push("derivative_fd_ratio", size, fd[0] / fd[1], Criterion::AtLeast(3.5));
        report.push("unitarity", size, excitation_unitarity_residual(&u, n, 7)?, Criterion::AtMost(1e-10));
        let names = ["conj_condensate_number", "conj_annihilate_excited", "conj_create_excited", "conj_excited_pair"];
        for (name, r) in names.iter().zip(conjugation_identity_residuals(&u, n)?) {
            report.push(name, size, r, Criterion::AtMost(1e-10));
        }
        report.push("hierarchy", size, hierarchy_residual(&h0, &w, &u, 4, 100, 11)?, Criterion::AtMost(1e-10));
        report.push("two_body_oracle", size, two_body_oracle_residual(&h0, &w, n, 13)?, Criterion::AtMost(1e-12));
        let bounds = verify_bog_bounds(&u, &h0, &w, &FockBasis::new(m, 4)?)?;
        report.push("pairing_bound_margin", size, bounds.pairing_margin, Criterion::AtLeast(-1e-10));
        report.push("commutator_bound_margin", size, bounds.commutator_margin, Criterion::AtLeast(-1e-10));
        report.push("energy_upper_constant", size, bounds.c_upper, Criterion::Finite);
        report.push("energy_lower_constant", size, bounds.c_lower, Criterion::Finite);
        let frame = ExcitationFrame::new(&u, n)?;
        report.push("r1_constant", size, r1_bound_constant(&frame, &h0, &w, n)?, Criterion::Finite);
        let r2 = r2_norm(&frame, &w, n)? * n as f64 / (n * n) as f64;
        report.push("r2_norm_scaled", size, r2, Criterion::Finite);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_size_passes() {
        let report = verify_algebra(&[(2, 2)]).unwrap();
        assert!(report.passes(), "{}", report.table());
    }

    #[test]
    fn two_body_oracle_agrees_across_particle_numbers() {
        let (h0, w) = test_model(3).unwrap();
        for n in 2..=5 {
            assert!(two_body_oracle_residual(&h0, &w, n, n as u64).unwrap() < 1e-12);
        }
    }
}
