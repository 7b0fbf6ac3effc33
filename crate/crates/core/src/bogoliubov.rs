//! Quadratic fluctuation dynamics around a Hartree trajectory.
//!
//! `H(t) = dGamma(h + K1) + 1/2 sum (K2_xy a^*_x a^*_y + h.c.)` with
//! `h = h0 + w*|u|^2 - mu`, `K1 = Q K1~ Q`, `K2 = Q K2~ Q^T`, `Q = 1 - |u><u|`,
//! `K1~_xy = u_x W_xy conj(u_y)` and `K2~_xy = u_x W_xy u_y`.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::fock::{
    annihilate_op, dgamma, from_tensor, number_op, pairing_op, to_tensor, FockBasis, FockVector, OccupationSpace,
    SectorVector,
};
use crate::hartree::{hartree_hamiltonian, HartreeTrajectory};
use crate::krylov::{expm_apply, KrylovOptions};
use crate::linalg;
use crate::model::{OneBodyOperator, TwoBodyKernel};
use crate::sparse::SparseOperator;
use crate::{Error, Result, C64};

/// Sector norms `||phi_n||` reported for `n` up to this value.
pub const PROFILE_SECTORS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernels {
    pub u: Vec<C64>,
    pub q: DMatrix<C64>,
    pub k1: DMatrix<C64>,
    pub k2: DMatrix<C64>,
    pub k1_tilde: DMatrix<C64>,
    pub k2_tilde: DMatrix<C64>,
}

impl Kernels {
    pub fn k2_frobenius(&self) -> f64 {
        self.k2.norm()
    }

    pub fn modes(&self) -> usize {
        self.u.len()
    }
}

/// `Q = 1 - |u><u|`.
pub fn complement_projector(u: &[C64]) -> DMatrix<C64> {
    let m = u.len();
    let v = linalg::to_dvector(u);
    DMatrix::identity(m, m) - &v * v.adjoint()
}

pub fn build_kernels(u: &[C64], w: &TwoBodyKernel) -> Result<Kernels> {
    let m = u.len();
    if w.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: w.dim(),
        });
    }
    let n = linalg::norm(u);
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!("condensate is not normalized (|u| = {n})")));
    }
    let k1_tilde = DMatrix::from_fn(m, m, |x, y| u[x] * w.get(x, y) * u[y].conj());
    let k2_tilde = DMatrix::from_fn(m, m, |x, y| u[x] * w.get(x, y) * u[y]);
    let q = complement_projector(u);
    let k1 = &q * &k1_tilde * &q;
    let k1 = (&k1 + k1.adjoint()) * C64::new(0.5, 0.0);
    let k2 = &q * &k2_tilde * q.transpose();
    let k2 = (&k2 + k2.transpose()) * C64::new(0.5, 0.0);
    Ok(Kernels {
        u: u.to_vec(),
        q,
        k1,
        k2,
        k1_tilde,
        k2_tilde,
    })
}

/// Assembled quadratic Hamiltonian on a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct BogHamiltonian {
    pub op: SparseOperator,
    /// `h(t) = h0 + diag(w*|u|^2) - mu`.
    pub h: DMatrix<C64>,
    pub time: f64,
}

impl BogHamiltonian {
    pub fn at(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// `dGamma(one_body) + pairing(k2)` on `basis`.
pub fn quadratic_hamiltonian(basis: &FockBasis, one_body: &DMatrix<C64>, k2: &DMatrix<C64>) -> Result<SparseOperator> {
    let kinetic = dgamma(basis, one_body);
    let pair = pairing_op(basis, k2)?;
    let op = kinetic.add(&pair);
    let defect = op.hermiticity_defect();
    if defect > 1e-12 * op.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(op)
}

pub fn assemble_bog_h(u: &[C64], h0: &OneBodyOperator, w: &TwoBodyKernel, basis: &FockBasis) -> Result<BogHamiltonian> {
    let kern = build_kernels(u, w)?;
    let h = hartree_hamiltonian(h0, w, u);
    let op = quadratic_hamiltonian(basis, &(&h + &kern.k1), &kern.k2)?;
    Ok(BogHamiltonian { op, h, time: 0.0 })
}

/// `||a(u) Phi||`.
pub fn tangency_defect(phi: &FockVector, u: &[C64]) -> f64 {
    annihilate_op(phi.basis.as_ref(), u).apply(&phi.amps).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Norm of the part of `1/2 sum K_xy a^*_x a^*_y Phi` that falls above the truncation.
pub fn truncation_overflow(phi: &FockVector, k: &DMatrix<C64>) -> f64 {
    let basis = phi.basis.as_ref();
    let n_max = basis.n_max();
    let m = basis.modes();
    let mut spill: HashMap<Vec<u8>, C64> = HashMap::new();
    let mut buf = vec![0u8; m];
    for n in n_max.saturating_sub(1)..=n_max {
        let range = basis.sector_range(n);
        for i in range {
            let amp = phi.amps[i];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let occ = basis.state(i);
            for x in 0..m {
                for y in 0..m {
                    let kxy = k[(x, y)];
                    if kxy == C64::new(0.0, 0.0) {
                        continue;
                    }
                    buf.copy_from_slice(occ);
                    buf[y] += 1;
                    let mut a = f64::from(buf[y]).sqrt();
                    buf[x] += 1;
                    a *= f64::from(buf[x]).sqrt();
                    if n + 2 > n_max {
                        *spill.entry(buf.clone()).or_default() += kxy * amp * (0.5 * a);
                    }
                }
            }
        }
    }
    spill.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationOptions {
    /// Midpoint step.
    pub dt: f64,
    pub krylov: KrylovOptions,
    /// Largest tolerated `||a(u(t)) Phi(t)||` before the run is aborted.
    pub tangency_limit: f64,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            krylov: KrylovOptions::default(),
            tangency_limit: 1e-4,
        }
    }
}

/// Per-step diagnostics of a fluctuation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSample {
    pub time: f64,
    pub norm: f64,
    pub tangency: f64,
    pub number: f64,
    /// `<dGamma(1 + h0)>`.
    pub energy_form: f64,
    pub sector_norms: Vec<f64>,
    /// Accumulated `int ||overflow|| dt`.
    pub leakage: f64,
}

#[derive(Debug, Clone)]
pub struct FluctuationRun {
    pub times: Vec<f64>,
    pub states: Vec<FockVector>,
    pub samples: Vec<FluctuationSample>,
}

impl FluctuationRun {
    pub fn state_at(&self, t: f64) -> Option<&FockVector> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| &self.states[i])
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.samples.first().map(|s| s.norm).unwrap_or(1.0);
        self.samples.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    pub fn max_tangency(&self) -> f64 {
        self.samples.iter().map(|s| s.tangency).fold(0.0, f64::max)
    }

    pub fn leakage(&self) -> f64 {
        self.samples.last().map(|s| s.leakage).unwrap_or(0.0)
    }

    /// Columns: `time, norm, tangency, number, energy_form, phi_0 .. phi_6, leakage`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["time", "norm", "tangency", "number", "energy_form"].map(String::from).to_vec();
        header.extend((0..=PROFILE_SECTORS).map(|n| format!("phi_{n}")));
        header.push("leakage".into());
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = [s.time, s.norm, s.tangency, s.number, s.energy_form]
                .iter()
                .map(|v| format!("{v:.17e}"))
                .collect();
            row.extend(s.sector_norms.iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{:.17e}", s.leakage));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Generator at a given condensate: the operator and the pair-creation kernel.
pub(crate) type Generator<'a> = dyn Fn(&[C64]) -> Result<(SparseOperator, DMatrix<C64>)> + Sync + 'a;

fn sample(
    phi: &FockVector,
    u: &[C64],
    time: f64,
    energy_form: &SparseOperator,
    leakage: f64,
) -> FluctuationSample {
    FluctuationSample {
        time,
        norm: phi.norm(),
        tangency: tangency_defect(phi, u),
        number: phi.number_expectation(),
        energy_form: phi.expectation(energy_form).re,
        sector_norms: (0..=PROFILE_SECTORS).map(|n| phi.sector_norm(n)).collect(),
        leakage,
    }
}

/// Exponential midpoint integration of `i dPhi/dt = G(u(t)) Phi` along `traj`.
pub(crate) fn evolve(
    phi0: &FockVector,
    traj: &HartreeTrajectory,
    h0: &OneBodyOperator,
    times: &[f64],
    opts: &FluctuationOptions,
    generator: &Generator<'_>,
    enforce_tangency: bool,
) -> Result<FluctuationRun> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidInput("fluctuation step must be positive".into()));
    }
    if times.iter().any(|t| *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("output times must be nonnegative and nondecreasing".into()));
    }
    let basis = phi0.basis.clone();
    let m = basis.modes();
    let energy_form = dgamma(basis.as_ref(), &(h0.matrix() + DMatrix::<C64>::identity(m, m)));
    let mut phi = phi0.clone();
    let mut t = 0.0;
    let mut leakage = 0.0;
    let u0 = traj.u_at(0.0)?;
    let mut run = FluctuationRun {
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        samples: vec![sample(&phi, &u0, 0.0, &energy_form, 0.0)],
    };
    for &target in times {
        while target - t > 1e-12 * target.max(1.0) {
            let step = opts.dt.min(target - t);
            let mid = traj.u_at(t + 0.5 * step)?;
            let (op, k2) = generator(&mid)?;
            leakage += step * truncation_overflow(&phi, &k2);
            phi.amps = expm_apply(&op, &phi.amps, step, &opts.krylov)?;
            t += step;
            let u = traj.u_at(t)?;
            let s = sample(&phi, &u, t, &energy_form, leakage);
            if enforce_tangency && s.tangency > opts.tangency_limit {
                return Err(Error::TangencyDefect {
                    time: t,
                    defect: s.tangency,
                });
            }
            run.samples.push(s);
        }
        t = target;
        run.times.push(target);
        run.states.push(phi.clone());
    }
    Ok(run)
}

pub(crate) fn check_initial(phi0: &FockVector, condensate: Option<&[C64]>) -> Result<()> {
    let n = phi0.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("initial fluctuation state is not normalized (|Phi0| = {n})")));
    }
    if let Some(u0) = condensate {
        let d = tangency_defect(phi0, u0);
        if d > 1e-8 {
            return Err(Error::Precondition(format!(
                "initial fluctuation state is not orthogonal to the condensate (|a(u0) Phi0| = {d:.3e})"
            )));
        }
    }
    Ok(())
}

/// `i dPhi/dt = H(t) Phi` with the exponential midpoint rule, sampled at `times`.
pub fn solve_bogoliubov(
    phi0: &FockVector,
    traj: &HartreeTrajectory,
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    times: &[f64],
    opts: &FluctuationOptions,
) -> Result<FluctuationRun> {
    check_initial(phi0, Some(&traj.u_at(0.0)?))?;
    let basis = phi0.basis.clone();
    let generator = |u: &[C64]| -> Result<(SparseOperator, DMatrix<C64>)> {
        let kern = build_kernels(u, w)?;
        let h = hartree_hamiltonian(h0, w, u);
        let op = quadratic_hamiltonian(basis.as_ref(), &(&h + &kern.k1), &kern.k2)?;
        Ok((op, kern.k2))
    };
    evolve(phi0, traj, h0, times, opts, &generator, true)
}

/// `i d(phi_n)/dt` for `n = 0, 1, 2`, computed on dense symmetric tensors from
/// the coupled sector equations.
pub fn hierarchy_rhs(phi: &FockVector, kern: &Kernels, h_plus_k1: &DMatrix<C64>) -> Result<Vec<SectorVector>> {
    if phi.n_max() < 4 {
        return Err(Error::InvalidInput("the hierarchy check needs sectors up to 4".into()));
    }
    let m = phi.modes();
    let tensors: Vec<Vec<C64>> = (0..=4).map(|n| to_tensor(&phi.sector_vector(n))).collect();
    let k2 = &kern.k2;
    let mut out = Vec::with_capacity(3);
    for n in 0..=2usize {
        let len = m.pow(n as u32);
        let mut t = vec![C64::new(0.0, 0.0); len];
        // One-body part sum_j A_j.
        for (idx, slot) in t.iter_mut().enumerate() {
            let digits = split(idx, m, n);
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                for y in 0..m {
                    let mut d = digits.clone();
                    d[j] = y;
                    acc += h_plus_k1[(digits[j], y)] * tensors[n][join(&d, m)];
                }
            }
            *slot = acc;
        }
        // Contraction with conj(K2) against phi_{n+2}.
        let c_down = 0.5 * (((n + 2) * (n + 1)) as f64).sqrt();
        for (idx, slot) in t.iter_mut().enumerate() {
            let digits = split(idx, m, n);
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..m {
                for y in 0..m {
                    let mut d = vec![x, y];
                    d.extend_from_slice(&digits);
                    acc += k2[(x, y)].conj() * tensors[n + 2][join(&d, m)];
                }
            }
            *slot += acc * c_down;
        }
        // Injection of K2 from phi_{n-2}.
        if n >= 2 {
            let c_up = 1.0 / ((n * (n - 1)) as f64).sqrt();
            for (idx, slot) in t.iter_mut().enumerate() {
                let digits = split(idx, m, n);
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in i + 1..n {
                        let rest: Vec<usize> =
                            digits.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, &v)| v).collect();
                        acc += k2[(digits[i], digits[j])] * tensors[n - 2][join(&rest, m)];
                    }
                }
                *slot += acc * c_up;
            }
        }
        out.push(from_tensor(&t, phi.basis.sector(n).clone())?);
    }
    Ok(out)
}

// Tuple index convention of `to_tensor`: the first coordinate is the least significant digit.
fn split(mut idx: usize, m: usize, n: usize) -> Vec<usize> {
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        d.push(idx % m);
        idx /= m;
    }
    d
}

fn join(d: &[usize], m: usize) -> usize {
    d.iter().rev().fold(0, |acc, &x| acc * m + x)
}

/// Smallest constants found by the finite-dimensional operator inequality checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BogBoundsReport {
    pub k2_frobenius: f64,
    /// Smallest `C` with `C (dGamma(1 + h0) + 1) >= H`.
    pub c_upper: f64,
    /// Smallest `C >= 0` with `H - dGamma(h0) + C (N + 1) >= 0`.
    pub c_lower: f64,
    /// Min eigenvalue of `|K2|_F (N + 2) -+ pairing`, minimized over both signs.
    pub pairing_margin: f64,
    /// Min eigenvalue of `2 |K2|_F (N + 1) -+ i[H, N]`, minimized over both signs.
    pub commutator_margin: f64,
}

impl BogBoundsReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.c_upper.is_finite() && self.c_lower.is_finite() && self.pairing_margin >= -tol && self.commutator_margin >= -tol
    }
}

/// Largest dense basis accepted by [`verify_bog_bounds`].
pub const DENSE_CHECK_LIMIT: usize = 5000;

/// Smallest `c` in `[0, inf)` with `min_eig(c * a + b) >= 0`, by bracketing and bisection.
pub fn smallest_psd_shift(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let ok = |c: f64| linalg::min_eigenvalue(&(a * C64::new(c, 0.0) + b)) >= -1e-12 * (1.0 + c);
    if ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn verify_bog_bounds(
    u: &[C64],
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    basis: &FockBasis,
) -> Result<BogBoundsReport> {
    if basis.dim() > DENSE_CHECK_LIMIT {
        return Err(Error::BasisTooLarge {
            size: basis.dim(),
            cap: DENSE_CHECK_LIMIT,
        });
    }
    let m = basis.modes();
    let kern = build_kernels(u, w)?;
    let bog = assemble_bog_h(u, h0, w, basis)?;
    let hd = bog.op.to_dense();
    let dim = basis.dim();
    let id = DMatrix::<C64>::identity(dim, dim);
    let number = number_op(basis).to_dense();
    let form = dgamma(basis, &(h0.matrix() + DMatrix::<C64>::identity(m, m))).to_dense() + &id;
    let c_upper = smallest_psd_shift(&form, &(-&hd));
    let kin = dgamma(basis, h0.matrix()).to_dense();
    let c_lower = smallest_psd_shift(&(&number + &id), &(&hd - kin));

    let kf = kern.k2_frobenius();
    let pair = pairing_op(basis, &kern.k2)?.to_dense();
    let weight2 = (&number + &id * C64::new(2.0, 0.0)) * C64::new(kf, 0.0);
    let pairing_margin = linalg::min_eigenvalue(&(&weight2 - &pair)).min(linalg::min_eigenvalue(&(&weight2 + &pair)));

    let comm = (&hd * &number - &number * &hd) * C64::new(0.0, 1.0);
    let weight1 = (&number + &id) * C64::new(2.0 * kf, 0.0);
    let commutator_margin =
        linalg::min_eigenvalue(&(&weight1 - &comm)).min(linalg::min_eigenvalue(&(&weight1 + &comm)));
    Ok(BogBoundsReport {
        k2_frobenius: kf,
        c_upper,
        c_lower,
        pairing_margin,
        commutator_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use crate::fock::{create_op, pair_creation_op};
    use crate::hartree::solve_hartree;
    use crate::model::{build_interaction, build_kinetic, ModeBasis};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn unit(v: &[C64]) -> Vec<C64> {
        let n = linalg::norm(v);
        v.iter().map(|x| x / n).collect()
    }

    fn setup(m: usize, strength: f64) -> (OneBodyOperator, TwoBodyKernel, Vec<C64>) {
        let b = ModeBasis::new(m, 1.0).unwrap();
        let w = build_interaction(&b, |r| strength * (-r * r).exp()).unwrap();
        let u: Vec<C64> = (0..m).map(|x| C64::from_polar(1.0 + 0.3 * x as f64, 0.4 * x as f64)).collect();
        (build_kinetic(&b), w, unit(&u))
    }

    #[test]
    fn fully_projected_constant_kernel_vanishes() {
        let b = ModeBasis::new(2, 1.0).unwrap();
        let w = build_interaction(&b, |_| 3.0).unwrap();
        let k = build_kernels(&[c(1.0), c(0.0)], &w).unwrap();
        assert!((k.k2_tilde[(0, 0)] - c(3.0)).norm() < 1e-15);
        assert!(k.k2.norm() < 1e-15);
    }

    #[test]
    fn projected_kernels_annihilate_condensate() {
        let (_, w, u) = setup(4, 1.5);
        let k = build_kernels(&u, &w).unwrap();
        let ubar = nalgebra::DVector::from_iterator(4, u.iter().map(|z| z.conj()));
        assert!((&k.k2 * ubar).norm() < 1e-14);
        assert!((&k.k1 * linalg::to_dvector(&u)).norm() < 1e-14);
        assert_eq!(k.k2, k.k2.transpose());
        assert!((&k.q * &k.k1_tilde * &k.q - &k.k1).norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_matches_dense_double_sum() {
        let (h0, w, u) = setup(2, 1.0);
        let basis = FockBasis::new(2, 3).unwrap();
        let bog = assemble_bog_h(&u, &h0, &w, &basis).unwrap();
        let kern = build_kernels(&u, &w).unwrap();
        let a: Vec<DMatrix<C64>> = (0..2)
            .map(|x| {
                let mut e = vec![c(0.0); 2];
                e[x] = c(1.0);
                annihilate_op(&basis, &e).to_dense()
            })
            .collect();
        let one = &bog.h + &kern.k1;
        let mut dense = DMatrix::<C64>::zeros(basis.dim(), basis.dim());
        for x in 0..2 {
            for y in 0..2 {
                dense += a[x].adjoint() * &a[y] * one[(x, y)];
                let pair = a[x].adjoint() * a[y].adjoint() * (kern.k2[(x, y)] * 0.5);
                dense += &pair + pair.adjoint();
            }
        }
        assert!((bog.op.to_dense() - dense).norm() < 1e-12);
        assert!(bog.op.expectation(&FockVector::vacuum(Arc::new(basis)).amps).norm() < 1e-15);
    }

    #[test]
    fn free_case_is_second_quantized_kinetic() {
        let b = ModeBasis::new(3, 1.0).unwrap();
        let w = build_interaction(&b, |_| 0.0).unwrap();
        let h0 = build_kinetic(&b);
        let basis = FockBasis::new(3, 3).unwrap();
        let u = unit(&[c(1.0), c(0.5), c(0.2)]);
        let bog = assemble_bog_h(&u, &h0, &w, &basis).unwrap();
        assert!((bog.op.to_dense() - dgamma(&basis, h0.matrix()).to_dense()).norm() < 1e-14);
    }

    #[test]
    fn tangency_examples() {
        let basis = Arc::new(FockBasis::new(3, 3).unwrap());
        let u = unit(&[c(1.0), C64::new(0.0, 0.5), c(0.2)]);
        let vac = FockVector::vacuum(basis.clone());
        assert_eq!(tangency_defect(&vac, &u), 0.0);
        let one = FockVector::new(basis.clone(), create_op(basis.as_ref(), &u).apply(&vac.amps)).unwrap();
        assert!((tangency_defect(&one, &u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hierarchy_reads_off_vacuum() {
        let (_, w, u) = setup(3, 2.0);
        let kern = build_kernels(&u, &w).unwrap();
        let basis = Arc::new(FockBasis::new(3, 4).unwrap());
        let vac = FockVector::vacuum(basis);
        let out = hierarchy_rhs(&vac, &kern, &DMatrix::zeros(3, 3)).unwrap();
        assert!(out[0].norm() < 1e-15 && out[1].norm() < 1e-15);
        // 1/sqrt(2) * K2(x1, x2) as a symmetric two-particle tensor.
        let t = to_tensor(&out[2]);
        for x in 0..3 {
            for y in 0..3 {
                assert!((t[x + 3 * y] - kern.k2[(x, y)] / 2f64.sqrt()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn hierarchy_matches_assembled_hamiltonian() {
        let (h0, w, u) = setup(3, 2.0);
        let basis = Arc::new(FockBasis::new(3, 5).unwrap());
        let bog = assemble_bog_h(&u, &h0, &w, &basis).unwrap();
        let kern = build_kernels(&u, &w).unwrap();
        let amps: Vec<C64> = (0..basis.dim()).map(|i| C64::new((1.3 * i as f64).sin(), (0.7 * i as f64).cos())).collect();
        let phi = FockVector::new(basis.clone(), amps).unwrap();
        let hphi = FockVector::new(basis, bog.op.apply(&phi.amps)).unwrap();
        let rhs = hierarchy_rhs(&phi, &kern, &(&bog.h + &kern.k1)).unwrap();
        for (n, s) in rhs.iter().enumerate() {
            assert!(linalg::distance(&s.amps, hphi.sector(n)) < 1e-12, "sector {n}");
        }
    }

    #[test]
    fn overflow_counts_pairs_above_truncation() {
        let basis = Arc::new(FockBasis::new(1, 2).unwrap());
        let mut phi = FockVector::zeros(basis.clone());
        phi.amps[2] = c(1.0);
        let k = DMatrix::from_element(1, 1, c(1.0));
        // 1/2 a^*a^* |2> = 1/2 sqrt(12) |4>.
        assert!((truncation_overflow(&phi, &k) - 0.5 * 12f64.sqrt()).abs() < 1e-14);
        let big = FockBasis::new(1, 4).unwrap();
        let full = pair_creation_op(&big, &k).apply(&phi.embed(Arc::new(big.clone())).unwrap().amps);
        assert!((full[4].norm() - 0.5 * 12f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn free_vacuum_stays_put() {
        let b = ModeBasis::new(3, 1.0).unwrap();
        let w = build_interaction(&b, |_| 0.0).unwrap();
        let h0 = build_kinetic(&b);
        let u0 = unit(&[c(1.0), c(0.3), c(0.1)]);
        let traj = solve_hartree(&h0, &w, &u0, 1.0, 0.01).unwrap();
        let vac = FockVector::vacuum(Arc::new(FockBasis::new(3, 4).unwrap()));
        let run = solve_bogoliubov(&vac, &traj, &h0, &w, &[0.5, 1.0], &FluctuationOptions::default()).unwrap();
        assert!(run.states[1].distance(&vac).unwrap() < 1e-14);
    }

    #[test]
    fn bounds_hold_for_gaussian_interaction() {
        let (h0, w, u) = setup(3, 1.5);
        let basis = FockBasis::new(3, 4).unwrap();
        let rep = verify_bog_bounds(&u, &h0, &w, &basis).unwrap();
        assert!(rep.passes(1e-10), "{rep:?}");
        assert!(rep.c_upper > 0.0);
    }

    #[test]
    fn psd_shift_bisection() {
        let a = DMatrix::<C64>::identity(2, 2);
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-3.0), c(1.0)]));
        assert!((smallest_psd_shift(&a, &b) - 3.0).abs() < 1e-8);
    }
}
