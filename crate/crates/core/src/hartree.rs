//! Hartree flow `i du/dt = (h0 + w*|u|^2 - mu) u` with `mu = 1/2 <|u|^2, w*|u|^2>`.
//!
//! Integrated by classical RK4 with `mu` re-evaluated at every stage and no
//! renormalization; norm drift above `1e-6` aborts. Off-grid times are served by
//! cubic Hermite interpolation followed by renormalization.

use std::io::Write;

use nalgebra::DMatrix;

use crate::linalg;
use crate::model::{mean_field, OneBodyOperator, TwoBodyKernel};
use crate::{Error, Result, C64};

/// Largest tolerated `| |u(t)| - 1 |` along a trajectory.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// `mu = 1/2 sum_{x,y} |u_x|^2 W_xy |u_y|^2`.
pub fn chemical_potential(w: &TwoBodyKernel, u: &[C64]) -> f64 {
    let v = mean_field(w, u);
    0.5 * v.iter().zip(u).map(|(vx, ux)| vx * ux.norm_sqr()).sum::<f64>()
}

/// `e = <u, h0 u> + 1/2 <u, (w*|u|^2) u>`, which equals `<u, h u>` in the `mu` gauge.
pub fn hartree_energy(h0: &OneBodyOperator, w: &TwoBodyKernel, u: &[C64]) -> f64 {
    let kin = linalg::inner(u, &apply(h0.matrix(), u)).re;
    kin + chemical_potential(w, u)
}

/// One-particle generator `h = h0 + diag(w*|u|^2) - mu`.
pub fn hartree_hamiltonian(h0: &OneBodyOperator, w: &TwoBodyKernel, u: &[C64]) -> DMatrix<C64> {
    let v = mean_field(w, u);
    let mu = 0.5 * v.iter().zip(u).map(|(vx, ux)| vx * ux.norm_sqr()).sum::<f64>();
    let mut h = h0.matrix().clone();
    for (x, vx) in v.iter().enumerate() {
        h[(x, x)] += C64::new(vx - mu, 0.0);
    }
    h
}

fn apply(m: &DMatrix<C64>, u: &[C64]) -> Vec<C64> {
    (m * linalg::to_dvector(u)).iter().copied().collect()
}

/// `du/dt = -i h(u) u`.
pub fn hartree_rhs(h0: &OneBodyOperator, w: &TwoBodyKernel, u: &[C64]) -> Vec<C64> {
    let h = hartree_hamiltonian(h0, w, u);
    apply(&h, u).into_iter().map(|z| z * C64::new(0.0, -1.0)).collect()
}

/// Stored Hartree trajectory on a uniform grid.
#[derive(Debug, Clone)]
pub struct HartreeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub derivatives: Vec<Vec<C64>>,
    pub mu: Vec<f64>,
    pub energy: Vec<f64>,
}

impl HartreeTrajectory {
    pub fn modes(&self) -> usize {
        self.states[0].len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (start, end) = (self.times[0], self.horizon());
        let slack = 1e-12 * end.abs().max(1.0);
        if t < start - slack || t > end + slack {
            return Err(Error::OutOfRange { time: t, start, end });
        }
        let k = self.times.partition_point(|&s| s <= t);
        Ok(k.saturating_sub(1).min(self.times.len().saturating_sub(2)))
    }

    /// `u(t)` by cubic Hermite interpolation, renormalized; exact on grid points.
    pub fn u_at(&self, t: f64) -> Result<Vec<C64>> {
        if self.times.len() == 1 {
            return Ok(self.states[0].clone());
        }
        let k = self.locate(t)?;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        if t == t0 {
            return Ok(self.states[k].clone());
        }
        if t == t1 {
            return Ok(self.states[k + 1].clone());
        }
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let mut u: Vec<C64> = (0..self.modes())
            .map(|x| {
                self.states[k][x] * h00
                    + self.derivatives[k][x] * (h10 * h)
                    + self.states[k + 1][x] * h01
                    + self.derivatives[k + 1][x] * (h11 * h)
            })
            .collect();
        let n = linalg::norm(&u);
        u.iter_mut().for_each(|z| *z /= n);
        Ok(u)
    }

    /// Writes `time, re_0, im_0, ..., mu, energy, norm` per grid point.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["time".to_string()];
        for x in 0..self.modes() {
            header.push(format!("re_{x}"));
            header.push(format!("im_{x}"));
        }
        header.extend(["mu", "energy", "norm"].map(String::from));
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![format!("{:.17e}", self.times[i])];
            for z in &self.states[i] {
                row.push(format!("{:.17e}", z.re));
                row.push(format!("{:.17e}", z.im));
            }
            row.push(format!("{:.17e}", self.mu[i]));
            row.push(format!("{:.17e}", self.energy[i]));
            row.push(format!("{:.17e}", linalg::norm(&self.states[i])));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Largest relative energy deviation from `t = 0`.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs().max(1e-300))
            .fold(0.0, f64::max)
    }

    pub fn norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|u| (linalg::norm(u) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// RK4 from `u0` on `[0, horizon]` with step at most `dt`.
pub fn solve_hartree(
    h0: &OneBodyOperator,
    w: &TwoBodyKernel,
    u0: &[C64],
    horizon: f64,
    dt: f64,
) -> Result<HartreeTrajectory> {
    if u0.len() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: u0.len(),
        });
    }
    if (linalg::norm(u0) - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "initial condensate must be normalized, |u0| = {}",
            linalg::norm(u0)
        )));
    }
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidInput("need dt > 0 and horizon >= 0".into()));
    }
    let steps = (horizon / dt).ceil().max(if horizon > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { horizon / steps as f64 } else { 0.0 };
    let mut traj = HartreeTrajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        derivatives: Vec::with_capacity(steps + 1),
        mu: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
    };
    let mut u = u0.to_vec();
    let record = |traj: &mut HartreeTrajectory, t: f64, u: &[C64]| {
        traj.times.push(t);
        traj.states.push(u.to_vec());
        traj.derivatives.push(hartree_rhs(h0, w, u));
        traj.mu.push(chemical_potential(w, u));
        traj.energy.push(hartree_energy(h0, w, u));
    };
    record(&mut traj, 0.0, &u);
    for step in 1..=steps {
        let k1 = traj.derivatives.last().unwrap().clone();
        let shifted = |k: &[C64], c: f64| -> Vec<C64> { u.iter().zip(k).map(|(a, b)| a + b * c).collect() };
        let k2 = hartree_rhs(h0, w, &shifted(&k1, 0.5 * h));
        let k3 = hartree_rhs(h0, w, &shifted(&k2, 0.5 * h));
        let k4 = hartree_rhs(h0, w, &shifted(&k3, h));
        for x in 0..u.len() {
            u[x] += (k1[x] + k2[x] * 2.0 + k3[x] * 2.0 + k4[x]) * (h / 6.0);
        }
        let t = step as f64 * h;
        let drift = (linalg::norm(&u) - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { time: t, drift });
        }
        record(&mut traj, t, &u);
    }
    Ok(traj)
}
