//! Full time series of every diagnostic for a single particle number.

use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::bogoliubov::{solve_bogoliubov, PROFILE_SECTORS};
use crate::excitation::{apply_u_n, ExcitationFrame};
use crate::fock::hartree_block;
use crate::hartree::solve_hartree;
use crate::nbody::{build_hamiltonian, one_particle_density, projector, propagate_exact, trace_distance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleSample {
    pub time: f64,
    pub err_norm: f64,
    pub trace_dist_k1: f64,
    /// `<Phi_N, (N + 1) Phi_N>` with `Phi_N = U_N Psi_N`.
    pub excited_weight: f64,
    pub gronwall_envelope: f64,
    pub phi_number: f64,
    pub phi_energy_form: f64,
    pub tangency: f64,
    pub leakage: f64,
    pub nbody_norm: f64,
    pub nbody_energy: f64,
    /// Largest odd-sector norm of `Phi`.
    pub odd_sectors: f64,
    /// `||phi_n||` for `n <= PROFILE_SECTORS`.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub particles: usize,
    pub samples: Vec<SingleSample>,
    /// Smallest `C` with `<Phi_N(t), (N+1) Phi_N(t)> <= C e^{Ct} <Phi_N(0), (N+1) Phi_N(0)>`
    /// at every sample.
    pub gronwall_c: f64,
}

impl SingleRun {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "time",
            "err_norm",
            "trace_dist_k1",
            "excited_weight",
            "gronwall_envelope",
            "phi_number",
            "phi_energy_form",
            "tangency",
            "leakage",
            "nbody_norm",
            "nbody_energy",
            "odd_sectors",
        ]
        .map(String::from)
        .to_vec();
        header.extend((0..=PROFILE_SECTORS).map(|n| format!("phi_{n}")));
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = [
                s.time,
                s.err_norm,
                s.trace_dist_k1,
                s.excited_weight,
                s.gronwall_envelope,
                s.phi_number,
                s.phi_energy_form,
                s.tangency,
                s.leakage,
                s.nbody_norm,
                s.nbody_energy,
                s.odd_sectors,
            ]
            .iter()
            .map(|v| v.to_string())
            .collect();
            rec.extend(s.profile.iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Smallest `c >= 1` with `c e^{c t} >= ratio`.
fn gronwall_constant(t: f64, ratio: f64) -> f64 {
    let ok = |c: f64| c * (c * t).exp() >= ratio;
    if ok(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while !ok(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

/// Sample grid `0, sample_dt, ...` up to the horizon, inclusive.
pub fn sample_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let steps = (cfg.horizon / cfg.sample_dt - 1e-9).ceil() as usize;
    (0..=steps).map(|k| (k as f64 * cfg.sample_dt).min(cfg.horizon)).collect()
}

pub fn run_single(cfg: &ExperimentConfig, particles: usize) -> Result<SingleRun> {
    cfg.validate()?;
    if particles < 2 {
        return Err(Error::InvalidInput(format!("need N >= 2, got {particles}")));
    }
    let setup = cfg.setup()?;
    let times = sample_times(cfg);
    let traj = solve_hartree(&setup.h0, &setup.w, &setup.u0, cfg.horizon, cfg.dt_hartree)?;
    let phi0 = setup.phi0_vector(cfg.fock_basis()?)?;
    let (fluct, exact) = rayon::join(
        || solve_bogoliubov(&phi0, &traj, &setup.h0, &setup.w, &times, &cfg.fluctuation_options()),
        || -> Result<_> {
            let h = build_hamiltonian(&setup.h0, &setup.w, particles)?;
            let psi0 = hartree_block(&setup.u0, &setup.phi0, particles)?;
            let psis = propagate_exact(&h, &psi0, &times, &cfg.propagation_options())?;
            Ok((h, psis))
        },
    );
    let fluct = fluct?;
    let (h, psis) = exact?;
    let mut samples = Vec::with_capacity(times.len());
    let mut weight0 = 1.0;
    let mut gronwall_c: f64 = 1.0;
    for (k, &t) in times.iter().enumerate() {
        let u = traj.u_at(t)?;
        let frame = ExcitationFrame::new(&u, particles)?;
        let mapped = apply_u_n(&frame, &psis[k])?;
        let phi = &fluct.states[k];
        let diag = fluct
            .samples
            .iter()
            .rev()
            .find(|s| s.time <= t + 1e-12 * t.max(1.0))
            .expect("the first sample is at t = 0");
        let weight = mapped.number_expectation() + mapped.norm().powi(2);
        if k == 0 {
            weight0 = weight;
        }
        gronwall_c = gronwall_c.max(gronwall_constant(t, weight / weight0));
        samples.push(SingleSample {
            time: t,
            err_norm: mapped.distance(phi)?,
            trace_dist_k1: trace_distance(&one_particle_density(&psis[k])?, &projector(&u))?,
            excited_weight: weight,
            gronwall_envelope: 0.0,
            phi_number: diag.number,
            phi_energy_form: diag.energy_form,
            tangency: fluct.samples.iter().take_while(|s| s.time <= t + 1e-12).map(|s| s.tangency).fold(0.0, f64::max),
            leakage: diag.leakage,
            nbody_norm: psis[k].norm(),
            nbody_energy: h.energy(&psis[k]),
            odd_sectors: (1..=phi.n_max()).step_by(2).map(|n| phi.sector_norm(n)).fold(0.0, f64::max),
            profile: (0..=PROFILE_SECTORS).map(|n| phi.sector_norm(n)).collect(),
        });
    }
    for s in &mut samples {
        s.gronwall_envelope = gronwall_c * (gronwall_c * s.time).exp() * weight0;
    }
    Ok(SingleRun {
        particles,
        samples,
        gronwall_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gronwall_constant_solves_the_envelope() {
        assert_eq!(gronwall_constant(0.0, 1.0), 1.0);
        let c = gronwall_constant(0.5, 10.0);
        assert!((c * (0.5 * c).exp() - 10.0).abs() < 1e-10);
    }
}
