//! Side-by-side fluctuation runs with the projected kernels and with the unprojected
//! ones of the coherent-state picture, from the same initial excitation.

use std::io::Write;

use super::config::ExperimentConfig;
use super::single::sample_times;
use crate::bogoliubov::{solve_bogoliubov, PROFILE_SECTORS};
use crate::coherent::solve_coherent_fluct;
use crate::hartree::solve_hartree;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSample {
    pub time: f64,
    /// `||Phi(t) - Xi(t)||`.
    pub gap: f64,
    pub phi_number: f64,
    pub xi_number: f64,
    pub phi_profile: Vec<f64>,
    pub xi_profile: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentComparison {
    pub samples: Vec<CoherentSample>,
    pub interacting: bool,
}

impl CoherentComparison {
    pub fn gap_at(&self, t: f64) -> Option<f64> {
        self.samples.iter().find(|s| (s.time - t).abs() <= 1e-12 * t.max(1.0)).map(|s| s.gap)
    }

    /// With an interaction the two runs must separate by `min_gap` at `t`; without one
    /// they must agree to `1e-10`.
    pub fn passes(&self, t: f64, min_gap: f64) -> bool {
        match self.gap_at(t) {
            Some(g) if self.interacting => g >= min_gap,
            Some(g) => g <= 1e-10,
            None => false,
        }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["time", "gap", "phi_number", "xi_number"].map(String::from).to_vec();
        header.extend((0..=PROFILE_SECTORS).map(|n| format!("phi_{n}")));
        header.extend((0..=PROFILE_SECTORS).map(|n| format!("xi_{n}")));
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> =
                [s.time, s.gap, s.phi_number, s.xi_number].iter().map(|v| v.to_string()).collect();
            rec.extend(s.phi_profile.iter().chain(&s.xi_profile).map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn compare_coherent(cfg: &ExperimentConfig) -> Result<CoherentComparison> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let times = sample_times(cfg);
    let traj = solve_hartree(&setup.h0, &setup.w, &setup.u0, cfg.horizon, cfg.dt_hartree)?;
    let start = setup.phi0_vector(cfg.fock_basis()?)?;
    let opts = cfg.fluctuation_options();
    let (phi, xi) = rayon::join(
        || solve_bogoliubov(&start, &traj, &setup.h0, &setup.w, &times, &opts),
        || solve_coherent_fluct(&start, &traj, &setup.h0, &setup.w, &times, &opts),
    );
    let (phi, xi) = (phi?, xi?);
    let profile = |v: &crate::fock::FockVector| (0..=PROFILE_SECTORS).map(|n| v.sector_norm(n)).collect::<Vec<_>>();
    let samples = times
        .iter()
        .zip(phi.states.iter().zip(&xi.states))
        .map(|(&time, (p, x))| {
            Ok(CoherentSample {
                time,
                gap: p.distance(x)?,
                phi_number: p.number_expectation(),
                xi_number: x.number_expectation(),
                phi_profile: profile(p),
                xi_profile: profile(x),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoherentComparison {
        samples,
        interacting: !setup.w.is_zero(),
    })
}
