//! The convergence experiment: exact `N`-body dynamics mapped through `U_N(t)` against
//! one fluctuation run, for every `N` in the configuration.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Setup};
use super::rate::{fit_rate, RateFit};
use crate::bogoliubov::{solve_bogoliubov, FluctuationRun};
use crate::excitation::{apply_u_n, ExcitationFrame};
use crate::fock::{dgamma, hartree_block, FockBasis, FockVector, SectorVector};
use crate::hartree::{solve_hartree, HartreeTrajectory};
use crate::nbody::{build_hamiltonian, one_particle_density, projector, propagate_exact, trace_distance};
use crate::sparse::SparseOperator;
use crate::{Result, C64};

/// One `(N, t)` record. Numeric fields are `NaN` when the job for `N` failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub time: f64,
    /// `||U_N(t) Psi_N(t) - Phi(t)||`.
    pub err_norm: f64,
    /// `<delta, dGamma(1 + h0) delta>^{1/2}` for the same difference.
    pub err_energy: f64,
    /// `Tr |gamma_N(t) - |u(t)><u(t)||`.
    pub trace_dist_k1: f64,
    /// `<Psi_N(t), N_+(t) Psi_N(t)>`.
    pub expect_nplus: f64,
    /// Largest `||a(u) Phi||` up to `time`.
    pub tangency: f64,
    /// Accumulated truncation overflow of the fluctuation run up to `time`.
    pub leakage: f64,
    pub nbody_norm_drift: f64,
    pub nbody_energy_drift: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub time: f64,
    pub fit: Option<RateFit>,
    /// `err_norm` strictly decreasing along `n_list`.
    pub monotone: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    pub hartree_norm_drift: f64,
    pub hartree_energy_drift: f64,
    pub nbody_norm_drift: f64,
    pub nbody_energy_drift: f64,
    pub bogoliubov_norm_drift: f64,
    pub tangency: f64,
    pub leakage: f64,
}

/// A named pass/fail check with the measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

impl Gate {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n_list: Vec<usize>,
    pub rows: Vec<ConvergenceRow>,
    pub rates: Vec<RateRow>,
    pub conservation: Conservation,
    /// `(N, reason)` for every aborted job.
    pub failures: Vec<(usize, String)>,
}

/// The report together with the shared trajectory and fluctuation run.
#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub report: ConvergenceReport,
    pub trajectory: HartreeTrajectory,
    pub fluctuation: FluctuationRun,
}

impl ConvergenceReport {
    pub fn partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn rows_at(&self, t: f64) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(move |r| r.time == t)
    }

    pub fn errors_at(&self, t: f64) -> Vec<f64> {
        self.rows_at(t).map(|r| r.err_norm).collect()
    }

    pub fn rate_at(&self, t: f64) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.time == t)
    }

    pub fn gates(&self, cfg: &ExperimentConfig) -> Vec<Gate> {
        let tol = &cfg.tolerances;
        let c = &self.conservation;
        let mut gates = vec![
            Gate::at_most("hartree_drift", c.hartree_norm_drift.max(c.hartree_energy_drift), tol.hartree_drift),
            Gate::at_most("nbody_drift", c.nbody_norm_drift.max(c.nbody_energy_drift), tol.nbody_drift),
            Gate::at_most("bogoliubov_norm_drift", c.bogoliubov_norm_drift, tol.bogoliubov_norm_drift),
            Gate::at_most("tangency", c.tangency, tol.tangency),
            Gate::at_most("leakage", c.leakage, tol.leakage),
            Gate {
                name: "coverage".into(),
                value: self.failures.len() as f64,
                limit: "= 0".into(),
                pass: self.failures.is_empty(),
            },
        ];
        let rate = self.rate_at(cfg.rate_time);
        if tol.monotone {
            gates.push(Gate {
                name: format!("monotone_t{}", cfg.rate_time),
                value: if rate.is_some_and(|r| r.monotone) { 1.0 } else { 0.0 },
                limit: "= 1".into(),
                pass: rate.is_some_and(|r| r.monotone),
            });
        }
        if let Some([lo, hi]) = tol.slope_band {
            let slope = rate.and_then(|r| r.fit.as_ref()).map_or(f64::NAN, |f| f.slope);
            gates.push(Gate {
                name: format!("slope_t{}", cfg.rate_time),
                value: slope,
                limit: format!("in [{lo}, {hi}]"),
                pass: (lo..=hi).contains(&slope),
            });
        }
        if let Some(limit) = tol.max_err {
            let worst = self.rows.iter().map(|r| r.err_norm).fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
            gates.push(Gate {
                name: "max_err".into(),
                value: worst,
                limit: format!("<= {limit:e}"),
                pass: worst <= limit,
            });
        }
        gates
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        write_rows(&self.rows, out)
    }

    /// Columns: `time, slope, intercept, r2, stderr, band_lo, band_hi, points, monotone, note`.
    pub fn write_rates_csv(&self, out: impl Write) -> Result<()> {
        write_rates(&self.rates, out)
    }
}

pub fn write_rows(rows: &[ConvergenceRow], out: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_rows(input: impl Read) -> Result<Vec<ConvergenceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

pub fn write_rates(rates: &[RateRow], out: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["time", "slope", "intercept", "r2", "stderr", "band_lo", "band_hi", "points", "monotone", "note"])?;
    for r in rates {
        let nums = match &r.fit {
            Some(f) => [f.slope, f.intercept, f.r2, f.stderr, f.band[0], f.band[1]].map(|v| v.to_string()),
            None => std::array::from_fn(|_| "NaN".to_string()),
        };
        let mut rec = vec![r.time.to_string()];
        rec.extend(nums);
        rec.push(r.fit.as_ref().map_or(0, |f| f.points).to_string());
        rec.push(r.monotone.to_string());
        rec.push(r.note.clone());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fits at every positive time present in `rows`, using the successful rows only.
pub fn fit_rows(rows: &[ConvergenceRow]) -> Vec<RateRow> {
    let mut times: Vec<f64> = rows.iter().map(|r| r.time).filter(|&t| t > 0.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let mut pts: Vec<(usize, f64)> =
                rows.iter().filter(|r| r.time == t && r.status == "ok").map(|r| (r.n, r.err_norm)).collect();
            pts.sort_by_key(|p| p.0);
            let monotone = pts.len() >= 2 && pts.windows(2).all(|p| p[1].1 < p[0].1);
            let ns: Vec<usize> = pts.iter().map(|p| p.0).collect();
            let errs: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let (fit, note) = match fit_rate(&errs, &ns) {
                Ok(f) if f.excluded.is_empty() => (Some(f), String::new()),
                Ok(f) => {
                    let note = format!("excluded N = {:?}", f.excluded);
                    (Some(f), note)
                }
                Err(e) => (None, e.to_string()),
            };
            RateRow { time: t, fit, monotone, note }
        })
        .collect()
}

fn failed_rows(n: usize, times: &[f64], reason: &str) -> Vec<ConvergenceRow> {
    times
        .iter()
        .map(|&time| ConvergenceRow {
            n,
            time,
            err_norm: f64::NAN,
            err_energy: f64::NAN,
            trace_dist_k1: f64::NAN,
            expect_nplus: f64::NAN,
            tangency: f64::NAN,
            leakage: f64::NAN,
            nbody_norm_drift: f64::NAN,
            nbody_energy_drift: f64::NAN,
            status: format!("failed: {reason}"),
        })
        .collect()
}

/// Largest tangency and the leakage of `run` up to time `t`.
fn fluctuation_diagnostics(run: &FluctuationRun, t: f64) -> (f64, f64) {
    let upto = run.samples.iter().take_while(|s| s.time <= t + 1e-12 * t.max(1.0));
    upto.fold((0.0, 0.0), |(tan, _), s| (f64::max(tan, s.tangency), s.leakage))
}

/// `sqrt(<delta, dGamma(1 + h0) delta>)` with `delta = a - b` on a common truncation.
fn energy_distance(a: &FockVector, b: &FockVector, form: &SparseOperator, basis: &Arc<FockBasis>) -> Result<f64> {
    let mut d = a.embed(basis.clone())?;
    let e = b.embed(basis.clone())?;
    d.amps.iter_mut().zip(&e.amps).for_each(|(x, y)| *x -= y);
    Ok(d.expectation(form).re.max(0.0).sqrt())
}

/// Exact dynamics for one `N`, sampled at the output times.
struct Propagated {
    n: usize,
    psis: Vec<SectorVector>,
    energies: Vec<f64>,
}

fn propagate_particles(cfg: &ExperimentConfig, setup: &Setup, n: usize) -> Result<Propagated> {
    let h = build_hamiltonian(&setup.h0, &setup.w, n)?;
    let psi0 = hartree_block(&setup.u0, &setup.phi0, n)?;
    let psis = propagate_exact(&h, &psi0, &cfg.output_times, &cfg.propagation_options())?;
    let energies = std::iter::once(&psi0).chain(&psis).map(|p| h.energy(p)).collect();
    Ok(Propagated { n, psis, energies })
}

fn compare_particles(
    cfg: &ExperimentConfig,
    setup: &Setup,
    traj: &HartreeTrajectory,
    fluct: &FluctuationRun,
    prop: &Propagated,
) -> Result<Vec<ConvergenceRow>> {
    let n = prop.n;
    let m = cfg.model.modes;
    let common = FockBasis::shared(m, n.max(cfg.n_max))?;
    let form = dgamma(common.as_ref(), &(setup.h0.matrix() + DMatrix::<C64>::identity(m, m)));
    let e0 = prop.energies[0];
    let mut rows = Vec::with_capacity(prop.psis.len());
    for (k, (psi, &t)) in prop.psis.iter().zip(&cfg.output_times).enumerate() {
        let u = traj.u_at(t)?;
        let frame = ExcitationFrame::new(&u, n)?;
        let mapped = apply_u_n(&frame, psi)?;
        let phi = &fluct.states[k];
        let (tangency, leakage) = fluctuation_diagnostics(fluct, t);
        let gamma = one_particle_density(psi)?;
        rows.push(ConvergenceRow {
            n,
            time: t,
            err_norm: mapped.distance(phi)?,
            err_energy: energy_distance(&mapped, phi, &form, &common)?,
            trace_dist_k1: trace_distance(&gamma, &projector(&u))?,
            expect_nplus: mapped.number_expectation(),
            tangency,
            leakage,
            nbody_norm_drift: (psi.norm() - 1.0).abs(),
            nbody_energy_drift: (prop.energies[k + 1] - e0).abs() / e0.abs().max(1e-300),
            status: "ok".into(),
        });
    }
    Ok(rows)
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceRun> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let traj = solve_hartree(&setup.h0, &setup.w, &setup.u0, cfg.horizon, cfg.dt_hartree)?;
    let phi0 = setup.phi0_vector(cfg.fock_basis()?)?;
    // The fluctuation run and the exact propagations are independent; the comparison
    // needs both.
    let (fluct, props) = rayon::join(
        || solve_bogoliubov(&phi0, &traj, &setup.h0, &setup.w, &cfg.output_times, &cfg.fluctuation_options()),
        || {
            cfg.n_list
                .par_iter()
                .map(|&n| (n, propagate_particles(cfg, &setup, n)))
                .collect::<Vec<_>>()
        },
    );
    let fluct = fluct?;
    let results: Vec<(usize, Result<Vec<ConvergenceRow>>)> = props
        .into_par_iter()
        .map(|(n, prop)| (n, prop.and_then(|p| compare_particles(cfg, &setup, &traj, &fluct, &p))))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, res) in results {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => {
                log::warn!("N = {n} aborted: {e}");
                rows.extend(failed_rows(n, &cfg.output_times, &e.to_string()));
                failures.push((n, e.to_string()));
            }
        }
    }
    let ok = rows.iter().filter(|r| r.status == "ok");
    let (nbody_norm_drift, nbody_energy_drift) =
        ok.fold((0.0, 0.0), |(a, b): (f64, f64), r| (a.max(r.nbody_norm_drift), b.max(r.nbody_energy_drift)));
    let conservation = Conservation {
        hartree_norm_drift: traj.norm_drift(),
        hartree_energy_drift: traj.energy_drift(),
        nbody_norm_drift,
        nbody_energy_drift,
        bogoliubov_norm_drift: fluct.max_norm_drift(),
        tangency: fluct.max_tangency(),
        leakage: fluct.leakage(),
    };
    let rates = fit_rows(&rows);
    Ok(ConvergenceRun {
        report: ConvergenceReport {
            n_list: cfg.n_list.clone(),
            rows,
            rates,
            conservation,
            failures,
        },
        trajectory: traj,
        fluctuation: fluct,
    })
}
