//! JSON experiment configuration. Missing fields take the defaults below, and the
//! fully resolved document is written next to the outputs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bogoliubov::FluctuationOptions;
use crate::fock::{FockBasis, FockVector, OccupationSpace, SectorBasis, SectorVector};
use crate::krylov::KrylovOptions;
use crate::linalg;
use crate::model::{build_interaction_kind, build_kinetic, Interaction, ModeBasis, OneBodyOperator, TwoBodyKernel};
use crate::nbody::PropagationOptions;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub modes: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub interaction: Interaction,
    /// External potential added to the kinetic operator, one value per site.
    #[serde(default)]
    pub potential: Option<Vec<f64>>,
}

fn default_spacing() -> f64 {
    1.0
}

/// Initial condensate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CondensateSpec {
    BasisState { site: usize },
    /// `exp(-(x - center)^2 / (2 width^2) + i momentum x)` at `x = position(site)`, normalized.
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    /// Amplitudes as `[re, im]` pairs; normalized on load.
    Table { values: Vec<C64> },
}

/// One sector of an initial excitation vector, in the lab occupation basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEntry {
    pub particles: usize,
    pub amps: Vec<C64>,
}

/// Initial excitation state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExcitationSpec {
    Vacuum,
    Table { sectors: Vec<SectorEntry> },
}

/// Gates checked by the `run` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub hartree_drift: f64,
    pub nbody_drift: f64,
    pub bogoliubov_norm_drift: f64,
    pub tangency: f64,
    pub leakage: f64,
    /// Accepted band for the fitted exponent at `rate_time`; `null` skips the fit gate.
    pub slope_band: Option<[f64; 2]>,
    /// Require `err_norm` to decrease strictly in `N` at `rate_time`.
    pub monotone: bool,
    /// Upper bound on every `err_norm`, for runs where both dynamics coincide.
    pub max_err: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hartree_drift: 1e-8,
            nbody_drift: 1e-8,
            bogoliubov_norm_drift: 1e-7,
            tangency: 1e-6,
            leakage: 1e-6,
            slope_band: Some([-0.7, -0.3]),
            monotone: true,
            max_err: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub n_list: Vec<usize>,
    /// Fock truncation of the fluctuation state.
    pub n_max: usize,
    pub u0: CondensateSpec,
    #[serde(default = "default_phi0")]
    pub phi0: ExcitationSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_output_times")]
    pub output_times: Vec<f64>,
    #[serde(default = "default_dt_hartree")]
    pub dt_hartree: f64,
    #[serde(default = "default_dt_fock")]
    pub dt_fock: f64,
    /// Longest Krylov substep of the exact propagation.
    #[serde(default = "default_dt_nbody")]
    pub dt_nbody: f64,
    /// Sampling interval of the single-`N` diagnostics.
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Output time at which the rate and monotonicity gates are applied.
    #[serde(default = "default_rate_time")]
    pub rate_time: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_phi0() -> ExcitationSpec {
    ExcitationSpec::Vacuum
}
fn default_horizon() -> f64 {
    2.0
}
fn default_output_times() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 1.0, 2.0]
}
fn default_dt_hartree() -> f64 {
    1e-3
}
fn default_dt_fock() -> f64 {
    2e-3
}
fn default_dt_nbody() -> f64 {
    0.1
}
fn default_sample_dt() -> f64 {
    0.05
}
fn default_rate_time() -> f64 {
    1.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything derived from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub h0: OneBodyOperator,
    pub w: TwoBodyKernel,
    pub u0: Vec<C64>,
    /// Initial excitation sectors `phi_0 .. phi_k` in the lab basis.
    pub phi0: Vec<SectorVector>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolved document with every default filled in.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.model.modes == 0 {
            return bad("model.modes must be positive".into());
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return bad("n_list needs entries >= 2".into());
        }
        if self.n_list.windows(2).any(|p| p[1] <= p[0]) {
            return bad("n_list must be strictly increasing".into());
        }
        for (name, v) in [
            ("dt_hartree", self.dt_hartree),
            ("dt_fock", self.dt_fock),
            ("dt_nbody", self.dt_nbody),
            ("sample_dt", self.sample_dt),
            ("horizon", self.horizon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.output_times.iter().any(|&t| t < 0.0 || t > self.horizon) {
            return bad("output_times must lie in [0, horizon]".into());
        }
        if self.output_times.windows(2).any(|p| p[1] <= p[0]) {
            return bad("output_times must be strictly increasing".into());
        }
        if !self.output_times.contains(&self.rate_time) {
            return bad(format!("rate_time {} is not an output time", self.rate_time));
        }
        if let ExcitationSpec::Table { sectors } = &self.phi0 {
            if let Some(top) = sectors.iter().map(|s| s.particles).max() {
                if top > self.n_max {
                    return bad(format!("phi0 has a sector {top} above n_max = {}", self.n_max));
                }
                if top > self.n_list[0] {
                    return bad(format!("phi0 has a sector {top} above the smallest N = {}", self.n_list[0]));
                }
            }
        }
        Ok(())
    }

    pub fn mode_basis(&self) -> Result<ModeBasis> {
        ModeBasis::new(self.model.modes, self.model.spacing)
    }

    pub fn fluctuation_options(&self) -> FluctuationOptions {
        FluctuationOptions {
            dt: self.dt_fock,
            ..Default::default()
        }
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions {
            krylov: KrylovOptions {
                max_substep: self.dt_nbody,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn fock_basis(&self) -> Result<Arc<FockBasis>> {
        FockBasis::shared(self.model.modes, self.n_max)
    }

    /// Output times sorted with `0` removed; the solvers start there anyway.
    pub fn positive_times(&self) -> Vec<f64> {
        self.output_times.iter().copied().filter(|&t| t > 0.0).collect()
    }

    pub fn setup(&self) -> Result<Setup> {
        let basis = self.mode_basis()?;
        let mut h0 = build_kinetic(&basis);
        if let Some(v) = &self.model.potential {
            h0 = h0.with_potential(v)?;
        }
        let w = build_interaction_kind(&basis, &self.model.interaction)?;
        let u0 = self.condensate(&basis)?;
        let phi0 = self.excitation(&u0)?;
        Ok(Setup { h0, w, u0, phi0 })
    }

    fn condensate(&self, basis: &ModeBasis) -> Result<Vec<C64>> {
        let m = basis.modes;
        let raw: Vec<C64> = match &self.u0 {
            CondensateSpec::BasisState { site } => {
                if *site >= m {
                    return Err(Error::InvalidInput(format!("u0 site {site} outside 0..{m}")));
                }
                (0..m).map(|x| C64::new(if x == *site { 1.0 } else { 0.0 }, 0.0)).collect()
            }
            CondensateSpec::Gaussian { center, width, momentum } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidInput("u0 width must be positive".into()));
                }
                (0..m)
                    .map(|i| {
                        let x = basis.position(i);
                        C64::from_polar((-(x - center).powi(2) / (2.0 * width * width)).exp(), momentum * x)
                    })
                    .collect()
            }
            CondensateSpec::Table { values } => {
                if values.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        found: values.len(),
                    });
                }
                values.clone()
            }
        };
        let n = linalg::norm(&raw);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput("u0 has zero norm".into()));
        }
        Ok(raw.iter().map(|z| z / n).collect())
    }

    fn excitation(&self, u0: &[C64]) -> Result<Vec<SectorVector>> {
        let m = u0.len();
        let sectors = match &self.phi0 {
            ExcitationSpec::Vacuum => {
                let vac = SectorVector::new(Arc::new(SectorBasis::new(m, 0)?), vec![C64::new(1.0, 0.0)])?;
                return Ok(vec![vac]);
            }
            ExcitationSpec::Table { sectors } => sectors,
        };
        let top = sectors.iter().map(|s| s.particles).max().unwrap_or(0);
        let mut out: Vec<SectorVector> = (0..=top)
            .map(|n| SectorBasis::new(m, n).map(|b| SectorVector::zeros(Arc::new(b))))
            .collect::<Result<_>>()?;
        for s in sectors {
            let slot = &mut out[s.particles];
            if s.amps.len() != slot.basis.dim() {
                return Err(Error::DimensionMismatch {
                    expected: slot.basis.dim(),
                    found: s.amps.len(),
                });
            }
            slot.amps.clone_from(&s.amps);
        }
        let total: f64 = out.iter().map(|v| v.norm().powi(2)).sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("sum of |phi_n|^2 is {total}, expected 1")));
        }
        Ok(out)
    }
}

impl Setup {
    /// `Phi_0` on the given Fock basis.
    pub fn phi0_vector(&self, basis: Arc<FockBasis>) -> Result<FockVector> {
        let mut v = FockVector::zeros(basis);
        for phi in &self.phi0 {
            v.set_sector(phi)?;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = ExperimentConfig::from_json(
            r#"{"model": {"modes": 3, "interaction": {"kind": "zero"}}, "n_list": [2, 3, 4], "n_max": 4,
                "u0": {"kind": "basis_state", "site": 0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.output_times, vec![0.0, 0.25, 0.5, 1.0, 2.0]);
        assert_eq!(cfg.phi0, ExcitationSpec::Vacuum);
        assert_eq!(cfg.tolerances, Tolerances::default());
        let again = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unsorted_particle_numbers() {
        let text = r#"{"model": {"modes": 3, "interaction": {"kind": "zero"}}, "n_list": [4, 3], "n_max": 4,
                "u0": {"kind": "basis_state", "site": 0}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn table_excitation_must_be_normalized() {
        let text = r#"{"model": {"modes": 2, "interaction": {"kind": "zero"}}, "n_list": [2, 3], "n_max": 2,
                "u0": {"kind": "basis_state", "site": 0},
                "phi0": {"kind": "table", "sectors": [{"particles": 1, "amps": [[0.0, 0.0], [0.5, 0.0]]}]}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(matches!(cfg.setup(), Err(Error::Precondition(_))));
    }
}
