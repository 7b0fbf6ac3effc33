//! Experiment orchestration: configuration, the convergence study, rate fits, single-`N`
//! diagnostics, the dense algebra suite and the coherent-state comparison.

pub mod algebra;
pub mod compare;
pub mod config;
pub mod convergence;
pub mod rate;
pub mod single;

pub use algebra::{verify_algebra, AlgebraCheck, AlgebraReport, Criterion, DEFAULT_SIZES};
pub use compare::{compare_coherent, CoherentComparison, CoherentSample};
pub use config::{CondensateSpec, ExcitationSpec, ExperimentConfig, ModelConfig, SectorEntry, Setup, Tolerances};
pub use convergence::{
    fit_rows, read_rows, run_convergence, write_rates, ConvergenceReport, ConvergenceRow, ConvergenceRun, Gate, RateRow,
};
pub use rate::{fit_rate, RateFit};
pub use single::{run_single, sample_times, SingleRun, SingleSample};
