//! Simulation tools: ground-truth data generating processes, oracle PD/PFI
//! values, bias decompositions, and coverage experiments for the intervals.

mod coverage;
mod decomposition;
mod dgp;
mod identity;
mod oracle;
mod presets;

pub use coverage::{
    coverage_csv, coverage_experiment, coverage_with_reference, reference_expectations, reference_key,
    refit_sweep, run_configs, sweep_csv, CoverageCell, CoverageConfig, CoverageReport, ReferenceValues,
    RepetitionFailure, SweepPoint, Target, TargetCoverage, COVERAGE_CSV_HEADER, DEFAULT_REFERENCE_RUNS,
    DEFAULT_REPETITIONS, MAX_FAILURE_RATE, MIN_REFERENCE_RUNS,
};
pub use decomposition::{
    fit_family, pd_mse_decomposition, pfi_bias_decomposition, pfi_mse_decomposition, MseDecomposition,
    PfiBiasDecomposition,
};
pub use dgp::{sample_dgp, DGPSpec, DgpKind};
pub use identity::{conditional_pfi, conditional_pfi_gap_moments, DiscreteJoint};
pub use oracle::{dgp_pd, dgp_pd_closed, dgp_pd_mc, dgp_pfi, dgp_pfi_closed, dgp_pfi_mc, OracleValue};
pub use presets::{preset, preset_reports_both_variants, PresetScale, DEFAULT_PRESET_SEED, PRESET_NAMES};
