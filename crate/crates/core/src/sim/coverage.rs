//! Coverage of learner-PD and learner-PFI intervals in repeated simulations.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{sample_dgp, DGPSpec};
use super::oracle::OracleValue;
use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::inference::{check_alpha, corrected_mean_ci, sample_variance};
use crate::learners::{Learner, LearnerSpec, SquaredLoss};
use crate::pd::{model_pd_means, per_split_pd, PDGrid, SIMULATION_GRID};
use crate::pfi::{per_split_pfi, pfi_row_values, ReplacementSampler, DEFAULT_MARGINAL_REPETITIONS};
use crate::refit::fit_refits;
use crate::resampling::{
    bootstrap_plan, correction_constant, fresh_plan, subsample_plan, train_size, ResampleMode, ResamplePlan,
    DEFAULT_SPLITS, DEFAULT_TRAIN_FRACTION, MAX_SPLITS,
};
use crate::seed::{self, stream};

pub const DEFAULT_REPETITIONS: usize = 1000;
pub const DEFAULT_REFERENCE_RUNS: usize = 2000;
pub const MIN_REFERENCE_RUNS: usize = 100;
/// Share of failed repetitions above which a cell is flagged invalid.
pub const MAX_FAILURE_RATE: f64 = 0.01;

fn default_m() -> usize {
    DEFAULT_SPLITS
}
fn default_alpha() -> f64 {
    0.05
}
fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}
fn default_reference_runs() -> usize {
    DEFAULT_REFERENCE_RUNS
}
fn default_grid() -> Vec<f64> {
    SIMULATION_GRID.to_vec()
}
fn default_sampler() -> ReplacementSampler {
    ReplacementSampler::marginal(DEFAULT_MARGINAL_REPETITIONS, 0)
}
fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

/// One simulation scenario. Deserializes from JSON; see the guide for the
/// schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    /// `linear` or `nonlinear`.
    pub dgp: String,
    pub learner: LearnerSpec,
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub resampling: ResampleMode,
    #[serde(default)]
    pub corrected: bool,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_reference_runs")]
    pub reference_runs: usize,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sampler")]
    pub sampler: ReplacementSampler,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

impl CoverageConfig {
    pub fn new(dgp: &str, learner: LearnerSpec, n: usize, resampling: ResampleMode) -> Self {
        Self {
            dgp: dgp.to_string(),
            learner,
            n,
            m: default_m(),
            resampling,
            corrected: false,
            alpha: default_alpha(),
            repetitions: default_repetitions(),
            reference_runs: default_reference_runs(),
            grid: default_grid(),
            seed: 0,
            sampler: default_sampler(),
            train_fraction: default_train_fraction(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn dgp_spec(&self) -> Result<DGPSpec> {
        DGPSpec::by_name(&self.dgp)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.dgp_spec()?;
        self.learner.validate()?;
        if !(2..=MAX_SPLITS).contains(&self.m) {
            return bad(format!("m = {} must be in 2..={MAX_SPLITS}", self.m));
        }
        check_alpha(self.alpha)?;
        if self.repetitions == 0 {
            return bad("repetitions must be >= 1".into());
        }
        if self.reference_runs < MIN_REFERENCE_RUNS {
            return bad(format!("reference_runs must be >= {MIN_REFERENCE_RUNS}"));
        }
        PDGrid::new(0, self.grid.clone())?;
        self.sampler.validate()?;
        let k = train_size(self.n, self.train_fraction)?;
        if self.n - k < 2 {
            return bad(format!("n = {} leaves fewer than 2 test rows", self.n));
        }
        Ok(())
    }
}

/// Expected model-PD and model-PFI over the distribution of fitted models,
/// estimated from independent fresh-data fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValues {
    pub runs: usize,
    pub grid: Vec<f64>,
    /// `pd[feature][grid point]`
    pub pd: Vec<Vec<OracleValue>>,
    pub pfi: Vec<OracleValue>,
}

impl ReferenceValues {
    /// PD references flattened feature-major, followed by nothing else.
    pub fn pd_targets(&self) -> Vec<f64> {
        self.pd.iter().flatten().map(|v| v.value).collect()
    }

    pub fn pfi_targets(&self) -> Vec<f64> {
        self.pfi.iter().map(|v| v.value).collect()
    }
}

/// Model-PD (`pd[feature][grid point]`) and model-PFI (`pfi[feature]`) of
/// one fitted model.
#[derive(Debug, Clone)]
pub(crate) struct FitValues {
    pub pd: Vec<Vec<f64>>,
    pub pfi: Vec<f64>,
}

fn oracle(samples: &[f64]) -> OracleValue {
    OracleValue {
        value: samples.iter().sum::<f64>() / samples.len() as f64,
        std_error: (sample_variance(samples) / samples.len() as f64).sqrt(),
    }
}

/// Model-PD and model-PFI of `runs` models, each fitted on a fresh sample of
/// `n` rows (train fraction from the config) and evaluated on the rest.
pub(crate) fn fresh_fit_values<L: Learner + ?Sized>(
    spec: &DGPSpec,
    learner: &L,
    config: &CoverageConfig,
    runs: usize,
    stream_tag: u64,
) -> Result<Vec<FitValues>> {
    let n = config.n;
    let k = train_size(n, config.train_fraction)?;
    let grids = (0..spec.p())
        .map(|j| PDGrid::new(j, config.grid.clone()))
        .collect::<Result<Vec<_>>>()?;
    let one = |s: u64| -> Result<FitValues> {
        let data = sample_dgp(spec, n, seed::mix(s, 0))?;
        let train = data.view((0..k).collect::<Vec<_>>())?;
        let test = data.view((k..n).collect::<Vec<_>>())?;
        let model = learner.fit(&train, seed::mix(s, 1))?;
        let pd = grids.iter().map(|g| model_pd_means(&model, &test, g)).collect();
        let pfi = (0..spec.p())
            .map(|j| {
                let sampler = config.sampler.with_seed(seed::derive(s, &[stream::SAMPLER, j as u64]));
                let v = pfi_row_values(&*model, &test, j, &sampler, &SquaredLoss)?;
                Ok(v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FitValues { pd, pfi })
    };
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let s = seed::derive(config.seed, &[stream_tag, r as u64]);
            one(s).or_else(|_| one(seed::derive(s, &[stream::RETRY])))
        })
        .collect()
}

/// Average model-PD/PFI over `reference_runs` fresh fits.
pub fn reference_expectations(config: &CoverageConfig) -> Result<ReferenceValues> {
    config.validate()?;
    let spec = config.dgp_spec()?;
    let fits = fresh_fit_values(&spec, &config.learner, config, config.reference_runs, stream::REFERENCE)?;
    let pd = (0..spec.p())
        .map(|j| {
            (0..config.grid.len())
                .map(|g| oracle(&fits.iter().map(|f| f.pd[j][g]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let pfi = (0..spec.p())
        .map(|j| oracle(&fits.iter().map(|f| f.pfi[j]).collect::<Vec<_>>()))
        .collect();
    Ok(ReferenceValues { runs: config.reference_runs, grid: config.grid.clone(), pd, pfi })
}

/// Per-split values of one repetition: `pd[target][split]` with targets
/// ordered feature-major over the grid, `pfi[feature][split]`.
#[derive(Debug, Clone)]
struct RepValues {
    pd: Vec<Vec<f64>>,
    pfi: Vec<Vec<f64>>,
    c: f64,
}

fn repetition_data(spec: &DGPSpec, config: &CoverageConfig, base: u64, rep: u64) -> Result<(Dataset, ResamplePlan)> {
    let n = config.n;
    Ok(match config.resampling {
        ResampleMode::Fresh => {
            let parts = (0..config.m)
                .map(|d| sample_dgp(spec, n, seed::derive(base, &[stream::DATA, rep, d as u64])))
                .collect::<Result<Vec<_>>>()?;
            (Dataset::concat(&parts)?, fresh_plan(n, config.m, config.train_fraction)?)
        }
        ResampleMode::Bootstrap => (
            sample_dgp(spec, n, seed::derive(base, &[stream::DATA, rep]))?,
            bootstrap_plan(n, config.m, seed::derive(base, &[stream::PLAN, rep]))?,
        ),
        ResampleMode::Subsample => (
            sample_dgp(spec, n, seed::derive(base, &[stream::DATA, rep]))?,
            subsample_plan(n, config.m, config.train_fraction, seed::derive(base, &[stream::PLAN, rep]))?,
        ),
    })
}

fn run_repetition(spec: &DGPSpec, config: &CoverageConfig, rep: u64, base: u64) -> Result<RepValues> {
    let (data, plan) = repetition_data(spec, config, base, rep)?;
    let models = fit_refits(&config.learner, &data, &plan, seed::derive(base, &[stream::FIT, rep]))?;
    let mut pd = Vec::with_capacity(spec.p() * config.grid.len());
    let mut pfi = Vec::with_capacity(spec.p());
    for j in 0..spec.p() {
        let grid = PDGrid::new(j, config.grid.clone())?;
        let values = per_split_pd(&models, &data, &plan, &grid)?;
        for g in 0..grid.len() {
            pd.push(values.iter().map(|v| v[g]).collect());
        }
        let sampler = config.sampler.with_seed(seed::derive(base, &[stream::SAMPLER, rep, j as u64]));
        pfi.push(per_split_pfi(&models, &data, &plan, j, &sampler)?);
    }
    Ok(RepValues { pd, pfi, c: correction_constant(&plan) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Pd,
    Pfi,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Pd => "pd",
            Target::Pfi => "pfi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetCoverage {
    pub feature: usize,
    /// Grid point for PD targets.
    pub grid_x: Option<f64>,
    pub reference: f64,
    pub coverage: f64,
    pub mean_width: f64,
}

/// Coverage of one (scenario, variant, target) combination, averaged over
/// features (and grid points for PD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub dgp: String,
    pub model: String,
    pub n: usize,
    pub mode: ResampleMode,
    pub corrected: bool,
    pub target: Target,
    pub coverage: f64,
    /// Standard error of `coverage` across repetitions.
    pub coverage_se: f64,
    pub mean_width: f64,
    pub per_target: Vec<TargetCoverage>,
    pub repetitions: usize,
    pub failures: usize,
    pub invalid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFailure {
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    pub reference: ReferenceValues,
    pub cells: Vec<CoverageCell>,
    /// Repetitions that succeeded only on the redraw.
    pub retried: usize,
    pub failures: Vec<RepetitionFailure>,
    pub invalid: bool,
}

pub const COVERAGE_CSV_HEADER: &str = "dgp,model,n,mode,corrected,target,coverage,mean_width";

impl CoverageReport {
    pub fn cell(&self, target: Target, corrected: bool) -> Option<&CoverageCell> {
        self.cells.iter().find(|c| c.target == target && c.corrected == corrected)
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.dgp,
                c.model,
                c.n,
                c.mode.as_str(),
                c.corrected,
                c.target.as_str(),
                fmt_f64(c.coverage),
                fmt_f64(c.mean_width)
            );
        }
        out
    }
}

/// One CSV table for several reports.
pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = format!("{COVERAGE_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_rows());
    }
    out
}

fn summarize(
    config: &CoverageConfig,
    target: Target,
    corrected: bool,
    reps: &[RepValues],
    references: &[f64],
    labels: &[(usize, Option<f64>)],
    failures: usize,
) -> Result<CoverageCell> {
    let t_count = references.len();
    let mut hits = vec![0usize; t_count];
    let mut widths = vec![0.0; t_count];
    let mut per_rep = Vec::with_capacity(reps.len());
    for r in reps {
        let values = match target {
            Target::Pd => &r.pd,
            Target::Pfi => &r.pfi,
        };
        let c = if corrected { r.c } else { 0.0 };
        let mut rep_hits = 0usize;
        for t in 0..t_count {
            let ci = corrected_mean_ci(&values[t], c, config.alpha)?;
            if ci.contains(references[t]) {
                hits[t] += 1;
                rep_hits += 1;
            }
            widths[t] += ci.width();
        }
        per_rep.push(rep_hits as f64 / t_count as f64);
    }
    let n_reps = reps.len();
    let per_target: Vec<TargetCoverage> = (0..t_count)
        .map(|t| TargetCoverage {
            feature: labels[t].0,
            grid_x: labels[t].1,
            reference: references[t],
            coverage: hits[t] as f64 / n_reps as f64,
            mean_width: widths[t] / n_reps as f64,
        })
        .collect();
    let coverage = per_target.iter().map(|t| t.coverage).sum::<f64>() / t_count as f64;
    let mean_width = per_target.iter().map(|t| t.mean_width).sum::<f64>() / t_count as f64;
    let coverage_se = if n_reps > 1 { (sample_variance(&per_rep) / n_reps as f64).sqrt() } else { f64::NAN };
    let attempted = n_reps + failures;
    Ok(CoverageCell {
        dgp: config.dgp.clone(),
        model: config.learner.short_name().to_string(),
        n: config.n,
        mode: config.resampling,
        corrected,
        target,
        coverage,
        coverage_se,
        mean_width,
        per_target,
        repetitions: n_reps,
        failures,
        invalid: failures as f64 > MAX_FAILURE_RATE * attempted as f64,
    })
}

/// Run the repetitions of `config` against a precomputed reference and
/// report the requested variants (`false` = uncorrected, `true` = corrected).
pub fn coverage_with_reference(
    config: &CoverageConfig,
    reference: &ReferenceValues,
    variants: &[bool],
) -> Result<CoverageReport> {
    config.validate()?;
    let spec = config.dgp_spec()?;
    if reference.grid != config.grid || reference.pd.len() != spec.p() {
        return Err(Error::InvalidConfig("reference does not match the config grid or DGP".into()));
    }
    let outcomes: Vec<(Result<RepValues>, bool)> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let rep = rep as u64;
            match run_repetition(&spec, config, rep, config.seed) {
                Ok(v) => (Ok(v), false),
                Err(_) => {
                    let retry = seed::derive(config.seed, &[stream::RETRY, rep]);
                    (run_repetition(&spec, config, rep, retry), true)
                }
            }
        })
        .collect();
    let mut reps = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    let mut retried = 0;
    for (rep, (outcome, was_retried)) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => {
                retried += usize::from(was_retried);
                reps.push(v);
            }
            Err(e) => failures.push(RepetitionFailure { repetition: rep, error: e.to_string() }),
        }
    }
    if reps.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "all {} repetitions failed; first error: {}",
            config.repetitions, failures[0].error
        )));
    }
    let pd_labels: Vec<(usize, Option<f64>)> = (0..spec.p())
        .flat_map(|j| config.grid.iter().map(move |&x| (j, Some(x))))
        .collect();
    let pfi_labels: Vec<(usize, Option<f64>)> = (0..spec.p()).map(|j| (j, None)).collect();
    let mut cells = Vec::new();
    for &corrected in variants {
        cells.push(summarize(config, Target::Pd, corrected, &reps, &reference.pd_targets(), &pd_labels, failures.len())?);
        cells.push(summarize(
            config,
            Target::Pfi,
            corrected,
            &reps,
            &reference.pfi_targets(),
            &pfi_labels,
            failures.len(),
        )?);
    }
    let invalid = cells.iter().any(|c| c.invalid);
    Ok(CoverageReport { config: config.clone(), reference: reference.clone(), cells, retried, failures, invalid })
}

/// Coverage of the intervals selected by `config.corrected`.
pub fn coverage_experiment(config: &CoverageConfig) -> Result<CoverageReport> {
    let reference = reference_expectations(config)?;
    coverage_with_reference(config, &reference, &[config.corrected])
}

/// Configs that can share one reference computation.
pub fn reference_key(config: &CoverageConfig) -> String {
    serde_json::json!({
        "dgp": config.dgp,
        "learner": config.learner,
        "n": config.n,
        "grid": config.grid,
        "sampler": config.sampler,
        "reference_runs": config.reference_runs,
        "train_fraction": config.train_fraction,
        "seed": config.seed,
    })
    .to_string()
}

/// Run several configs, computing each distinct reference once. With
/// `both_variants` every report holds uncorrected and corrected cells.
pub fn run_configs(configs: &[CoverageConfig], both_variants: bool) -> Result<Vec<CoverageReport>> {
    let mut cache: Vec<(String, ReferenceValues)> = Vec::new();
    configs
        .iter()
        .map(|config| {
            config.validate()?;
            let key = reference_key(config);
            let reference = match cache.iter().find(|(k, _)| *k == key) {
                Some((_, r)) => r.clone(),
                None => {
                    let r = reference_expectations(config)?;
                    cache.push((key, r.clone()));
                    r
                }
            };
            let variants: &[bool] = if both_variants { &[false, true] } else { std::slice::from_ref(&config.corrected) };
            coverage_with_reference(config, &reference, variants)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m: usize,
    pub pd_coverage: f64,
    pub pd_width: f64,
    pub pfi_coverage: f64,
    pub pfi_width: f64,
}

/// Coverage and width as a function of the number of refits.
pub fn refit_sweep(config: &CoverageConfig, m_values: &[usize]) -> Result<Vec<SweepPoint>> {
    if let Some(&m) = m_values.iter().find(|&&m| m < 2) {
        return Err(Error::TooFewSplits(m));
    }
    let reference = reference_expectations(config)?;
    m_values
        .iter()
        .map(|&m| {
            let c = CoverageConfig { m, ..config.clone() };
            let report = coverage_with_reference(&c, &reference, &[config.corrected])?;
            let pd = report.cell(Target::Pd, config.corrected).expect("pd cell");
            let pfi = report.cell(Target::Pfi, config.corrected).expect("pfi cell");
            Ok(SweepPoint {
                m,
                pd_coverage: pd.coverage,
                pd_width: pd.mean_width,
                pfi_coverage: pfi.coverage,
                pfi_width: pfi.mean_width,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("m,pd_coverage,pd_width,pfi_coverage,pfi_width\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.m,
            fmt_f64(p.pd_coverage),
            fmt_f64(p.pd_width),
            fmt_f64(p.pfi_coverage),
            fmt_f64(p.pfi_width)
        );
    }
    out
}
