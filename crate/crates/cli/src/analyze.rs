use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use pdpfi::data::Dataset;
use pdpfi::learners::LearnerSpec;
use pdpfi::pd::{learner_pd_from_models, make_grid, GridKind, PDCurve, PDGrid};
use pdpfi::pfi::{learner_pfi_from_models, pfi_ranking, ranking_csv, RankedPfi, ReplacementSampler};
use pdpfi::refit::fit_refits;
use pdpfi::resampling::{bootstrap_plan, correction_constant, subsample_plan, ResampleMode, ResamplePlan};
use pdpfi::seed::{derive, stream};

use crate::common::{file_stem, invalid, resolve_seed, to_json, CliResult, Outputs, SeedChoice, Software, SOFTWARE};

/// Options shared by `analyze` and `compare`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// CSV file with a header row (`,` or `;` separated).
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the target column.
    #[arg(long)]
    pub target: String,
    /// `bootstrap` or `subsample`.
    #[arg(long, default_value = "bootstrap")]
    pub resampling: String,
    /// Number of refits.
    #[arg(long, default_value_t = 15)]
    pub m: usize,
    /// Intervals have level `1 - alpha`.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Training share for subsampling.
    #[arg(long, default_value_t = 0.632)]
    pub train_fraction: f64,
    /// Base seed; `PDPFI_SEED` takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub struct Prepared {
    pub data: Dataset,
    pub plan: ResamplePlan,
    pub seed: SeedChoice,
    pub plan_seed: u64,
    pub fit_seed: u64,
}

impl DataArgs {
    pub fn prepare(&self) -> CliResult<Prepared> {
        pdpfi::inference::check_alpha(self.alpha)?;
        if self.m < 2 {
            return Err(invalid(format!("--m must be >= 2, got {}", self.m)));
        }
        let mode: ResampleMode = self.resampling.parse()?;
        let seed = resolve_seed(self.seed)?;
        let data = Dataset::load_csv(&self.data, &self.target)?;
        let plan_seed = derive(seed.seed, &[stream::PLAN]);
        let plan = match mode {
            ResampleMode::Bootstrap => bootstrap_plan(data.n(), self.m, plan_seed)?,
            ResampleMode::Subsample => subsample_plan(data.n(), self.m, self.train_fraction, plan_seed)?,
            ResampleMode::Fresh => {
                return Err(invalid("fresh resampling needs a data generating process; use `simulate`"))
            }
        };
        Ok(Prepared { data, plan, seed, plan_seed, fit_seed: derive(seed.seed, &[stream::FIT]) })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: DataArgs,
    /// `lm`, `tree[:max_depth=..,min_leaf=..]` or `rf[:n_trees=..,...]`.
    #[arg(long, default_value = "rf")]
    pub learner: String,
    /// Comma-separated feature names (default: all).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Grid points per PD curve.
    #[arg(long, default_value_t = 20)]
    pub grid_size: usize,
    /// `equidistant` or `quantile`.
    #[arg(long, default_value = "equidistant")]
    pub grid_kind: String,
    /// `marginal[:l=5]`, `conditional[:bins=5,l=1]` or `exhaustive`.
    #[arg(long, default_value = "marginal:l=5")]
    pub sampler: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    mode: ResampleMode,
    n: usize,
    m: usize,
    c: f64,
    seed: u64,
    splits: &'a ResamplePlan,
}

#[derive(Serialize)]
struct Seeds {
    seed: u64,
    source: &'static str,
    plan: u64,
    fit: u64,
    sampler: u64,
}

#[derive(Serialize)]
struct AnalyzeMeta<'a> {
    software: Software,
    command: &'static str,
    request: &'a AnalyzeArgs,
    seeds: Seeds,
    learner: LearnerSpec,
    sampler: ReplacementSampler,
    rows: usize,
    features: Vec<&'a str>,
    plan: PlanSummary<'a>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct NamedCurve<'a> {
    feature: &'a str,
    curve: &'a PDCurve,
}

#[derive(Serialize)]
struct NamedPfi<'a> {
    feature: &'a str,
    #[serde(flatten)]
    ranked: &'a RankedPfi,
}

pub fn run(args: &AnalyzeArgs) -> CliResult<()> {
    let learner: LearnerSpec = args.learner.parse()?;
    let grid_kind: GridKind = args.grid_kind.parse()?;
    let sampler_spec: ReplacementSampler = args.sampler.parse()?;
    if args.grid_size == 0 {
        return Err(invalid("--grid-size must be >= 1"));
    }
    let prep = args.common.prepare()?;
    let data = &prep.data;
    let features: Vec<usize> = if args.features.is_empty() {
        (0..data.p()).collect()
    } else {
        args.features
            .iter()
            .map(|f| data.feature_index(f).ok_or_else(|| invalid(format!("feature `{f}` not found"))))
            .collect::<CliResult<_>>()?
    };
    let grids = features
        .iter()
        .map(|&j| match make_grid(data, j, args.grid_size, grid_kind) {
            // A constant column still gets its PFI; its PD is a single point.
            Err(pdpfi::Error::ConstantFeature(_)) => {
                eprintln!("note: `{}` is constant; its PD has one grid point", data.feature_names()[j]);
                PDGrid::new(j, vec![data.features().get(0, j)])
            }
            other => other,
        })
        .collect::<pdpfi::Result<Vec<_>>>()?;
    let sampler_seed = derive(prep.seed.seed, &[stream::SAMPLER]);
    let sampler = sampler_spec.with_seed(sampler_seed);

    let models = fit_refits(&learner, data, &prep.plan, prep.fit_seed)?;
    let names = data.feature_names();
    let mut out = Outputs::default();
    for (grid, &j) in grids.iter().zip(&features) {
        let curve = learner_pd_from_models(&models, data, &prep.plan, grid, args.common.alpha, Some(prep.fit_seed))?;
        let name = &names[j];
        match args.format {
            Format::Csv => out.add(format!("pd_{}.csv", file_stem(name)), curve.to_csv(name)),
            Format::Json => out.add(format!("pd_{}.json", file_stem(name)), to_json(&NamedCurve { feature: name, curve: &curve })),
        }
    }
    let estimates = features
        .iter()
        .map(|&j| learner_pfi_from_models(&models, data, &prep.plan, j, &sampler, args.common.alpha, Some(prep.fit_seed)))
        .collect::<pdpfi::Result<Vec<_>>>()?;
    let ranked = pfi_ranking(&estimates)?;
    match args.format {
        Format::Csv => out.add("pfi.csv", ranking_csv(&ranked, names)),
        Format::Json => {
            let rows: Vec<NamedPfi> = ranked.iter().map(|r| NamedPfi { feature: &names[r.estimate.feature], ranked: r }).collect();
            out.add("pfi.json", to_json(&rows));
        }
    }

    let mut outputs = out.names();
    outputs.push("run_meta.json".into());
    let meta = AnalyzeMeta {
        software: SOFTWARE,
        command: "analyze",
        request: args,
        seeds: Seeds {
            seed: prep.seed.seed,
            source: prep.seed.source,
            plan: prep.plan_seed,
            fit: prep.fit_seed,
            sampler: sampler_seed,
        },
        learner,
        sampler,
        rows: data.n(),
        features: features.iter().map(|&j| names[j].as_str()).collect(),
        plan: PlanSummary {
            mode: prep.plan.mode,
            n: prep.plan.n,
            m: prep.plan.m(),
            c: correction_constant(&prep.plan),
            seed: prep.plan.seed,
            splits: &prep.plan,
        },
        outputs,
    };
    out.add("run_meta.json", to_json(&meta));
    out.write(&args.out)?;

    for r in &ranked {
        let e = &r.estimate.estimate;
        println!(
            "{:>3}  {:<24} pfi {:>10.5}  [{:.5}, {:.5}]",
            r.rank,
            names[r.estimate.feature],
            e.mean,
            e.lower,
            e.upper
        );
    }
    eprintln!("wrote {} files to {}", features.len() + 2, args.out.display());
    Ok(())
}
