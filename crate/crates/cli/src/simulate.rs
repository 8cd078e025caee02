use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use pdpfi::sim::{
    coverage_csv, preset, preset_reports_both_variants, refit_sweep, run_configs, sweep_csv, CoverageConfig,
    CoverageReport, PresetScale, SweepPoint, DEFAULT_PRESET_SEED, PRESET_NAMES,
};

use crate::common::{invalid, resolve_seed, to_json, CliResult, Outputs, Software, SOFTWARE};

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// JSON file holding one coverage config or an array of them.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: ideal-lm-linear, ideal or tables12.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the number of repetitions.
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Override the number of reference runs.
    #[arg(long)]
    pub reference_runs: Option<usize>,
    /// Override the number of trees of random forests.
    #[arg(long)]
    pub rf_trees: Option<usize>,
    /// Report uncorrected and corrected intervals (always on for tables12).
    #[arg(long)]
    pub both_variants: bool,
    /// Override the seed of every config (`PDPFI_SEED` takes precedence).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep the number of refits instead, e.g. `2,5,10,15,30`. Needs a
    /// single config.
    #[arg(long, value_delimiter = ',')]
    pub m_values: Vec<usize>,
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    software: Software,
    command: &'static str,
    request: &'a SimulateArgs,
    seed_source: &'static str,
    both_variants: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reports: Option<&'a [CoverageReport]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepMeta<'a>>,
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    config: &'a CoverageConfig,
    points: &'a [SweepPoint],
}

fn load_configs(path: &PathBuf) -> CliResult<Vec<CoverageConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        single => vec![single],
    };
    if items.is_empty() {
        return Err(invalid(format!("{} holds no configs", path.display())));
    }
    items
        .iter()
        .map(|v| CoverageConfig::from_json(&v.to_string()).map_err(Into::into))
        .collect()
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let (seed, seed_source) = match (std::env::var_os("PDPFI_SEED").is_some(), args.seed) {
        (true, _) => (Some(resolve_seed(0)?.seed), "PDPFI_SEED"),
        (false, Some(s)) => (Some(s), "--seed"),
        (false, None) => (None, if args.preset.is_some() { "preset" } else { "config" }),
    };
    let mut configs = match (&args.config, &args.preset) {
        (Some(path), _) => load_configs(path)?,
        (None, Some(name)) => {
            if !PRESET_NAMES.contains(&name.as_str()) {
                return Err(invalid(format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", "))));
            }
            preset(name, DEFAULT_PRESET_SEED)?
        }
        (None, None) => return Err(invalid("one of --config or --preset is required")),
    };
    PresetScale { repetitions: args.repetitions, reference_runs: args.reference_runs, rf_trees: args.rf_trees }
        .apply(&mut configs);
    if let Some(s) = seed {
        for c in &mut configs {
            c.seed = s;
        }
    }
    for c in &configs {
        c.validate()?;
    }
    let both = args.both_variants || args.preset.as_deref().is_some_and(preset_reports_both_variants);

    let mut out = Outputs::default();
    let mut meta = SimulateMeta {
        software: SOFTWARE,
        command: "simulate",
        request: args,
        seed_source,
        both_variants: both,
        reports: None,
        sweep: None,
    };
    if !args.m_values.is_empty() {
        let [config] = configs.as_slice() else {
            return Err(invalid(format!("--m-values needs exactly one config, got {}", configs.len())));
        };
        let points = refit_sweep(config, &args.m_values)?;
        out.add("sweep.csv", sweep_csv(&points));
        meta.sweep = Some(SweepMeta { config, points: &points });
        out.add("coverage_meta.json", to_json(&meta));
        out.write(&args.out)?;
        print!("{}", sweep_csv(&points));
        return Ok(());
    }

    let reports = run_configs(&configs, both)?;
    let csv = coverage_csv(&reports);
    out.add("coverage.csv", csv.clone());
    meta.reports = Some(&reports);
    out.add("coverage_meta.json", to_json(&meta));
    out.write(&args.out)?;
    print!("{csv}");
    for r in &reports {
        if r.invalid {
            eprintln!(
                "warning: {} {} n={} {} has {} failed repetitions and is flagged invalid",
                r.config.dgp,
                r.config.learner.short_name(),
                r.config.n,
                r.config.resampling.as_str(),
                r.failures.len()
            );
        }
    }
    Ok(())
}
