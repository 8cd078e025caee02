use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use pdpfi::learners::LearnerSpec;
use pdpfi::pfi::{compare_on_plan, LearnerComparison};

use crate::analyze::DataArgs;
use crate::common::{to_json, CliResult, Outputs, Software, SOFTWARE};

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: DataArgs,
    #[arg(long)]
    pub learner_a: String,
    #[arg(long)]
    pub learner_b: String,
    /// Also write compare.json into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the result as text or as JSON.
    #[arg(long, value_enum, default_value_t = Print::Text)]
    pub format: Print,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Print {
    Text,
    Json,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    software: Software,
    command: &'static str,
    request: &'a CompareArgs,
    seed: u64,
    seed_source: &'static str,
    plan_seed: u64,
    fit_seed: u64,
    mean_mse_a: f64,
    mean_mse_b: f64,
    comparison: &'a LearnerComparison,
}

pub fn run(args: &CompareArgs) -> CliResult<()> {
    let a: LearnerSpec = args.learner_a.parse()?;
    let b: LearnerSpec = args.learner_b.parse()?;
    let prep = args.common.prepare()?;
    let cmp = compare_on_plan(&a, &b, &prep.data, &prep.plan, args.common.alpha, prep.fit_seed)?;
    let report = CompareReport {
        software: SOFTWARE,
        command: "compare",
        request: args,
        seed: prep.seed.seed,
        seed_source: prep.seed.source,
        plan_seed: prep.plan_seed,
        fit_seed: prep.fit_seed,
        mean_mse_a: cmp.mean_mse_a(),
        mean_mse_b: cmp.mean_mse_b(),
        comparison: &cmp,
    };
    let json = to_json(&report);
    if let Some(dir) = &args.out {
        let mut out = Outputs::default();
        out.add("compare.json", json.clone());
        out.write(dir)?;
    }
    match args.format {
        Print::Json => print!("{json}"),
        Print::Text => {
            let d = &cmp.difference;
            let level = 100.0 * (1.0 - args.common.alpha);
            println!("A: {:<40} mean MSE {:.6}", cmp.learner_a, cmp.mean_mse_a());
            println!("B: {:<40} mean MSE {:.6}", cmp.learner_b, cmp.mean_mse_b());
            println!("A - B: {:.6}  {level}% CI [{:.6}, {:.6}]  (c = {:.4}, df = {})", d.mean, d.lower, d.upper, cmp.c, d.df);
        }
    }
    Ok(())
}
