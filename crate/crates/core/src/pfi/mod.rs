//! Permutation feature importance.
//!
//! The importance of a feature is the increase in loss when its values are
//! replaced by draws that break the association with the target. As with
//! partial dependence there is a model-level estimator ([`model_pfi`]) whose
//! interval reflects only the Monte Carlo error over test rows, and a
//! learner-level estimator ([`learner_pfi`]) built from refits.

mod compare;
mod sampler;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{fmt_f64, Dataset, IndexView};
use crate::error::{Error, Result};
use crate::inference::{check_alpha, corrected_mean_ci, IntervalEstimate};
use crate::learners::{Learner, Model, PointLoss, SquaredLoss};
use crate::pd::EstimateKind;
use crate::refit::{check_models, check_plan, fit_refits, split_views};
use crate::resampling::{correction_constant, ResampleMode, ResamplePlan};
use crate::seed::{self, stream};

pub use compare::{compare_learners, compare_on_plan, per_split_test_losses, LearnerComparison};
pub use sampler::{
    sample_replacements, ReplacementSampler, SamplerKind, DEFAULT_BINS, DEFAULT_CONDITIONAL_REPETITIONS,
    DEFAULT_MARGINAL_REPETITIONS, MAX_EXHAUSTIVE_ROWS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfiMeta {
    /// Test rows (model kind) or refits (learner kind).
    pub samples: usize,
    pub c: f64,
    pub fit_seed: Option<u64>,
    pub mode: Option<ResampleMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFIEstimate {
    pub feature: usize,
    pub estimate: IntervalEstimate,
    pub kind: EstimateKind,
    pub sampler: ReplacementSampler,
    pub meta: PfiMeta,
}

/// Per-row importance `L_i`: the average loss over the replacement columns
/// minus the loss on the original row.
pub fn pfi_row_values(
    model: &dyn Model,
    test: &IndexView<'_>,
    feature: usize,
    sampler: &ReplacementSampler,
    loss: &dyn PointLoss,
) -> Result<Vec<f64>> {
    let replacements = sample_replacements(test, feature, sampler, Some(model))?;
    let x = test.features();
    let y = test.targets();
    let base: Vec<f64> = y.iter().zip(model.predict(&x)).map(|(&yi, p)| loss.loss(yi, p)).collect();
    let per_rep: Vec<Vec<f64>> = replacements
        .par_iter()
        .map(|col| {
            let mut xk = x.clone();
            xk.set_column(feature, col);
            let preds = model.predict(&xk);
            // Differences first so that an unchanged prediction contributes exactly 0.
            (0..y.len()).map(|i| loss.loss(y[i], preds[i]) - base[i]).collect()
        })
        .collect();
    let l = per_rep.len() as f64;
    Ok((0..y.len()).map(|i| per_rep.iter().map(|r| r[i]).sum::<f64>() / l).collect())
}

/// Model-PFI under squared loss.
pub fn model_pfi(
    model: &dyn Model,
    test: &IndexView<'_>,
    feature: usize,
    sampler: &ReplacementSampler,
    alpha: f64,
) -> Result<PFIEstimate> {
    model_pfi_with_loss(model, test, feature, sampler, alpha, &SquaredLoss)
}

/// Model-PFI: mean of the per-row values with variance
/// `sum (L_i - mean)^2 / (n2 (n2 - 1))` and a t-interval on `n2 - 1` df.
pub fn model_pfi_with_loss(
    model: &dyn Model,
    test: &IndexView<'_>,
    feature: usize,
    sampler: &ReplacementSampler,
    alpha: f64,
    loss: &dyn PointLoss,
) -> Result<PFIEstimate> {
    check_alpha(alpha)?;
    if test.len() < 2 {
        return Err(Error::TooFewRows { got: test.len(), need: 2 });
    }
    let values = pfi_row_values(model, test, feature, sampler, loss)?;
    Ok(PFIEstimate {
        feature,
        estimate: corrected_mean_ci(&values, 0.0, alpha)?,
        kind: EstimateKind::Model,
        sampler: *sampler,
        meta: PfiMeta { samples: test.len(), c: 0.0, fit_seed: None, mode: None },
    })
}

/// Sampler used on split `d`.
pub fn split_sampler(sampler: &ReplacementSampler, d: usize) -> ReplacementSampler {
    sampler.with_seed(seed::derive(sampler.seed, &[stream::SAMPLER, d as u64]))
}

/// Model-PFI point estimate of each refit on its own test rows.
pub fn per_split_pfi(
    models: &[Box<dyn Model>],
    data: &Dataset,
    plan: &ResamplePlan,
    feature: usize,
    sampler: &ReplacementSampler,
) -> Result<Vec<f64>> {
    check_models(models, plan)?;
    data.check_feature(feature)?;
    (0..plan.m())
        .into_par_iter()
        .map(|d| {
            let (_, test) = split_views(data, plan, d)?;
            let v = pfi_row_values(&*models[d], &test, feature, &split_sampler(sampler, d), &SquaredLoss)?;
            Ok(v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}

/// Learner-PFI from already fitted refits.
pub fn learner_pfi_from_models(
    models: &[Box<dyn Model>],
    data: &Dataset,
    plan: &ResamplePlan,
    feature: usize,
    sampler: &ReplacementSampler,
    alpha: f64,
    fit_seed: Option<u64>,
) -> Result<PFIEstimate> {
    check_alpha(alpha)?;
    check_plan(data, plan)?;
    let values = per_split_pfi(models, data, plan, feature, sampler)?;
    let c = correction_constant(plan);
    Ok(PFIEstimate {
        feature,
        estimate: corrected_mean_ci(&values, c, alpha)?,
        kind: EstimateKind::Learner,
        sampler: *sampler,
        meta: PfiMeta { samples: plan.m(), c, fit_seed, mode: Some(plan.mode) },
    })
}

/// Refit `learner` on every split of `plan`, compute each refit's model-PFI
/// on its test rows, and combine the values with the corrected variance.
pub fn learner_pfi<L: Learner + ?Sized>(
    learner: &L,
    data: &Dataset,
    plan: &ResamplePlan,
    feature: usize,
    sampler: &ReplacementSampler,
    alpha: f64,
    seed: u64,
) -> Result<PFIEstimate> {
    check_alpha(alpha)?;
    sampler.validate()?;
    data.check_feature(feature)?;
    let models = fit_refits(learner, data, plan, seed)?;
    learner_pfi_from_models(&models, data, plan, feature, sampler, alpha, Some(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPfi {
    pub rank: usize,
    pub estimate: PFIEstimate,
    /// Whether this interval overlaps the next-ranked one (`None` for the last).
    pub overlaps_next: Option<bool>,
}

/// Sort estimates by decreasing mean (ties by feature index) and flag
/// overlapping intervals between neighbours.
pub fn pfi_ranking(estimates: &[PFIEstimate]) -> Result<Vec<RankedPfi>> {
    if let Some(first) = estimates.first() {
        if estimates
            .iter()
            .any(|e| e.kind != first.kind || e.estimate.alpha != first.estimate.alpha)
        {
            return Err(Error::MixedKinds);
        }
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| {
        b.estimate
            .mean
            .total_cmp(&a.estimate.mean)
            .then(a.feature.cmp(&b.feature))
    });
    let flags: Vec<Option<bool>> = (0..sorted.len())
        .map(|k| sorted.get(k + 1).map(|next| sorted[k].estimate.overlaps(&next.estimate)))
        .collect();
    Ok(sorted
        .into_iter()
        .zip(flags)
        .enumerate()
        .map(|(k, (estimate, overlaps_next))| RankedPfi { rank: k + 1, estimate, overlaps_next })
        .collect())
}

/// Columns: feature, mean, variance, lower, upper, df, kind, sampler.
pub fn pfi_csv(estimates: &[PFIEstimate], feature_names: &[String]) -> String {
    let mut out = String::from("feature,mean,variance,lower,upper,df,kind,sampler\n");
    for e in estimates {
        push_row(&mut out, e, feature_names);
        out.push('\n');
    }
    out
}

/// [`pfi_csv`] columns followed by rank and the overlap flag.
pub fn ranking_csv(ranked: &[RankedPfi], feature_names: &[String]) -> String {
    let mut out = String::from("feature,mean,variance,lower,upper,df,kind,sampler,rank,overlaps_next\n");
    for r in ranked {
        push_row(&mut out, &r.estimate, feature_names);
        let flag = r.overlaps_next.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(out, ",{},{}", r.rank, flag);
    }
    out
}

fn push_row(out: &mut String, e: &PFIEstimate, names: &[String]) {
    let name = names.get(e.feature).cloned().unwrap_or_else(|| e.feature.to_string());
    let i = &e.estimate;
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{}",
        name,
        fmt_f64(i.mean),
        fmt_f64(i.variance),
        fmt_f64(i.lower),
        fmt_f64(i.upper),
        i.df,
        e.kind.as_str(),
        e.sampler.to_string().replace(',', ";"),
    );
}
