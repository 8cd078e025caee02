use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{check_alpha, corrected_mean_ci, IntervalEstimate};
use crate::learners::{loss_l2, Learner, Model};
use crate::refit::{check_models, fit_refits, split_views};
use crate::resampling::{correction_constant, ResamplePlan};

/// Squared test losses of each refit on its own test rows.
pub fn per_split_test_losses(
    models: &[Box<dyn Model>],
    data: &Dataset,
    plan: &ResamplePlan,
) -> Result<Vec<Vec<f64>>> {
    check_models(models, plan)?;
    (0..plan.m())
        .into_par_iter()
        .map(|d| {
            let (_, test) = split_views(data, plan, d)?;
            loss_l2(&test.targets(), &models[d].predict(&test.features()))
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Corrected interval for `MSE_A - MSE_B`, from per-split instance losses
/// of two learners evaluated on the same plan.
pub fn compare_learners(
    losses_a: &[Vec<f64>],
    losses_b: &[Vec<f64>],
    c: f64,
    alpha: f64,
) -> Result<IntervalEstimate> {
    if losses_a.len() != losses_b.len() {
        return Err(Error::PlanMismatch(format!(
            "{} splits vs {}",
            losses_a.len(),
            losses_b.len()
        )));
    }
    if losses_a.len() < 2 {
        return Err(Error::TooFewSplits(losses_a.len()));
    }
    let diffs = losses_a
        .iter()
        .zip(losses_b)
        .enumerate()
        .map(|(d, (a, b))| {
            if a.len() != b.len() || a.is_empty() {
                return Err(Error::PlanMismatch(format!(
                    "split {d} has {} vs {} test losses",
                    a.len(),
                    b.len()
                )));
            }
            Ok(mean(a) - mean(b))
        })
        .collect::<Result<Vec<_>>>()?;
    corrected_mean_ci(&diffs, c, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerComparison {
    pub learner_a: String,
    pub learner_b: String,
    /// Per-split test MSEs.
    pub mse_a: Vec<f64>,
    pub mse_b: Vec<f64>,
    /// Interval for `MSE_A - MSE_B`.
    pub difference: IntervalEstimate,
    pub c: f64,
}

impl LearnerComparison {
    pub fn mean_mse_a(&self) -> f64 {
        mean(&self.mse_a)
    }

    pub fn mean_mse_b(&self) -> f64 {
        mean(&self.mse_b)
    }
}

/// Fit both learners on every split of `plan` (same fit seeds) and compare
/// their test losses.
pub fn compare_on_plan<A: Learner + ?Sized, B: Learner + ?Sized>(
    a: &A,
    b: &B,
    data: &Dataset,
    plan: &ResamplePlan,
    alpha: f64,
    seed: u64,
) -> Result<LearnerComparison> {
    check_alpha(alpha)?;
    let models_a = fit_refits(a, data, plan, seed)?;
    let losses_a = per_split_test_losses(&models_a, data, plan)?;
    drop(models_a);
    let models_b = fit_refits(b, data, plan, seed)?;
    let losses_b = per_split_test_losses(&models_b, data, plan)?;
    let c = correction_constant(plan);
    Ok(LearnerComparison {
        learner_a: a.name(),
        learner_b: b.name(),
        mse_a: losses_a.iter().map(|l| mean(l)).collect(),
        mse_b: losses_b.iter().map(|l| mean(l)).collect(),
        difference: compare_learners(&losses_a, &losses_b, c, alpha)?,
        c,
    })
}
