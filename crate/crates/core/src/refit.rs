//! Fitting one model per resampling split.

use rayon::prelude::*;

use crate::data::{Dataset, IndexView};
use crate::error::{Error, Result};
use crate::learners::{Learner, Model};
use crate::resampling::ResamplePlan;
use crate::seed::{self, stream};

/// Seed passed to the learner for split `d`.
pub fn split_seed(seed: u64, d: usize) -> u64 {
    seed::derive(seed, &[stream::FIT, d as u64])
}

pub(crate) fn check_plan(data: &Dataset, plan: &ResamplePlan) -> Result<()> {
    if plan.m() < 2 {
        return Err(Error::TooFewSplits(plan.m()));
    }
    if plan.n != data.n() {
        return Err(Error::PlanMismatch(format!(
            "plan indexes {} rows, dataset has {}",
            plan.n,
            data.n()
        )));
    }
    Ok(())
}

pub(crate) fn split_views<'a>(
    data: &'a Dataset,
    plan: &'a ResamplePlan,
    d: usize,
) -> Result<(IndexView<'a>, IndexView<'a>)> {
    let s = &plan.splits[d];
    Ok((data.view(&s.train[..])?, data.view(&s.test[..])?))
}

/// Fit `learner` on the training rows of every split. Errors carry the
/// split index.
pub fn fit_refits<L: Learner + ?Sized>(
    learner: &L,
    data: &Dataset,
    plan: &ResamplePlan,
    seed: u64,
) -> Result<Vec<Box<dyn Model>>> {
    check_plan(data, plan)?;
    (0..plan.m())
        .into_par_iter()
        .map(|d| {
            let (train, _) = split_views(data, plan, d)?;
            learner
                .fit(&train, split_seed(seed, d))
                .map_err(|e| e.at_split(d))
        })
        .collect()
}

pub(crate) fn check_models(models: &[Box<dyn Model>], plan: &ResamplePlan) -> Result<()> {
    if models.len() != plan.m() {
        return Err(Error::PlanMismatch(format!(
            "{} models for {} splits",
            models.len(),
            plan.m()
        )));
    }
    Ok(())
}
