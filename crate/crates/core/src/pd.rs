//! Partial dependence for a single feature.
//!
//! [`model_pd`] treats the model as fixed: the band reflects only the Monte
//! Carlo error of averaging over the test rows. [`learner_pd`] refits the
//! learner on every split of a [`ResamplePlan`] and builds the band from the
//! spread of the per-model curves, inflated by the plan's correction
//! constant.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{fmt_f64, Dataset, IndexView};
use crate::error::{Error, Result};
use crate::inference::{check_alpha, corrected_mean_ci, IntervalEstimate};
use crate::learners::{Learner, Model};
use crate::refit::{check_models, check_plan, fit_refits, split_views};
use crate::resampling::{correction_constant, ResampleMode, ResamplePlan};

/// The grid used by the coverage simulations.
pub const SIMULATION_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const DEFAULT_GRID_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Equidistant,
    Quantile,
}

impl std::str::FromStr for GridKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equidistant" => Ok(GridKind::Equidistant),
            "quantile" => Ok(GridKind::Quantile),
            _ => Err(Error::InvalidGrid(format!("unknown grid kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PDGrid {
    pub feature: usize,
    points: Vec<f64>,
}

impl PDGrid {
    pub fn new(feature: usize, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("grid has non-finite points".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(Self { feature, points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `G` equidistant points over the observed range of `feature`, or the
/// empirical quantiles at levels `(g - 0.5) / G` (duplicates removed).
pub fn make_grid(data: &Dataset, feature: usize, size: usize, kind: GridKind) -> Result<PDGrid> {
    data.check_feature(feature)?;
    if size == 0 {
        return Err(Error::InvalidGrid("grid size must be >= 1".into()));
    }
    let mut values = data.features().column(feature);
    values.sort_by(f64::total_cmp);
    let (min, max) = (values[0], values[values.len() - 1]);
    if size > 1 && min == max {
        return Err(Error::ConstantFeature(feature));
    }
    let points = match kind {
        GridKind::Equidistant if size == 1 => vec![0.5 * (min + max)],
        GridKind::Equidistant => {
            let step = (max - min) / (size - 1) as f64;
            let mut pts: Vec<f64> = (0..size).map(|g| min + g as f64 * step).collect();
            pts[size - 1] = max;
            pts
        }
        GridKind::Quantile => {
            let mut pts: Vec<f64> = (1..=size)
                .map(|g| quantile_sorted(&values, (g as f64 - 0.5) / size as f64))
                .collect();
            pts.dedup();
            pts
        }
    };
    PDGrid::new(feature, points)
}

/// Linear interpolation between order statistics at position `(n - 1) q`.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Model,
    Learner,
}

impl EstimateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateKind::Model => "model",
            EstimateKind::Learner => "learner",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdMeta {
    /// Test rows (model kind) or refits (learner kind) behind each estimate.
    pub samples: usize,
    pub c: f64,
    pub alpha: f64,
    pub seed: Option<u64>,
    pub mode: Option<ResampleMode>,
    /// Grid points outside the feature range seen in training (learner kind)
    /// or in the evaluation rows (model kind).
    pub extrapolated: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PDCurve {
    pub grid: PDGrid,
    pub estimates: Vec<IntervalEstimate>,
    pub kind: EstimateKind,
    pub meta: PdMeta,
}

impl PDCurve {
    pub fn means(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.mean).collect()
    }

    /// Columns: feature, grid_x, mean, variance, lower, upper, df.
    pub fn to_csv(&self, feature_name: &str) -> String {
        let mut out = String::from("feature,grid_x,mean,variance,lower,upper,df\n");
        for (x, e) in self.grid.points().iter().zip(&self.estimates) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                feature_name,
                fmt_f64(*x),
                fmt_f64(e.mean),
                fmt_f64(e.variance),
                fmt_f64(e.lower),
                fmt_f64(e.upper),
                e.df
            );
        }
        out
    }
}

fn range_flags(points: &[f64], values: impl Iterator<Item = f64>) -> Vec<bool> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    points.iter().map(|&x| x < lo || x > hi).collect()
}

/// Predictions `model(x, x_C^(i))` for every grid point `x` (outer) and test
/// row `i` (inner).
pub fn ice_predictions<M: Model + ?Sized>(model: &M, test: &IndexView<'_>, grid: &PDGrid) -> Vec<Vec<f64>> {
    let mut x = test.features();
    grid.points()
        .iter()
        .map(|&g| {
            x.fill_column(grid.feature, g);
            model.predict(&x)
        })
        .collect()
}

/// Point estimates of the model-PD at every grid point.
pub fn model_pd_means<M: Model + ?Sized>(model: &M, test: &IndexView<'_>, grid: &PDGrid) -> Vec<f64> {
    ice_predictions(model, test, grid)
        .into_iter()
        .map(|p| p.iter().sum::<f64>() / p.len() as f64)
        .collect()
}

/// PD of a fixed model, averaged over the test rows, with point-wise
/// t-bands on `n2 - 1` degrees of freedom.
pub fn model_pd<M: Model + ?Sized>(
    model: &M,
    test: &IndexView<'_>,
    grid: &PDGrid,
    alpha: f64,
) -> Result<PDCurve> {
    check_alpha(alpha)?;
    test.base().check_feature(grid.feature)?;
    if test.len() < 2 {
        return Err(Error::TooFewRows { got: test.len(), need: 2 });
    }
    let estimates = ice_predictions(model, test, grid)
        .iter()
        .map(|preds| corrected_mean_ci(preds, 0.0, alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(PDCurve {
        meta: PdMeta {
            samples: test.len(),
            c: 0.0,
            alpha,
            seed: None,
            mode: None,
            extrapolated: range_flags(grid.points(), test.column(grid.feature).into_iter()),
        },
        grid: grid.clone(),
        estimates,
        kind: EstimateKind::Model,
    })
}

/// Model-PD means of each refit on its own test rows: `values[d][g]`.
pub fn per_split_pd(
    models: &[Box<dyn Model>],
    data: &Dataset,
    plan: &ResamplePlan,
    grid: &PDGrid,
) -> Result<Vec<Vec<f64>>> {
    check_models(models, plan)?;
    data.check_feature(grid.feature)?;
    (0..plan.m())
        .into_par_iter()
        .map(|d| {
            let (_, test) = split_views(data, plan, d)?;
            Ok(model_pd_means(&models[d], &test, grid))
        })
        .collect()
}

/// Learner-PD from already fitted refits (one model per split).
pub fn learner_pd_from_models(
    models: &[Box<dyn Model>],
    data: &Dataset,
    plan: &ResamplePlan,
    grid: &PDGrid,
    alpha: f64,
    seed: Option<u64>,
) -> Result<PDCurve> {
    check_alpha(alpha)?;
    check_plan(data, plan)?;
    let values = per_split_pd(models, data, plan, grid)?;
    let c = correction_constant(plan);
    let estimates = (0..grid.len())
        .map(|g| {
            let column: Vec<f64> = values.iter().map(|v| v[g]).collect();
            corrected_mean_ci(&column, c, alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    let trained = plan
        .splits
        .iter()
        .flat_map(|s| s.train.iter())
        .map(|&i| data.features().get(i, grid.feature));
    Ok(PDCurve {
        meta: PdMeta {
            samples: plan.m(),
            c,
            alpha,
            seed,
            mode: Some(plan.mode),
            extrapolated: range_flags(grid.points(), trained),
        },
        grid: grid.clone(),
        estimates,
        kind: EstimateKind::Learner,
    })
}

/// Refit `learner` on every split of `plan`, compute each model's PD on the
/// split's test rows, and combine them with the corrected variance.
pub fn learner_pd<L: Learner + ?Sized>(
    learner: &L,
    data: &Dataset,
    plan: &ResamplePlan,
    grid: &PDGrid,
    alpha: f64,
    seed: u64,
) -> Result<PDCurve> {
    check_alpha(alpha)?;
    data.check_feature(grid.feature)?;
    let models = fit_refits(learner, data, plan, seed)?;
    learner_pd_from_models(&models, data, plan, grid, alpha, Some(seed))
}
