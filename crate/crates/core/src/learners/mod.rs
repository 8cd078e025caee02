//! Prediction models, learners that fit them, and per-instance losses.
//!
//! Any predictor can take part in the estimators by implementing [`Model`];
//! any fitting procedure by implementing [`Learner`]. Three regression
//! learners ship with the crate: ordinary least squares, CART trees and random
//! forests.

mod forest;
mod linear;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{IndexView, Matrix};
use crate::error::{Error, Result};

pub use forest::{fit_forest, ForestParams, RandomForest};
pub use linear::{fit_linear, LinearModel, RIDGE_PENALTY};
pub use tree::{fit_tree, RegressionTree, TreeParams};

/// A fitted prediction function. Must be deterministic.
pub trait Model: Send + Sync {
    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    fn descriptor(&self) -> String;
}

/// A procedure mapping training rows and a seed to a [`Model`]. Must be
/// deterministic given `(train, seed)`.
pub trait Learner: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, train: &IndexView<'_>, seed: u64) -> Result<Box<dyn Model>>;
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (**self).predict(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<M: Model + ?Sized> Model for Arc<M> {
    fn predict_row(&self, x: &[f64]) -> f64 {
        (**self).predict_row(x)
    }
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (**self).predict(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// Wraps a closure as a [`Model`].
#[derive(Clone)]
pub struct FnModel<F> {
    f: F,
    descriptor: String,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(descriptor: impl Into<String>, f: F) -> Self {
        Self {
            f,
            descriptor: descriptor.into(),
        }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn predict_row(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn descriptor(&self) -> String {
        self.descriptor.clone()
    }
}

/// Serializable choice of built-in learner and its hyperparameters.
///
/// Parses from compact strings such as `lm`, `tree:max_depth=4,min_leaf=2`
/// or `rf:n_trees=50,features_per_split=2,bootstrap_rows=false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LearnerSpec {
    Lm,
    Tree(TreeParams),
    Rf(ForestParams),
}

impl LearnerSpec {
    pub fn short_name(&self) -> &'static str {
        match self {
            LearnerSpec::Lm => "lm",
            LearnerSpec::Tree(_) => "tree",
            LearnerSpec::Rf(_) => "rf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::Lm => Ok(()),
            LearnerSpec::Tree(t) => t.validate(),
            LearnerSpec::Rf(f) => f.validate(),
        }
    }
}

impl Learner for LearnerSpec {
    fn name(&self) -> String {
        self.to_string()
    }

    fn fit(&self, train: &IndexView<'_>, seed: u64) -> Result<Box<dyn Model>> {
        Ok(match self {
            LearnerSpec::Lm => Box::new(fit_linear(train)?),
            LearnerSpec::Tree(params) => Box::new(fit_tree(train, params)?),
            LearnerSpec::Rf(params) => Box::new(fit_forest(train, params, seed)?),
        })
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::Lm => write!(f, "lm"),
            LearnerSpec::Tree(t) => {
                write!(f, "tree:max_depth={},min_leaf={}", t.max_depth, t.min_leaf)
            }
            LearnerSpec::Rf(p) => {
                write!(
                    f,
                    "rf:n_trees={},max_depth={},min_leaf={},bootstrap_rows={}",
                    p.n_trees, p.tree.max_depth, p.tree.min_leaf, p.bootstrap_rows
                )?;
                if let Some(k) = p.features_per_split {
                    write!(f, ",features_per_split={k}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let mut pairs = Vec::new();
        for item in args.split(',').filter(|a| !a.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got `{item}`")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let bad = |k: &str, v: &str| Error::InvalidParams(format!("bad value `{v}` for `{k}`"));
        let uint = |k: &str, v: &str| v.parse::<usize>().map_err(|_| bad(k, v));

        let spec = match kind.trim() {
            "lm" => {
                if let Some((k, _)) = pairs.first() {
                    return Err(Error::InvalidParams(format!("lm takes no parameter `{k}`")));
                }
                LearnerSpec::Lm
            }
            "tree" => {
                let mut t = TreeParams::default();
                for (k, v) in pairs {
                    match k {
                        "max_depth" => t.max_depth = uint(k, v)?,
                        "min_leaf" => t.min_leaf = uint(k, v)?,
                        _ => return Err(Error::InvalidParams(format!("unknown tree parameter `{k}`"))),
                    }
                }
                LearnerSpec::Tree(t)
            }
            "rf" => {
                let mut p = ForestParams::default();
                for (k, v) in pairs {
                    match k {
                        "n_trees" => p.n_trees = uint(k, v)?,
                        "max_depth" => p.tree.max_depth = uint(k, v)?,
                        "min_leaf" => p.tree.min_leaf = uint(k, v)?,
                        "features_per_split" => p.features_per_split = Some(uint(k, v)?),
                        "bootstrap_rows" => p.bootstrap_rows = v.parse().map_err(|_| bad(k, v))?,
                        _ => return Err(Error::InvalidParams(format!("unknown rf parameter `{k}`"))),
                    }
                }
                LearnerSpec::Rf(p)
            }
            other => return Err(Error::InvalidParams(format!("unknown learner `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Loss evaluated per instance. Set-level losses (AUC and the like) cannot be
/// expressed through this interface.
pub trait PointLoss: Send + Sync {
    fn loss(&self, y: f64, yhat: f64) -> f64;
}

/// `(y - yhat)^2`
#[derive(Debug, Clone, Copy, Default)]
pub struct SquaredLoss;

impl PointLoss for SquaredLoss {
    #[inline]
    fn loss(&self, y: f64, yhat: f64) -> f64 {
        let d = y - yhat;
        d * d
    }
}

pub fn loss_l2(y: &[f64], yhat: &[f64]) -> Result<Vec<f64>> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    Ok(y.iter().zip(yhat).map(|(&a, &b)| SquaredLoss.loss(a, b)).collect())
}
