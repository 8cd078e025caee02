use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{FeatureSampler, Grower};
use super::{Model, RegressionTree, TreeParams};
use crate::data::IndexView;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    #[serde(flatten)]
    pub tree: TreeParams,
    /// Candidate features per split; `None` means `ceil(p / 3)`.
    pub features_per_split: Option<usize>,
    pub bootstrap_rows: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeParams::default(),
            features_per_split: None,
            bootstrap_rows: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParams("n_trees must be >= 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::InvalidParams("features_per_split must be >= 1".into()));
        }
        self.tree.validate()
    }

    pub fn features_per_split_for(&self, p: usize) -> Result<usize> {
        let k = self.features_per_split.unwrap_or_else(|| p.div_ceil(3).max(1));
        if k == 0 || k > p {
            return Err(Error::InvalidParams(format!(
                "features_per_split {k} not in [1, {p}]"
            )));
        }
        Ok(k)
    }
}

/// Average of independently grown CART trees.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}

impl Model for RandomForest {
    #[inline]
    fn predict_row(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(x)).sum();
        sum / self.trees.len() as f64
    }

    fn descriptor(&self) -> String {
        let leaves: usize = self.trees.iter().map(|t| t.n_leaves()).sum();
        format!("rf trees={} leaves={leaves}", self.trees.len())
    }
}

/// Tree `t` draws its rows and split candidates from a stream derived from
/// `(seed, t)` only, so the result does not depend on the thread count.
pub fn fit_forest(train: &IndexView<'_>, params: &ForestParams, seed: u64) -> Result<RandomForest> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let x = train.features();
    let y = train.targets();
    let p = x.cols();
    let per_split = params.features_per_split_for(p)?;
    let k = y.len();

    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, &[seed::stream::TREE, t as u64]));
            let mut rows: Vec<usize> = if params.bootstrap_rows {
                (0..k).map(|_| rng.random_range(0..k)).collect()
            } else {
                (0..k).collect()
            };
            let sampler = FeatureSampler {
                rng: &mut rng,
                per_split,
            };
            Grower::new(x.as_slice(), p, &y, params.tree, Some(sampler)).grow(&mut rows)
        })
        .collect();
    Ok(RandomForest { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Matrix};
    use crate::learners::fit_tree;

    fn noisy(n: usize, s: u64) -> Dataset {
        let mut rng = seed::rng(s);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let y = rows.iter().map(|r| r[0] - r[1] * r[2] + 0.2 * rng.random::<f64>()).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), vec!["a".into(), "b".into(), "c".into()], y, "y").unwrap()
    }

    #[test]
    fn single_unbagged_tree_equals_cart() {
        let d = noisy(80, 1);
        let tree_params = TreeParams::new(6, 3).unwrap();
        let params = ForestParams {
            n_trees: 1,
            tree: tree_params,
            features_per_split: Some(3),
            bootstrap_rows: false,
        };
        let f = fit_forest(&d.view_all(), &params, 99).unwrap();
        let t = fit_tree(&d.view_all(), &tree_params).unwrap();
        assert_eq!(f.trees()[0], t);
        assert_eq!(f.predict(d.features()), t.predict(d.features()));
    }

    #[test]
    fn constant_target_regardless_of_seed() {
        let d = noisy(30, 2);
        let d = Dataset::new(d.features().clone(), d.feature_names().to_vec(), vec![-2.0; 30], "y").unwrap();
        for s in 0..5 {
            let f = fit_forest(&d.view_all(), &ForestParams { n_trees: 10, ..Default::default() }, s).unwrap();
            assert!(f.predict(d.features()).iter().all(|&v| v == -2.0));
        }
    }

    #[test]
    fn same_seed_same_forest_and_prediction_is_tree_mean() {
        let d = noisy(60, 3);
        let params = ForestParams { n_trees: 25, ..Default::default() };
        let a = fit_forest(&d.view_all(), &params, 7).unwrap();
        let b = fit_forest(&d.view_all(), &params, 7).unwrap();
        let c = fit_forest(&d.view_all(), &params, 8).unwrap();
        assert_eq!(a.predict(d.features()), b.predict(d.features()));
        assert_ne!(a.predict(d.features()), c.predict(d.features()));
        for row in d.features().iter_rows() {
            let mut sum = 0.0;
            for t in a.trees() {
                sum += t.predict_row(row);
            }
            assert_eq!(a.predict_row(row), sum / a.trees().len() as f64);
        }
    }

    #[test]
    fn thread_count_does_not_change_forest() {
        let d = noisy(50, 4);
        let params = ForestParams { n_trees: 16, ..Default::default() };
        let fit_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| fit_forest(&d.view_all(), &params, 5).unwrap())
        };
        let one = fit_with(1);
        let four = fit_with(4);
        assert_eq!(one.trees(), four.trees());
    }

    #[test]
    fn features_per_split_bounds() {
        let p = ForestParams::default();
        assert_eq!(p.features_per_split_for(2).unwrap(), 1);
        assert_eq!(p.features_per_split_for(4).unwrap(), 2);
        assert_eq!(p.features_per_split_for(11).unwrap(), 4);
        let bad = ForestParams { features_per_split: Some(5), ..Default::default() };
        assert!(bad.features_per_split_for(4).is_err());
    }
}
