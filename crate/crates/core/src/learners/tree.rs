use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::Model;
use crate::data::IndexView;
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 30,
            min_leaf: 5,
        }
    }
}

impl TreeParams {
    pub fn new(max_depth: usize, min_leaf: usize) -> Result<Self> {
        let t = Self { max_depth, min_leaf };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidParams("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART regression tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Feature and threshold of the root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Leaf(_) => None,
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
        }
    }
}

impl Model for RegressionTree {
    #[inline]
    fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    fn descriptor(&self) -> String {
        format!("tree leaves={} depth={}", self.n_leaves(), self.depth())
    }
}

pub fn fit_tree(train: &IndexView<'_>, params: &TreeParams) -> Result<RegressionTree> {
    params.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let x = train.features();
    let y = train.targets();
    let mut rows: Vec<usize> = (0..y.len()).collect();
    Ok(Grower::new(x.as_slice(), x.cols(), &y, *params, None).grow(&mut rows))
}

/// Per-split random feature subsets for forests.
pub(super) struct FeatureSampler<'r> {
    pub rng: &'r mut Rng,
    pub per_split: usize,
}

pub(super) struct Grower<'a, 'r> {
    x: &'a [f64],
    p: usize,
    y: &'a [f64],
    params: TreeParams,
    sampler: Option<FeatureSampler<'r>>,
    nodes: Vec<Node>,
    buf: Vec<(f64, f64)>,
    candidates: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a, 'r> Grower<'a, 'r> {
    pub(super) fn new(
        x: &'a [f64],
        p: usize,
        y: &'a [f64],
        params: TreeParams,
        sampler: Option<FeatureSampler<'r>>,
    ) -> Self {
        Self {
            x,
            p,
            y,
            params,
            sampler,
            nodes: Vec::new(),
            buf: Vec::with_capacity(y.len()),
            candidates: Vec::with_capacity(p),
        }
    }

    pub(super) fn grow(mut self, rows: &mut [usize]) -> RegressionTree {
        self.node(rows, 0);
        RegressionTree { nodes: self.nodes }
    }

    fn node(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let n = rows.len() as f64;
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / n;
        self.nodes.push(Node::Leaf(mean));

        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf {
            return id;
        }
        let sse: f64 = rows.iter().map(|&r| (self.y[r] - mean).powi(2)).sum();
        if sse <= 0.0 {
            return id;
        }
        let best = match self.best_split(rows, mean) {
            Some(b) if b.gain > 1e-12 * sse => b,
            _ => return id,
        };

        let mut split = 0;
        for k in 0..rows.len() {
            if self.x[rows[k] * self.p + best.feature] <= best.threshold {
                rows.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.node(l, depth + 1);
        let right = self.node(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, rows: &[usize], mean: f64) -> Option<BestSplit> {
        self.candidates.clear();
        match &mut self.sampler {
            Some(s) if s.per_split < self.p => {
                self.candidates
                    .extend(index::sample(s.rng, self.p, s.per_split));
                self.candidates.sort_unstable();
            }
            _ => self.candidates.extend(0..self.p),
        }

        let min_leaf = self.params.min_leaf;
        let n = rows.len();
        let mut best: Option<BestSplit> = None;
        for ci in 0..self.candidates.len() {
            let feature = self.candidates[ci];
            self.buf.clear();
            self.buf
                .extend(rows.iter().map(|&r| (self.x[r * self.p + feature], self.y[r] - mean)));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            // Centered targets: the gain of a split with left sum S and sizes
            // (nl, nr) is S^2 * n / (nl * nr).
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.buf[k].1;
                let nl = k + 1;
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let (a, b) = (self.buf[k].0, self.buf[k + 1].0);
                if a == b {
                    continue;
                }
                let gain = left_sum * left_sum * n as f64 / (nl as f64 * nr as f64);
                if best.as_ref().map_or(true, |bs| gain > bs.gain) {
                    let mut threshold = 0.5 * (a + b);
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Matrix};
    use crate::seed;
    use rand::Rng as _;

    fn dataset(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset {
        let p = rows[0].len();
        Dataset::new(
            Matrix::from_rows(rows).unwrap(),
            (1..=p).map(|j| format!("x{j}")).collect(),
            y,
            "y",
        )
        .unwrap()
    }

    fn train_mse(tree: &RegressionTree, d: &Dataset) -> f64 {
        let pred = tree.predict(d.features());
        pred.iter().zip(d.target()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d.n() as f64
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let d = dataset(&rows, vec![4.5; 20]);
        let t = fit_tree(&d.view_all(), &TreeParams::default()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict_row(&[100.0, -1.0]), 4.5);
    }

    /// Brute force: every midpoint of every feature, keep the lowest SSE.
    fn brute_force_best_threshold(d: &Dataset, min_leaf: usize) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NAN, f64::INFINITY);
        for j in 0..d.p() {
            let mut vals = d.features().column(j);
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = 0.5 * (w[0] + w[1]);
                let (mut l, mut r) = (Vec::new(), Vec::new());
                for i in 0..d.n() {
                    if d.features().get(i, j) <= thr {
                        l.push(d.target()[i]);
                    } else {
                        r.push(d.target()[i]);
                    }
                }
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let sse = |v: &[f64]| {
                    let m = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                };
                let total = sse(&l) + sse(&r);
                if total < best.2 - 1e-12 {
                    best = (j, thr, total);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn step_function_is_split_at_half() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            for k in 0..3 {
                let x1 = (i as f64 + 0.5) / 10.0;
                rows.push(vec![x1, k as f64 / 2.0]);
                y.push(if x1 > 0.5 { 1.0 } else { 0.0 });
            }
        }
        let d = dataset(&rows, y);
        let params = TreeParams::new(2, 1).unwrap();
        let t = fit_tree(&d.view_all(), &params).unwrap();
        let (feature, threshold) = t.root_split().unwrap();
        let oracle = brute_force_best_threshold(&d, 1);
        assert_eq!(feature, 0);
        assert_eq!((feature, threshold), oracle);
        assert!((threshold - 0.5).abs() < 1e-12);
        assert_eq!(train_mse(&t, &d), 0.0);
    }

    #[test]
    fn root_split_matches_brute_force_on_random_data() {
        let mut rng = seed::rng(11);
        for trial in 0..20 {
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| vec![rng.random(), rng.random(), (rng.random::<f64>() * 4.0).floor()])
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| r[0] * r[2] + rng.random::<f64>()).collect();
            let d = dataset(&rows, y);
            let min_leaf = 1 + trial % 5;
            let t = fit_tree(&d.view_all(), &TreeParams::new(1, min_leaf).unwrap()).unwrap();
            assert_eq!(t.root_split().unwrap(), brute_force_best_threshold(&d, min_leaf));
        }
    }

    #[test]
    fn min_leaf_equal_to_n_gives_mean_leaf() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| (i * i) as f64).collect();
        let mean = y.iter().sum::<f64>() / 12.0;
        let d = dataset(&rows, y);
        let t = fit_tree(&d.view_all(), &TreeParams::new(30, 12).unwrap()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict_row(&[3.0]), mean);
    }

    #[test]
    fn training_mse_non_increasing_in_depth() {
        let mut rng = seed::rng(3);
        let rows: Vec<Vec<f64>> = (0..150).map(|_| vec![rng.random(), rng.random()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (6.0 * r[0]).sin() + r[1] + 0.3 * rng.random::<f64>()).collect();
        let d = dataset(&rows, y);
        let mut last = f64::INFINITY;
        for depth in 1..12 {
            let t = fit_tree(&d.view_all(), &TreeParams::new(depth, 2).unwrap()).unwrap();
            let mse = train_mse(&t, &d);
            assert!(mse <= last + 1e-12, "depth {depth}: {mse} > {last}");
            assert!(t.depth() <= depth);
            last = mse;
        }
    }

    #[test]
    fn invalid_params() {
        assert!(TreeParams::new(0, 1).is_err());
        assert!(TreeParams::new(1, 0).is_err());
    }
}
