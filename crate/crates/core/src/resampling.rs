//! Train/test index plans for refitting a learner, and the variance
//! correction constant that accompanies them.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Fraction of distinct rows in a bootstrap draw, and the default subsample
/// fraction.
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.632;
pub const DEFAULT_SPLITS: usize = 15;
pub const MAX_SPLITS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    Bootstrap,
    Subsample,
    /// Each split lives on its own, independently drawn block of rows.
    Fresh,
}

impl ResampleMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResampleMode::Bootstrap => "bootstrap",
            ResampleMode::Subsample => "subsample",
            ResampleMode::Fresh => "fresh",
        }
    }
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bootstrap" | "boot" => Ok(ResampleMode::Bootstrap),
            "subsample" | "subs" => Ok(ResampleMode::Subsample),
            "fresh" => Ok(ResampleMode::Fresh),
            _ => Err(Error::InvalidConfig(format!("unknown resampling mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Number of redraws needed to get a non-empty test set.
    #[serde(default)]
    pub redraws: u32,
}

impl Split {
    pub fn distinct_train(&self) -> usize {
        let mut v = self.train.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub mode: ResampleMode,
    /// Total rows the plan indexes into.
    pub n: usize,
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl ResamplePlan {
    pub fn m(&self) -> usize {
        self.splits.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let plan: ResamplePlan =
            serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    /// Disjointness, bounds and non-empty sets for every split.
    pub fn validate(&self) -> Result<()> {
        for (d, s) in self.splits.iter().enumerate() {
            if s.train.is_empty() || s.test.is_empty() {
                return Err(Error::InvalidSize(format!("split {d} has an empty side")));
            }
            let mut seen = vec![false; self.n];
            for &i in &s.train {
                if i >= self.n {
                    return Err(Error::IndexOutOfBounds { index: i, len: self.n });
                }
                seen[i] = true;
            }
            for &i in &s.test {
                if i >= self.n {
                    return Err(Error::IndexOutOfBounds { index: i, len: self.n });
                }
                if seen[i] {
                    return Err(Error::InvalidSize(format!("split {d}: row {i} in train and test")));
                }
            }
        }
        Ok(())
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("n = {n}, need n >= 2")));
    }
    if !(2..=MAX_SPLITS).contains(&m) {
        return Err(Error::InvalidSize(format!("m = {m}, need 2 <= m <= {MAX_SPLITS}")));
    }
    Ok(())
}

/// `m` bootstrap draws of size `n`; the test set of each split is its
/// out-of-bag rows. A draw without out-of-bag rows is replaced by a draw from
/// the next derived seed.
pub fn bootstrap_plan(n: usize, m: usize, seed: u64) -> Result<ResamplePlan> {
    check_sizes(n, m)?;
    let splits = (0..m)
        .map(|d| {
            let split_seed = seed::derive(seed, &[stream::PLAN, d as u64]);
            let mut attempt = 0u32;
            loop {
                let mut rng = seed::rng(seed::mix(split_seed, attempt as u64));
                let train: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut in_bag = vec![false; n];
                for &i in &train {
                    in_bag[i] = true;
                }
                let test: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
                if !test.is_empty() {
                    return Split {
                        train,
                        test,
                        redraws: attempt,
                    };
                }
                attempt += 1;
            }
        })
        .collect();
    Ok(ResamplePlan {
        mode: ResampleMode::Bootstrap,
        n,
        seed,
        splits,
    })
}

/// `m` draws of `floor(fraction * n)` distinct rows; test is the complement.
pub fn subsample_plan(n: usize, m: usize, fraction: f64, seed: u64) -> Result<ResamplePlan> {
    check_sizes(n, m)?;
    let k = train_size(n, fraction)?;
    let splits = (0..m)
        .map(|d| {
            let mut rng = seed::rng(seed::derive(seed, &[stream::PLAN, d as u64]));
            let mut train = index::sample(&mut rng, n, k).into_vec();
            train.sort_unstable();
            let mut in_train = vec![false; n];
            for &i in &train {
                in_train[i] = true;
            }
            let test = (0..n).filter(|&i| !in_train[i]).collect();
            Split {
                train,
                test,
                redraws: 0,
            }
        })
        .collect();
    Ok(ResamplePlan {
        mode: ResampleMode::Subsample,
        n,
        seed,
        splits,
    })
}

/// Plan over `m` stacked blocks of `block` rows each (block `d` occupies rows
/// `d*block .. (d+1)*block`). The first `floor(fraction * block)` rows of each
/// block train, the rest test. Use with a dataset made of `m` independent
/// draws.
pub fn fresh_plan(block: usize, m: usize, fraction: f64) -> Result<ResamplePlan> {
    check_sizes(block, m)?;
    let k = train_size(block, fraction)?;
    let splits = (0..m)
        .map(|d| {
            let start = d * block;
            Split {
                train: (start..start + k).collect(),
                test: (start + k..start + block).collect(),
                redraws: 0,
            }
        })
        .collect();
    Ok(ResamplePlan {
        mode: ResampleMode::Fresh,
        n: block * m,
        seed: 0,
        splits,
    })
}

pub fn train_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidSize(format!("fraction {fraction} not in (0, 1)")));
    }
    // The small offset keeps products such as 0.632 * 1000 from flooring to 631.
    let k = (fraction * n as f64 + 1e-9).floor() as usize;
    if k < 1 || k > n - 1 {
        return Err(Error::InvalidSize(format!(
            "floor({fraction} * {n}) = {k} leaves an empty train or test set"
        )));
    }
    Ok(k)
}

/// Variance correction `c`: 0 for fresh plans, otherwise the mean over splits
/// of `|test| / |distinct train|`.
pub fn correction_constant(plan: &ResamplePlan) -> f64 {
    match plan.mode {
        ResampleMode::Fresh => 0.0,
        ResampleMode::Bootstrap | ResampleMode::Subsample => {
            let sum: f64 = plan
                .splits
                .iter()
                .map(|s| s.test.len() as f64 / s.distinct_train() as f64)
                .sum();
            sum / plan.m() as f64
        }
    }
}
