use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::IndexView;
use crate::error::{Error, Result};
use crate::learners::Model;
use crate::seed;

pub const DEFAULT_MARGINAL_REPETITIONS: usize = 5;
pub const DEFAULT_CONDITIONAL_REPETITIONS: usize = 1;
pub const DEFAULT_BINS: usize = 5;
/// Largest test set for which all permutations are enumerated (8! = 40320).
pub const MAX_EXHAUSTIVE_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SamplerKind {
    /// Seeded uniform permutations of the feature column.
    Marginal,
    /// Permutations within equal-frequency bins of a conditioning score.
    ConditionalBinned { bins: usize },
    /// Every permutation of the feature column, identity included.
    Exhaustive,
}

/// How replacement values `x̃_S` are drawn for each test row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplacementSampler {
    pub kind: SamplerKind,
    /// Number of replacement columns `l`. Ignored by [`SamplerKind::Exhaustive`].
    pub repetitions: usize,
    pub seed: u64,
}

impl ReplacementSampler {
    pub fn marginal(repetitions: usize, seed: u64) -> Self {
        Self { kind: SamplerKind::Marginal, repetitions, seed }
    }

    pub fn conditional(bins: usize, repetitions: usize, seed: u64) -> Self {
        Self { kind: SamplerKind::ConditionalBinned { bins }, repetitions, seed }
    }

    pub fn exhaustive() -> Self {
        Self { kind: SamplerKind::Exhaustive, repetitions: 1, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidParams("sampler repetitions must be >= 1".into()));
        }
        if let SamplerKind::ConditionalBinned { bins } = self.kind {
            if bins < 2 {
                return Err(Error::InvalidParams("conditional sampler needs bins >= 2".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ReplacementSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SamplerKind::Marginal => write!(f, "marginal:l={}", self.repetitions),
            SamplerKind::ConditionalBinned { bins } => {
                write!(f, "conditional:bins={},l={}", bins, self.repetitions)
            }
            SamplerKind::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

/// `marginal`, `marginal:l=10`, `conditional:bins=4,l=2` or `exhaustive`.
/// The seed is set to 0; use [`ReplacementSampler::with_seed`].
impl FromStr for ReplacementSampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut out = match head.trim() {
            "marginal" => Self::marginal(DEFAULT_MARGINAL_REPETITIONS, 0),
            "conditional" => Self::conditional(DEFAULT_BINS, DEFAULT_CONDITIONAL_REPETITIONS, 0),
            "exhaustive" => Self::exhaustive(),
            other => return Err(Error::InvalidParams(format!("unknown sampler `{other}`"))),
        };
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got `{kv}`")))?;
            let v: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("`{v}` is not a non-negative integer")))?;
            match (k.trim(), &mut out.kind) {
                ("l", SamplerKind::Marginal | SamplerKind::ConditionalBinned { .. }) => out.repetitions = v,
                ("bins", SamplerKind::ConditionalBinned { bins }) => *bins = v,
                (k, _) => return Err(Error::InvalidParams(format!("unknown sampler option `{k}` for `{head}`"))),
            }
        }
        out.validate()?;
        Ok(out)
    }
}

/// Replacement columns for `feature` on the test rows, each a rearrangement
/// of the observed values.
///
/// The conditional sampler bins rows on the single remaining feature when
/// there is one, and otherwise on `model`'s prediction with `feature` held at
/// its median, which makes `model` mandatory in that case.
pub fn sample_replacements(
    test: &IndexView<'_>,
    feature: usize,
    sampler: &ReplacementSampler,
    model: Option<&dyn Model>,
) -> Result<Vec<Vec<f64>>> {
    sampler.validate()?;
    test.base().check_feature(feature)?;
    let n2 = test.len();
    let column = test.column(feature);
    match sampler.kind {
        SamplerKind::Marginal => {
            if n2 < 2 {
                return Err(Error::TooFewRows { got: n2, need: 2 });
            }
            Ok((0..sampler.repetitions)
                .map(|k| {
                    let mut rng = seed::rng(seed::mix(sampler.seed, k as u64));
                    let mut col = column.clone();
                    col.shuffle(&mut rng);
                    col
                })
                .collect())
        }
        SamplerKind::Exhaustive => {
            if n2 < 2 {
                return Err(Error::TooFewRows { got: n2, need: 2 });
            }
            if n2 > MAX_EXHAUSTIVE_ROWS {
                return Err(Error::InvalidParams(format!(
                    "exhaustive sampling supports at most {MAX_EXHAUSTIVE_ROWS} rows, got {n2}"
                )));
            }
            Ok(permutations(n2)
                .into_iter()
                .map(|perm| perm.iter().map(|&i| column[i]).collect())
                .collect())
        }
        SamplerKind::ConditionalBinned { bins } => {
            if n2 < 2 * bins {
                return Err(Error::TooFewRows { got: n2, need: 2 * bins });
            }
            let groups = match conditioning_score(test, feature, model)? {
                Some(score) => {
                    let mut order: Vec<usize> = (0..n2).collect();
                    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));
                    (0..bins)
                        .map(|b| order[b * n2 / bins..(b + 1) * n2 / bins].to_vec())
                        .collect()
                }
                None => vec![(0..n2).collect::<Vec<_>>()],
            };
            Ok((0..sampler.repetitions)
                .map(|k| {
                    let mut rng = seed::rng(seed::mix(sampler.seed, k as u64));
                    let mut col = column.clone();
                    for rows in &groups {
                        let mut vals: Vec<f64> = rows.iter().map(|&r| column[r]).collect();
                        vals.shuffle(&mut rng);
                        for (&r, v) in rows.iter().zip(vals) {
                            col[r] = v;
                        }
                    }
                    col
                })
                .collect())
        }
    }
}

fn conditioning_score(test: &IndexView<'_>, feature: usize, model: Option<&dyn Model>) -> Result<Option<Vec<f64>>> {
    let p = test.base().p();
    match p {
        1 => Ok(None),
        2 => Ok(Some(test.column(1 - feature))),
        _ => {
            let model = model.ok_or(Error::MissingModel)?;
            let mut values = test.column(feature);
            values.sort_by(f64::total_cmp);
            let median = values[values.len() / 2];
            let mut x = test.features();
            x.fill_column(feature, median);
            Ok(Some(model.predict(&x)))
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![perm.clone()];
    loop {
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
        out.push(perm.clone());
    }
}
