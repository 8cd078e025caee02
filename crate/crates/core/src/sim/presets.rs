//! Bundled simulation scenarios.

use super::coverage::CoverageConfig;
use crate::error::{Error, Result};
use crate::learners::{ForestParams, LearnerSpec, TreeParams};
use crate::resampling::ResampleMode;

pub const PRESET_NAMES: [&str; 3] = ["ideal-lm-linear", "ideal", "tables12"];
pub const DEFAULT_PRESET_SEED: u64 = 2024;

fn learners() -> [LearnerSpec; 3] {
    [
        LearnerSpec::Lm,
        LearnerSpec::Rf(ForestParams::default()),
        LearnerSpec::Tree(TreeParams::default()),
    ]
}

/// Scenarios of a preset at desk-scale defaults (1000 repetitions, 2000
/// reference runs, 100 trees per forest).
///
/// * `ideal-lm-linear`: fresh data per refit, lm, linear DGP, n = 100.
/// * `ideal`: fresh data per refit, lm and rf on both DGPs, n = 100.
/// * `tables12`: both DGPs × {lm, rf, tree} × n ∈ {100, 1000} ×
///   {bootstrap, subsample}. Run with both variants to get the 24 PD and 24
///   PFI cells per variant.
pub fn preset(name: &str, seed: u64) -> Result<Vec<CoverageConfig>> {
    let base = |dgp: &str, learner: LearnerSpec, n: usize, mode: ResampleMode| CoverageConfig {
        seed,
        ..CoverageConfig::new(dgp, learner, n, mode)
    };
    match name {
        "ideal-lm-linear" => Ok(vec![base("linear", LearnerSpec::Lm, 100, ResampleMode::Fresh)]),
        "ideal" => {
            let mut out = Vec::new();
            for dgp in ["linear", "nonlinear"] {
                for learner in [LearnerSpec::Lm, LearnerSpec::Rf(ForestParams::default())] {
                    out.push(base(dgp, learner, 100, ResampleMode::Fresh));
                }
            }
            Ok(out)
        }
        "tables12" => {
            let mut out = Vec::new();
            for dgp in ["linear", "nonlinear"] {
                for learner in learners() {
                    for n in [100, 1000] {
                        for mode in [ResampleMode::Bootstrap, ResampleMode::Subsample] {
                            out.push(CoverageConfig { corrected: true, ..base(dgp, learner, n, mode) });
                        }
                    }
                }
            }
            Ok(out)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Whether a preset reports both uncorrected and corrected intervals.
pub fn preset_reports_both_variants(name: &str) -> bool {
    name == "tables12"
}

/// Overrides for running presets at reduced scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PresetScale {
    pub repetitions: Option<usize>,
    pub reference_runs: Option<usize>,
    pub rf_trees: Option<usize>,
}

impl PresetScale {
    pub fn apply(&self, configs: &mut [CoverageConfig]) {
        for c in configs {
            if let Some(r) = self.repetitions {
                c.repetitions = r;
            }
            if let Some(r) = self.reference_runs {
                c.reference_runs = r;
            }
            if let (Some(t), LearnerSpec::Rf(p)) = (self.rf_trees, &mut c.learner) {
                p.n_trees = t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables12_grid_arithmetic() {
        let c = preset("tables12", 1).unwrap();
        assert_eq!(c.len(), 24);
        for cfg in &c {
            cfg.validate().unwrap();
            assert!(cfg.corrected);
        }
        assert_eq!(c.iter().filter(|c| c.resampling == ResampleMode::Bootstrap).count(), 12);
    }

    #[test]
    fn scale_overrides() {
        let mut c = preset("ideal", 1).unwrap();
        PresetScale { repetitions: Some(10), reference_runs: Some(100), rf_trees: Some(50) }.apply(&mut c);
        assert!(c.iter().all(|c| c.repetitions == 10 && c.reference_runs == 100));
        assert!(c.iter().any(|c| matches!(c.learner, LearnerSpec::Rf(p) if p.n_trees == 50)));
        assert!(preset("nope", 1).is_err());
    }
}
