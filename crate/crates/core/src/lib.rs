//! Partial dependence (PD) and permutation feature importance (PFI) with
//! variance estimates and confidence intervals.
//!
//! Two levels of inference are supported:
//!
//! * **model level**: a single fitted model is treated as fixed and the
//!   intervals reflect only the Monte Carlo error of averaging over test rows
//!   ([`pd::model_pd`], [`pfi::model_pfi`]);
//! * **learner level**: the learner is refitted on the splits of a
//!   [`resampling::ResamplePlan`] and the intervals include the variability
//!   of the fitted model, with a variance correction for overlapping
//!   training sets ([`pd::learner_pd`], [`pfi::learner_pfi`]).
//!
//! The [`sim`] module contains the ground-truth data generating processes and
//! the coverage experiments used to check that the intervals hold their
//! nominal level.
//!
//! ```
//! use pdpfi::prelude::*;
//!
//! let dgp = DGPSpec::linear();
//! let data = sample_dgp(&dgp, 200, 7).unwrap();
//! let plan = bootstrap_plan(data.n(), 15, 1).unwrap();
//! let grid = PDGrid::new(0, vec![0.25, 0.5, 0.75]).unwrap();
//! let pd = learner_pd(&LearnerSpec::Lm, &data, &plan, &grid, 0.05, 3).unwrap();
//! assert_eq!(pd.estimates.len(), 3);
//! assert!(pd.estimates[0].mean < pd.estimates[2].mean);
//! ```

pub mod data;
pub mod error;
pub mod inference;
pub mod learners;
pub mod pd;
pub mod pfi;
pub mod refit;
pub mod resampling;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::data::{Dataset, IndexView, Matrix};
    pub use crate::error::{Error, Result};
    pub use crate::inference::{corrected_mean_ci, IntervalEstimate};
    pub use crate::learners::{Learner, LearnerSpec, Model};
    pub use crate::pd::{learner_pd, make_grid, model_pd, GridKind, PDCurve, PDGrid};
    pub use crate::pfi::{learner_pfi, model_pfi, pfi_ranking, PFIEstimate, ReplacementSampler};
    pub use crate::refit::fit_refits;
    pub use crate::resampling::{bootstrap_plan, subsample_plan, ResampleMode, ResamplePlan};
    pub use crate::sim::{sample_dgp, DGPSpec};
}

/// Code blocks of the guide in `book/`, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }
    chapter!(introduction, "introduction.md");
    chapter!(model_vs_learner, "model-vs-learner.md");
    chapter!(partial_dependence, "partial-dependence.md");
    chapter!(feature_importance, "feature-importance.md");
    chapter!(resampling, "resampling.md");
    chapter!(comparing_learners, "comparing-learners.md");
    chapter!(simulation, "simulation.md");
    chapter!(decompositions, "decompositions.md");
    chapter!(reproducibility, "reproducibility.md");
    chapter!(cli, "cli.md");
    chapter!(config_schema, "config-schema.md");
}
