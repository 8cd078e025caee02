//! Property tests for the structural invariants of each module.

use pdpfi::data::Dataset;
use pdpfi::inference::{corrected_mean_ci, t_quantile};
use pdpfi::learners::{fit_forest, fit_linear, fit_tree, ForestParams, FnModel, Learner, LearnerSpec, Model, TreeParams};
use pdpfi::pd::{learner_pd_from_models, model_pd_means, per_split_pd, PDGrid};
use pdpfi::pfi::{learner_pfi_from_models, model_pfi, per_split_pfi, ReplacementSampler};
use pdpfi::prelude::Matrix;
use pdpfi::refit::fit_refits;
use pdpfi::resampling::{bootstrap_plan, subsample_plan};
use pdpfi::sim::{coverage_experiment, sample_dgp, CoverageConfig, DGPSpec};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn dataset(rows: &[Vec<f64>], y: &[f64]) -> Dataset {
    let p = rows[0].len();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    Dataset::new(Matrix::from_rows(rows).unwrap(), names, y.to_vec(), "y").unwrap()
}

fn data_strategy(p: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((prop::collection::vec(-5.0f64..5.0, p), -5.0f64..5.0), n).prop_map(|rows| {
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();
        dataset(&x, &y)
    })
}

fn probe(data: &Dataset) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.features().row(i).iter().map(|v| v * 0.9 + 0.1).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

fn learners() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::Lm,
        LearnerSpec::Tree(TreeParams::new(4, 2).unwrap()),
        LearnerSpec::Rf(ForestParams { n_trees: 5, ..Default::default() }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip_is_bit_identical(data in data_strategy(3, 1..20), scale in prop::sample::select(vec![1e-300, 1e-7, 1.0, 3.3e12, 1e300])) {
        let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| data.features().row(i).iter().map(|v| v * scale / 7.0).collect()).collect();
        let data = dataset(&rows, data.target());
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), "y").unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn full_view_materializes_to_the_dataset(data in data_strategy(2, 1..30)) {
        let all: Vec<usize> = (0..data.n()).collect();
        prop_assert_eq!(data.view(all).unwrap().materialize().unwrap(), data);
    }

    #[test]
    fn ols_residuals_are_orthogonal_to_the_design(data in data_strategy(3, 8..40)) {
        let view = data.view_all();
        let model = fit_linear(&view).unwrap();
        prop_assume!(!model.used_ridge_fallback());
        let resid: Vec<f64> = data.target().iter().zip(model.predict(data.features())).map(|(y, p)| y - p).collect();
        let scale: f64 = data.target().iter().map(|y| y * y).sum::<f64>().sqrt().max(1.0);
        prop_assert!(resid.iter().sum::<f64>().abs() < 1e-6 * scale * (data.n() as f64).sqrt());
        for j in 0..data.p() {
            let col = data.features().column(j);
            let dot: f64 = col.iter().zip(&resid).map(|(x, r)| x * r).sum();
            let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(dot.abs() < 1e-6 * norm * scale, "column {j}: {dot}");
        }
    }

    #[test]
    fn tree_training_mse_does_not_increase_with_depth(data in data_strategy(2, 10..60), min_leaf in 1usize..4) {
        let view = data.view_all();
        let mse = |depth| {
            let t = fit_tree(&view, &TreeParams::new(depth, min_leaf).unwrap()).unwrap();
            t.predict(data.features()).iter().zip(data.target()).map(|(p, y)| (p - y).powi(2)).sum::<f64>()
        };
        let errs: Vec<f64> = (1..7).map(mse).collect();
        for w in errs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0), "{errs:?}");
        }
    }

    #[test]
    fn forest_predicts_the_mean_of_its_trees(data in data_strategy(3, 10..40), seed in any::<u64>()) {
        let forest = fit_forest(&data.view_all(), &ForestParams { n_trees: 7, ..Default::default() }, seed).unwrap();
        for row in probe(&data).iter_rows() {
            let mean = forest.trees().iter().map(|t| t.predict_row(row)).sum::<f64>() / 7.0;
            prop_assert_eq!(forest.predict_row(row), mean);
        }
    }

    #[test]
    fn fits_are_reproducible(data in data_strategy(3, 10..40), seed in any::<u64>()) {
        let x = probe(&data);
        for l in learners() {
            let a = l.fit(&data.view_all(), seed).unwrap().predict(&x);
            let b = l.fit(&data.view_all(), seed).unwrap().predict(&x);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn split_d_depends_only_on_seed_and_d(n in 4usize..80, seed in any::<u64>(), frac in 0.3f64..0.8) {
        let short = bootstrap_plan(n, 3, seed).unwrap();
        let long = bootstrap_plan(n, 9, seed).unwrap();
        prop_assert_eq!(&short.splits[..], &long.splits[..3]);
        let short = subsample_plan(n, 2, frac, seed).unwrap();
        let long = subsample_plan(n, 5, frac, seed).unwrap();
        prop_assert_eq!(&short.splits[..], &long.splits[..2]);
    }

    #[test]
    fn t_quantile_monotone_in_p_and_df(p in 0.5001f64..0.9999, dp in 1e-4f64..0.05, df in 1u64..500) {
        let q = t_quantile(p, df).unwrap();
        if p + dp < 1.0 {
            prop_assert!(t_quantile(p + dp, df).unwrap() > q);
        }
        let next = t_quantile(p, df + 1).unwrap();
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(p);
        prop_assert!(next < q);
        prop_assert!(next > z - 1e-12);
    }

    #[test]
    fn corrected_interval_contains_uncorrected(xs in prop::collection::vec(-50.0f64..50.0, 2..30), c in 1e-3f64..2.0, alpha in 0.01f64..0.3) {
        let raw = corrected_mean_ci(&xs, 0.0, alpha).unwrap();
        let cor = corrected_mean_ci(&xs, c, alpha).unwrap();
        prop_assert_eq!(raw.mean, cor.mean);
        prop_assert!(cor.lower <= raw.lower && raw.upper <= cor.upper);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_pd_means_ignore_test_row_order(data in data_strategy(3, 5..30), seed in any::<u64>(), shift in 1usize..29) {
        let model = LearnerSpec::Tree(TreeParams::new(3, 2).unwrap()).fit(&data.view_all(), 0).unwrap();
        let grid = PDGrid::new(1, vec![-2.0, 0.0, 1.5]).unwrap();
        let idx: Vec<usize> = (0..data.n()).collect();
        let mut perm = idx.clone();
        perm.rotate_left(shift % data.n());
        perm.swap(0, (seed % data.n() as u64) as usize);
        let a = model_pd_means(&model, &data.view(idx).unwrap(), &grid);
        let b = model_pd_means(&model, &data.view(perm).unwrap(), &grid);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn learner_means_are_arithmetic_means_of_splits(seed in any::<u64>(), m in 2usize..8, boot in any::<bool>()) {
        let data = sample_dgp(&DGPSpec::nonlinear(), 60, seed).unwrap();
        let plan = if boot { bootstrap_plan(60, m, seed).unwrap() } else { subsample_plan(60, m, 0.632, seed).unwrap() };
        let spec = LearnerSpec::Tree(TreeParams::new(3, 3).unwrap());
        let models = fit_refits(&spec, &data, &plan, seed).unwrap();
        let grid = PDGrid::new(2, vec![0.2, 0.8]).unwrap();
        let curve = learner_pd_from_models(&models, &data, &plan, &grid, 0.05, None).unwrap();
        let per = per_split_pd(&models, &data, &plan, &grid).unwrap();
        for g in 0..2 {
            let mean = per.iter().map(|v| v[g]).sum::<f64>() / m as f64;
            prop_assert_eq!(curve.estimates[g].mean, mean);
        }
        let sampler = ReplacementSampler::marginal(2, seed);
        let pfi = learner_pfi_from_models(&models, &data, &plan, 0, &sampler, 0.05, None).unwrap();
        let per = per_split_pfi(&models, &data, &plan, 0, &sampler).unwrap();
        prop_assert_eq!(pfi.estimate.mean, per.iter().sum::<f64>() / m as f64);
    }

    #[test]
    fn unused_feature_has_zero_pfi_for_every_sampler(data in data_strategy(3, 4..8), seed in any::<u64>(), l in 1usize..6) {
        // x1 is constant, so lm cannot use it either.
        let rows: Vec<Vec<f64>> = (0..data.n()).map(|i| { let mut r = data.features().row(i).to_vec(); r[1] = 4.0; r }).collect();
        let data = dataset(&rows, data.target());
        let models: Vec<Box<dyn Model>> = vec![
            Box::new(FnModel::new("x0 x2", |x: &[f64]| x[0] * x[2] - x[2].sin())),
            LearnerSpec::Lm.fit(&data.view_all(), seed).unwrap(),
        ];
        let samplers = [
            ReplacementSampler::marginal(l, seed),
            ReplacementSampler::conditional(2, l, seed),
            ReplacementSampler::exhaustive(),
        ];
        for model in &models {
            for s in &samplers {
                let est = model_pfi(model.as_ref(), &data.view_all(), 1, s, 0.05).map_err(|e| TestCaseError::fail(format!("{s:?}: {e}")))?;
                prop_assert_eq!(est.estimate.mean, 0.0);
                prop_assert_eq!(est.estimate.variance, 0.0);
            }
        }
    }
}

#[test]
fn coverage_is_reproducible_and_thread_independent() {
    let config = CoverageConfig {
        repetitions: 6,
        reference_runs: 100,
        m: 4,
        seed: 17,
        ..CoverageConfig::new("nonlinear", LearnerSpec::Tree(TreeParams::new(3, 5).unwrap()), 60, pdpfi::resampling::ResampleMode::Subsample)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| coverage_experiment(&config).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(2));
    for cell in &a.cells {
        assert!((0.0..=1.0).contains(&cell.coverage));
    }
}
