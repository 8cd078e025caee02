//! Bias/variance decompositions of model-PD and model-PFI against the
//! DGP ground truth.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coverage::{fresh_fit_values, CoverageConfig, MIN_REFERENCE_RUNS};
use super::dgp::DGPSpec;
use super::oracle::{dgp_pd, dgp_pfi, OracleValue};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::sample_variance;
use crate::learners::{Learner, Model};
use crate::resampling::{train_size, ResampleMode};
use crate::seed::{self, stream};

const ORACLE_MC: usize = 200_000;

/// `mse` is estimated directly; `bias_sq` from the mean estimate and
/// `variance` as the unbiased across-fit variance, so `mse ≈ bias_sq +
/// variance` holds only up to Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseDecomposition {
    pub feature: usize,
    pub grid_x: Option<f64>,
    pub truth: f64,
    pub mean: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    pub mse_se: f64,
}

impl MseDecomposition {
    fn from_estimates(feature: usize, grid_x: Option<f64>, truth: f64, est: &[f64]) -> Self {
        let r = est.len() as f64;
        let mean = est.iter().sum::<f64>() / r;
        let sq: Vec<f64> = est.iter().map(|e| (e - truth).powi(2)).collect();
        Self {
            feature,
            grid_x,
            truth,
            mean,
            bias_sq: (mean - truth).powi(2),
            variance: sample_variance(est),
            mse: sq.iter().sum::<f64>() / r,
            mse_se: (sample_variance(&sq) / r).sqrt(),
        }
    }

    /// `mse - bias_sq - variance`.
    pub fn residual(&self) -> f64 {
        self.mse - self.bias_sq - self.variance
    }
}

fn check_fresh(config: &CoverageConfig) -> Result<()> {
    if config.resampling != ResampleMode::Fresh {
        return Err(Error::InvalidConfig("decompositions need resampling = fresh".into()));
    }
    if config.reference_runs < MIN_REFERENCE_RUNS {
        return Err(Error::InvalidConfig(format!("reference_runs must be >= {MIN_REFERENCE_RUNS}")));
    }
    Ok(())
}

/// Squared bias, variance and MSE of the model-PD of `learner` against the
/// DGP-PD, over `config.reference_runs` fresh fits, for every feature and
/// grid point of the config.
pub fn pd_mse_decomposition<L: Learner + ?Sized>(
    spec: &DGPSpec,
    learner: &L,
    config: &CoverageConfig,
) -> Result<Vec<MseDecomposition>> {
    check_fresh(config)?;
    let fits = fresh_fit_values(spec, learner, config, config.reference_runs, stream::REPETITION)?;
    let mut out = Vec::new();
    for j in 0..spec.p() {
        let truth = dgp_pd(spec, j, &config.grid, ORACLE_MC, seed::derive(config.seed, &[stream::REFERENCE, j as u64]))?;
        for (g, &x) in config.grid.iter().enumerate() {
            let est: Vec<f64> = fits.iter().map(|f| f.pd[j][g]).collect();
            out.push(MseDecomposition::from_estimates(j, Some(x), truth[g].value, &est));
        }
    }
    Ok(out)
}

/// The scalar analogue of [`pd_mse_decomposition`] for model-PFI against
/// the DGP-PFI.
pub fn pfi_mse_decomposition<L: Learner + ?Sized>(
    spec: &DGPSpec,
    learner: &L,
    config: &CoverageConfig,
) -> Result<Vec<MseDecomposition>> {
    check_fresh(config)?;
    let fits = fresh_fit_values(spec, learner, config, config.reference_runs, stream::REPETITION)?;
    (0..spec.p())
        .map(|j| {
            let truth = dgp_pfi(spec, j, ORACLE_MC, seed::derive(config.seed, &[stream::REFERENCE, j as u64]))?;
            let est: Vec<f64> = fits.iter().map(|f| f.pfi[j]).collect();
            Ok(MseDecomposition::from_estimates(j, None, truth.value, &est))
        })
        .collect()
}

/// Fit `runs` models of `learner`, each on its own fresh training sample of
/// `floor(train_fraction * n)` rows.
pub fn fit_family<L: Learner + ?Sized>(
    spec: &DGPSpec,
    learner: &L,
    n: usize,
    train_fraction: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<Box<dyn Model>>> {
    let k = train_size(n, train_fraction)?;
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let s = seed::derive(seed, &[stream::FIT, r as u64]);
            let data: Dataset = super::dgp::sample_dgp(spec, k, seed::mix(s, 0))?;
            learner.fit(&data.view_all(), seed::mix(s, 1)).map_err(|e| e.at_split(r))
        })
        .collect()
}

/// Terms of `PFI_fhat - PFI_f = PLB - MB^2 + VI` for squared loss, with the
/// expectation over models taken over an empirical family of fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfiBiasDecomposition {
    /// `E[(f(X) - E_F fhat(X~))^2 - (f(X) - f(X~))^2]`
    pub permutation_loss_bias: OracleValue,
    /// `E[(f(X) - E_F fhat(X))^2]`
    pub model_bias_sq: OracleValue,
    /// `E[Var_F fhat(X~)] - E[Var_F fhat(X)]`
    pub variance_inflation: OracleValue,
    /// `PLB - MB^2 + VI`, averaged per draw.
    pub term_sum: OracleValue,
    /// `PFI_fhat - PFI_f` from simulated targets, on independent draws.
    pub direct: OracleValue,
}

fn summarize(values: &[f64]) -> OracleValue {
    OracleValue {
        value: values.iter().sum::<f64>() / values.len() as f64,
        std_error: (sample_variance(values) / values.len() as f64).sqrt(),
    }
}

fn mean_and_pop_var(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k)
}

/// Monte Carlo estimate of the three bias terms of the marginal PFI of
/// `feature` for the model family `family`, plus a direct estimate of the
/// PFI difference from simulated noisy targets.
pub fn pfi_bias_decomposition(
    spec: &DGPSpec,
    family: &[Box<dyn Model>],
    feature: usize,
    mc_n: usize,
    seed: u64,
) -> Result<PfiBiasDecomposition> {
    if family.is_empty() {
        return Err(Error::InvalidParams("model family is empty".into()));
    }
    if mc_n < 2 {
        return Err(Error::InvalidParams("mc_n must be >= 2".into()));
    }
    if feature >= spec.p() {
        return Err(Error::InvalidFeature { index: feature, p: spec.p() });
    }
    let p = spec.p();
    let draw = |rng: &mut seed::Rng| {
        let x: Vec<f64> = (0..p).map(|_| rng.random()).collect();
        let mut xt = x.clone();
        xt[feature] = rng.random();
        (x, xt)
    };

    let mut rng = seed::rng(seed::mix(seed, 0));
    let mut plb = Vec::with_capacity(mc_n);
    let mut mb = Vec::with_capacity(mc_n);
    let mut vi = Vec::with_capacity(mc_n);
    let mut sum = Vec::with_capacity(mc_n);
    let mut at_x = vec![0.0; family.len()];
    let mut at_xt = vec![0.0; family.len()];
    for _ in 0..mc_n {
        let (x, xt) = draw(&mut rng);
        let (fx, fxt) = (spec.f(&x), spec.f(&xt));
        for (k, m) in family.iter().enumerate() {
            at_x[k] = m.predict_row(&x);
            at_xt[k] = m.predict_row(&xt);
        }
        let (mean_x, var_x) = mean_and_pop_var(&at_x);
        let (mean_xt, var_xt) = mean_and_pop_var(&at_xt);
        let a = (fx - mean_xt).powi(2) - (fx - fxt).powi(2);
        let b = (fx - mean_x).powi(2);
        let c = var_xt - var_x;
        plb.push(a);
        mb.push(b);
        vi.push(c);
        sum.push(a - b + c);
    }

    let mut rng = seed::rng(seed::mix(seed, 1));
    let direct: Vec<f64> = (0..mc_n)
        .map(|_| {
            let (x, xt) = draw(&mut rng);
            let eps: f64 = rng.sample(StandardNormal);
            let y = spec.f(&x) + spec.noise_sigma() * eps;
            let model_term = family
                .iter()
                .map(|m| (y - m.predict_row(&xt)).powi(2) - (y - m.predict_row(&x)).powi(2))
                .sum::<f64>()
                / family.len() as f64;
            model_term - ((y - spec.f(&xt)).powi(2) - (y - spec.f(&x)).powi(2))
        })
        .collect();

    Ok(PfiBiasDecomposition {
        permutation_loss_bias: summarize(&plb),
        model_bias_sq: summarize(&mb),
        variance_inflation: summarize(&vi),
        term_sum: summarize(&sum),
        direct: summarize(&direct),
    })
}
