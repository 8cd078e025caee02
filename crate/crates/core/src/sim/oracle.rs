//! Ground-truth PD and PFI of the regression function of a DGP.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dgp::{DGPSpec, DgpKind};
use crate::error::{Error, Result};
use crate::inference::sample_variance;
use crate::seed;

/// An oracle value with its Monte Carlo standard error (0 for closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    pub std_error: f64,
}

impl OracleValue {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        Self {
            value: samples.iter().sum::<f64>() / n,
            std_error: (sample_variance(samples) / n).sqrt(),
        }
    }
}

// Uniform moments: E sqrt(1 - U) = 2/3, E U^2 = 1/3.
const E_SQRT: f64 = 2.0 / 3.0;
const E_SQ_OVER_100: f64 = 1.0 / 300.0;

/// Closed-form PD of a built-in DGP, `None` for custom ones.
pub fn dgp_pd_closed(spec: &DGPSpec, feature: usize, x: f64) -> Option<f64> {
    match (spec.kind(), feature) {
        (DgpKind::Linear, 0) => Some(x - 0.5),
        (DgpKind::Linear, 1) => Some(0.5 - x),
        (DgpKind::Nonlinear, 0) => Some(x - E_SQRT + 0.25 + E_SQ_OVER_100),
        (DgpKind::Nonlinear, 1) => Some(0.5 - (1.0 - x).sqrt() + 0.25 + E_SQ_OVER_100),
        (DgpKind::Nonlinear, 2) => Some(0.5 - E_SQRT + 0.5 * x + E_SQ_OVER_100),
        (DgpKind::Nonlinear, 3) => Some(0.5 - E_SQRT + 0.5 * x + x * x / 100.0),
        _ => None,
    }
}

/// Closed-form marginal PFI `E[(f(X) - f(X~_S, X_C))^2]` of a built-in DGP.
pub fn dgp_pfi_closed(spec: &DGPSpec, feature: usize) -> Option<f64> {
    // Var(U) = 1/12, so E[(U - U~)^2] = 1/6. For x4 the cross term
    // E[X3] E[(U - U~)(U^2 - U~^2)] / 50 = 1/600 and E[(U^2 - U~^2)^2] / 10^4
    // = 2 Var(U^2) / 10^4 = 1/56250.
    match (spec.kind(), feature) {
        (DgpKind::Linear, 0 | 1) => Some(1.0 / 6.0),
        (DgpKind::Nonlinear, 0) => Some(1.0 / 6.0),
        (DgpKind::Nonlinear, 1) => Some(1.0 / 9.0),
        (DgpKind::Nonlinear, 2) => Some(1.0 / 18.0),
        (DgpKind::Nonlinear, 3) => Some(1.0 / 18.0 + 1.0 / 600.0 + 1.0 / 56250.0),
        _ => None,
    }
}

fn check_mc(mc_n: usize) -> Result<()> {
    if mc_n < 2 {
        return Err(Error::InvalidParams("mc_n must be >= 2".into()));
    }
    Ok(())
}

/// Monte Carlo PD: `mean_i f(x, X_C^(i))` over `mc_n` draws shared by all
/// grid points.
pub fn dgp_pd_mc(spec: &DGPSpec, feature: usize, grid: &[f64], mc_n: usize, seed: u64) -> Result<Vec<OracleValue>> {
    spec.check_feature(feature)?;
    check_mc(mc_n)?;
    let p = spec.p();
    let mut rng = seed::rng(seed);
    let draws: Vec<f64> = (0..mc_n * p).map(|_| rng.random()).collect();
    Ok(grid
        .iter()
        .map(|&x| {
            let vals: Vec<f64> = draws
                .chunks(p)
                .map(|row| {
                    let mut r = row.to_vec();
                    r[feature] = x;
                    spec.f(&r)
                })
                .collect();
            OracleValue::from_samples(&vals)
        })
        .collect())
}

/// Monte Carlo marginal PFI with an independent replacement draw per row.
pub fn dgp_pfi_mc(spec: &DGPSpec, feature: usize, mc_n: usize, seed: u64) -> Result<OracleValue> {
    spec.check_feature(feature)?;
    check_mc(mc_n)?;
    let p = spec.p();
    let mut rng = seed::rng(seed);
    let mut row = vec![0.0; p];
    let vals: Vec<f64> = (0..mc_n)
        .map(|_| {
            row.iter_mut().for_each(|v| *v = rng.random());
            let fx = spec.f(&row);
            row[feature] = rng.random();
            (fx - spec.f(&row)).powi(2)
        })
        .collect();
    Ok(OracleValue::from_samples(&vals))
}

/// DGP-PD at each grid point: closed form when known, Monte Carlo otherwise.
pub fn dgp_pd(spec: &DGPSpec, feature: usize, grid: &[f64], mc_n: usize, seed: u64) -> Result<Vec<OracleValue>> {
    spec.check_feature(feature)?;
    match grid
        .iter()
        .map(|&x| dgp_pd_closed(spec, feature, x).map(OracleValue::exact))
        .collect::<Option<Vec<_>>>()
    {
        Some(v) => Ok(v),
        None => dgp_pd_mc(spec, feature, grid, mc_n, seed),
    }
}

/// DGP-PFI under squared loss: closed form when known, Monte Carlo otherwise.
pub fn dgp_pfi(spec: &DGPSpec, feature: usize, mc_n: usize, seed: u64) -> Result<OracleValue> {
    spec.check_feature(feature)?;
    match dgp_pfi_closed(spec, feature) {
        Some(v) => Ok(OracleValue::exact(v)),
        None => dgp_pfi_mc(spec, feature, mc_n, seed),
    }
}
