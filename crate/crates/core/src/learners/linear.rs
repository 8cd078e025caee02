use nalgebra::{DMatrix, DVector};

use super::Model;
use crate::data::IndexView;
use crate::error::{Error, Result};

/// Penalty used when the design matrix is rank deficient.
pub const RIDGE_PENALTY: f64 = 1e-8;

/// Ordinary least squares fit with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    intercept: f64,
    slopes: Vec<f64>,
    ridge_fallback: bool,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// True when the design was rank deficient and a ridge solve was used.
    pub fn used_ridge_fallback(&self) -> bool {
        self.ridge_fallback
    }
}

impl Model for LinearModel {
    #[inline]
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.slopes.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn descriptor(&self) -> String {
        let coef: Vec<String> = self.slopes.iter().map(|b| format!("{b:?}")).collect();
        format!(
            "lm intercept={:?} slopes=[{}]{}",
            self.intercept,
            coef.join(","),
            if self.ridge_fallback { " ridge_fallback" } else { "" }
        )
    }
}

/// Least squares via Householder QR. A rank-deficient design falls back to
/// ridge regression with [`RIDGE_PENALTY`].
pub fn fit_linear(train: &IndexView<'_>) -> Result<LinearModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let k = train.len();
    let p = train.base().p();
    let x = DMatrix::from_fn(k, p + 1, |i, j| if j == 0 { 1.0 } else { train.row(i)[j - 1] });
    let y = DVector::from_iterator(k, (0..k).map(|i| train.target_at(i)));

    let beta = match solve_qr(&x, &y) {
        Some(b) => (b, false),
        None => (solve_ridge(&x, &y).ok_or(Error::DegenerateDesign)?, true),
    };
    let (beta, ridge_fallback) = beta;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::DegenerateDesign);
    }
    Ok(LinearModel {
        intercept: beta[0],
        slopes: beta.iter().skip(1).copied().collect(),
        ridge_fallback,
    })
}

fn solve_qr(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let cols = x.ncols();
    if x.nrows() < cols {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = diag_max * 1e-10 * (x.nrows() as f64);
    if diag_max == 0.0 || (0..cols).any(|i| r[(i, i)].abs() <= tol) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

fn solve_ridge(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let cols = x.ncols();
    let mut gram = x.transpose() * x;
    for i in 0..cols {
        gram[(i, i)] += RIDGE_PENALTY;
    }
    let rhs = x.transpose() * y;
    gram.cholesky().map(|c| c.solve(&rhs))
}
