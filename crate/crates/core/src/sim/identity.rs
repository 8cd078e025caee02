//! Conditional PFI on a finite joint distribution, computed two ways.
//!
//! For squared loss and a replacement `X~_S` drawn from `X_S | X_C`,
//!
//! `cPFI_f - cPFI_fhat = 2 E_{X_C}[Var_{X_S|X_C}(f) - Cov_{X_S|X_C}(f, fhat)]`.
//!
//! [`conditional_pfi`] evaluates the left-hand side by enumerating every
//! loss difference; [`conditional_pfi_gap_moments`] evaluates the right-hand
//! side from conditional moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint law of `(X_S, X_C, eps)` on finite supports, with `eps = ±noise_sd`
/// equally likely and independent of the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    pub c_values: Vec<f64>,
    pub c_probs: Vec<f64>,
    pub s_values: Vec<f64>,
    /// `s_given_c[i][j] = P(X_S = s_values[j] | X_C = c_values[i])`
    pub s_given_c: Vec<Vec<f64>>,
    pub noise_sd: f64,
}

fn check_probs(p: &[f64], what: &str) -> Result<()> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("{what} must be non-negative and sum to 1")));
    }
    Ok(())
}

impl DiscreteJoint {
    pub fn new(
        c_values: Vec<f64>,
        c_probs: Vec<f64>,
        s_values: Vec<f64>,
        s_given_c: Vec<Vec<f64>>,
        noise_sd: f64,
    ) -> Result<Self> {
        if c_values.is_empty() || s_values.is_empty() {
            return Err(Error::InvalidParams("supports must be non-empty".into()));
        }
        if c_values.len() != c_probs.len() || s_given_c.len() != c_values.len() {
            return Err(Error::LengthMismatch { left: c_values.len(), right: c_probs.len().min(s_given_c.len()) });
        }
        check_probs(&c_probs, "P(X_C)")?;
        for row in &s_given_c {
            if row.len() != s_values.len() {
                return Err(Error::LengthMismatch { left: row.len(), right: s_values.len() });
            }
            check_probs(row, "P(X_S | X_C)")?;
        }
        Ok(Self { c_values, c_probs, s_values, s_given_c, noise_sd })
    }

    /// Midpoint grids on `[0, 1]` with `X_C` uniform and
    /// `P(s | c) ∝ exp(-(s - c)^2 / (2 bandwidth^2))`.
    pub fn discretized(c_points: usize, s_points: usize, bandwidth: f64, noise_sd: f64) -> Result<Self> {
        if c_points == 0 || s_points == 0 || !(bandwidth > 0.0) {
            return Err(Error::InvalidParams("need positive grid sizes and bandwidth".into()));
        }
        let mid = |k: usize, n: usize| (k as f64 + 0.5) / n as f64;
        let c_values: Vec<f64> = (0..c_points).map(|i| mid(i, c_points)).collect();
        let s_values: Vec<f64> = (0..s_points).map(|j| mid(j, s_points)).collect();
        let s_given_c = c_values
            .iter()
            .map(|&c| {
                let w: Vec<f64> = s_values.iter().map(|&s| (-(s - c).powi(2) / (2.0 * bandwidth * bandwidth)).exp()).collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|v| v / total).collect()
            })
            .collect();
        Self::new(c_values, vec![1.0 / c_points as f64; c_points], s_values, s_given_c, noise_sd)
    }
}

/// Conditional PFI of `model` for target `Y = f(X_S, X_C) + eps` by full
/// enumeration of `(x_s, x_c, eps, x~_s)`:
/// `E[(Y - model(X~_S, X_C))^2 - (Y - model(X_S, X_C))^2]`.
pub fn conditional_pfi(
    joint: &DiscreteJoint,
    f: impl Fn(f64, f64) -> f64,
    model: impl Fn(f64, f64) -> f64,
) -> f64 {
    let noise = [joint.noise_sd, -joint.noise_sd];
    let mut total = 0.0;
    for (ci, &c) in joint.c_values.iter().enumerate() {
        let q = &joint.s_given_c[ci];
        let mut inner = 0.0;
        for (si, &s) in joint.s_values.iter().enumerate() {
            for (ti, &t) in joint.s_values.iter().enumerate() {
                let w = q[si] * q[ti];
                if w == 0.0 {
                    continue;
                }
                for &e in &noise {
                    let y = f(s, c) + e;
                    inner += 0.5 * w * ((y - model(t, c)).powi(2) - (y - model(s, c)).powi(2));
                }
            }
        }
        total += joint.c_probs[ci] * inner;
    }
    total
}

/// `2 E_{X_C}[Var_{X_S|X_C}(f) - Cov_{X_S|X_C}(f, fhat)]` from conditional
/// moments.
pub fn conditional_pfi_gap_moments(
    joint: &DiscreteJoint,
    f: impl Fn(f64, f64) -> f64,
    fhat: impl Fn(f64, f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (ci, &c) in joint.c_values.iter().enumerate() {
        let q = &joint.s_given_c[ci];
        let (mut ef, mut eg, mut eff, mut efg) = (0.0, 0.0, 0.0, 0.0);
        for (si, &s) in joint.s_values.iter().enumerate() {
            let (a, b) = (f(s, c), fhat(s, c));
            ef += q[si] * a;
            eg += q[si] * b;
            eff += q[si] * a * a;
            efg += q[si] * a * b;
        }
        let var_f = eff - ef * ef;
        let cov = efg - ef * eg;
        total += joint.c_probs[ci] * (var_f - cov);
    }
    2.0 * total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: f64, c: f64) -> f64 {
        s - (1.0 - c).sqrt() + s * c + (s / 10.0).powi(2)
    }

    fn fhat(s: f64, c: f64) -> f64 {
        0.7 * s + 0.4 * c * c + 0.2 * (3.0 * s).sin()
    }

    #[test]
    fn both_routes_agree() {
        let joint = DiscreteJoint::discretized(15, 21, 0.2, 1.0).unwrap();
        let lhs = conditional_pfi(&joint, f, f) - conditional_pfi(&joint, f, fhat);
        let rhs = conditional_pfi_gap_moments(&joint, f, fhat);
        assert!(lhs.abs() > 1e-3);
        assert!(((lhs - rhs) / rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn perfect_model_has_zero_gap() {
        let joint = DiscreteJoint::discretized(5, 7, 0.3, 0.5).unwrap();
        assert!(conditional_pfi_gap_moments(&joint, f, f).abs() < 1e-15);
    }

    #[test]
    fn degenerate_conditional_gives_zero_pfi() {
        // X_S fully determined by X_C: replacing it changes nothing.
        let c = vec![0.2, 0.8];
        let joint = DiscreteJoint::new(c.clone(), vec![0.5, 0.5], c, vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        assert_eq!(conditional_pfi(&joint, f, fhat), 0.0);
    }

    #[test]
    fn invalid_probabilities() {
        assert!(DiscreteJoint::new(vec![0.0], vec![0.9], vec![0.0], vec![vec![1.0]], 1.0).is_err());
        assert!(DiscreteJoint::new(vec![0.0], vec![1.0], vec![0.0, 1.0], vec![vec![1.0]], 1.0).is_err());
        assert!(DiscreteJoint::discretized(0, 3, 0.1, 1.0).is_err());
    }
}
