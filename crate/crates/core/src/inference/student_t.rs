use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

fn standard(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("df validated by caller")
}

/// `P(T > t)` for `t >= 0`.
fn upper_tail(t: f64, df: f64) -> f64 {
    0.5 * beta_reg(0.5 * df, 0.5, df / (df + t * t))
}

pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t >= 0.0 {
        1.0 - upper_tail(t, df)
    } else {
        upper_tail(-t, df)
    }
}

pub fn t_pdf(t: f64, df: f64) -> f64 {
    standard(df).pdf(t)
}

/// Quantile of Student's t distribution with `df` degrees of freedom.
///
/// The library inverse loses precision for large `df` (it works through
/// `1 - I^{-1}`), so the result is polished with Newton steps on the upper
/// tail.
pub fn t_quantile(p: f64, df: u64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if df == 0 {
        return Err(Error::InvalidParams("degrees of freedom must be >= 1".into()));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let nu = df as f64;
    let tail = p.min(1.0 - p);
    let mut q = standard(nu).inverse_cdf(1.0 - tail);
    for _ in 0..3 {
        let step = (upper_tail(q, nu) - tail) / t_pdf(q, nu);
        if !step.is_finite() {
            break;
        }
        q += step;
    }
    Ok(if p > 0.5 { q } else { -q })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle independent of the incomplete beta: normalize the density
    /// kernel `(1 + t^2/df)^(-(df+1)/2)` by Simpson quadrature on t = u/(1-u),
    /// then bisect the numerically integrated CDF.
    fn quadrature_quantile(p: f64, df: f64) -> f64 {
        let kernel = |t: f64| (1.0 + t * t / df).powf(-(df + 1.0) / 2.0);
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let mapped = |u: f64| {
            if u >= 1.0 {
                0.0
            } else {
                let t = u / (1.0 - u);
                kernel(t) / ((1.0 - u) * (1.0 - u))
            }
        };
        let half_mass = simpson(&mapped, 0.0, 1.0, 200_000);
        let cdf = |q: f64| 0.5 + simpson(&kernel, 0.0, q, 20_000) / (2.0 * half_mass);
        let (mut lo, mut hi) = (0.0, 20.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn median_is_zero() {
        for df in [1, 2, 14, 1000] {
            assert_eq!(t_quantile(0.5, df).unwrap(), 0.0);
        }
    }

    #[test]
    fn df14_matches_quadrature_oracle() {
        let q = t_quantile(0.975, 14).unwrap();
        let oracle = quadrature_quantile(0.975, 14.0);
        assert!((q - oracle).abs() < 1e-8, "{q} vs {oracle}");
        // Frozen from the oracle above.
        assert!((q - 2.144_786_687_916_927).abs() < 1e-8);
    }

    #[test]
    fn df1_is_cauchy() {
        for p in [0.6, 0.9, 0.975, 0.999] {
            let exact = (std::f64::consts::PI * (p - 0.5)).tan();
            assert!((t_quantile(p, 1).unwrap() - exact).abs() < 1e-9 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn df2_closed_form() {
        // q = (2p - 1) * sqrt(2 / (4 p (1 - p)))
        for p in [0.55f64, 0.8, 0.975, 0.9999] {
            let exact = (2.0 * p - 1.0) * (2.0 / (4.0 * p * (1.0 - p))).sqrt();
            assert!((t_quantile(p, 2).unwrap() - exact).abs() < 1e-9 * exact.max(1.0));
        }
    }

    #[test]
    fn large_df_approaches_normal() {
        // Normal quantile from bisection on a Simpson-integrated density.
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let cdf = |q: f64| {
            let n = 20_000;
            let h = q / n as f64;
            let mut s = phi(0.0) + phi(q);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(i as f64 * h);
            }
            0.5 + s * h / 3.0
        };
        let (mut lo, mut hi) = (0.0, 5.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = 0.5 * (lo + hi);
        assert!((z - 1.959_963_984_540_054).abs() < 1e-9);
        let q = t_quantile(0.975, 1_000_000).unwrap();
        assert!((q - z).abs() < 1e-4);
        assert!(q > z);
    }

    #[test]
    fn symmetric_and_monotone() {
        for df in [1, 3, 9, 29, 500] {
            let mut last = f64::NEG_INFINITY;
            for k in 1..40 {
                let p = k as f64 / 40.0;
                let q = t_quantile(p, df).unwrap();
                assert!(q > last);
                assert!((q + t_quantile(1.0 - p, df).unwrap()).abs() < 1e-10);
                assert!((t_cdf(q, df as f64) - p).abs() < 1e-12);
                last = q;
            }
        }
        let mut last = f64::INFINITY;
        for df in [1, 2, 5, 10, 30, 100, 10_000] {
            let q = t_quantile(0.975, df).unwrap();
            assert!(q < last);
            last = q;
        }
    }

    #[test]
    fn invalid_probability() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(t_quantile(p, 5), Err(Error::InvalidProbability(_))));
        }
        assert!(t_quantile(0.9, 0).is_err());
    }
}
