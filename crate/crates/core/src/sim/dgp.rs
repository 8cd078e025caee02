use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpKind {
    Linear,
    Nonlinear,
    Custom,
}

type RegressionFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A data generating process `y = f(x) + eps` with `x` uniform on `[0, 1]^p`
/// and `eps ~ N(0, noise_sigma^2)`.
#[derive(Clone)]
pub struct DGPSpec {
    name: String,
    kind: DgpKind,
    p: usize,
    noise_sigma: f64,
    f: RegressionFn,
}

impl fmt::Debug for DGPSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DGPSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("noise_sigma", &self.noise_sigma)
            .finish_non_exhaustive()
    }
}

fn linear_f(x: &[f64]) -> f64 {
    x[0] - x[1]
}

fn nonlinear_f(x: &[f64]) -> f64 {
    x[0] - (1.0 - x[1]).sqrt() + x[2] * x[3] + (x[3] / 10.0).powi(2)
}

impl DGPSpec {
    /// `f(x) = x1 - x2`, two features, unit noise.
    pub fn linear() -> Self {
        Self { name: "linear".into(), kind: DgpKind::Linear, p: 2, noise_sigma: 1.0, f: Arc::new(linear_f) }
    }

    /// `f(x) = x1 - sqrt(1 - x2) + x3 x4 + (x4 / 10)^2`, four features, unit noise.
    pub fn nonlinear() -> Self {
        Self {
            name: "nonlinear".into(),
            kind: DgpKind::Nonlinear,
            p: 4,
            noise_sigma: 1.0,
            f: Arc::new(nonlinear_f),
        }
    }

    pub fn custom(
        name: impl Into<String>,
        p: usize,
        noise_sigma: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParams("a DGP needs at least one feature".into()));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("noise sd {noise_sigma} must be finite and >= 0")));
        }
        Ok(Self { name: name.into(), kind: DgpKind::Custom, p, noise_sigma, f: Arc::new(f) })
    }

    /// Built-in DGP by name (`linear` or `nonlinear`, `non-linear` accepted).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(Self::linear()),
            "nonlinear" | "non-linear" => Ok(Self::nonlinear()),
            other => Err(Error::InvalidConfig(format!("unknown dgp `{other}`"))),
        }
    }

    pub fn with_noise(mut self, noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("noise sd {noise_sigma} must be finite and >= 0")));
        }
        self.noise_sigma = noise_sigma;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DgpKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.p).map(|j| format!("x{j}")).collect()
    }

    pub(crate) fn check_feature(&self, feature: usize) -> Result<()> {
        if feature < self.p {
            Ok(())
        } else {
            Err(Error::InvalidFeature { index: feature, p: self.p })
        }
    }
}

/// `n` i.i.d. rows with features `x1..xp` and target `y`.
pub fn sample_dgp(spec: &DGPSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be >= 1".into()));
    }
    let p = spec.p;
    let mut rng = seed::rng(seed);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = x.len();
        x.extend((0..p).map(|_| rng.random::<f64>()));
        let eps: f64 = rng.sample(StandardNormal);
        y.push(spec.f(&x[start..]) + spec.noise_sigma * eps);
    }
    Dataset::new(Matrix::new(n, p, x)?, spec.feature_names(), y, "y")
}
