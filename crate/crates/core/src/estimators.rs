//! Sample-mean and importance-sampling estimators of `E_f H(X)` driven by
//! IID, QS, or LQS draws.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::sampling::{sample, Method, RngStream};
use crate::stats;
use crate::theory::Scheme;

type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Estimate `mu = E_f H(X)` by drawing from a proposal `g` and averaging
/// the importance function `H(x) f(x) / g(x)`.
#[derive(Clone)]
pub struct ImportanceProblem {
    pub name: String,
    pub target: Distribution,
    pub integrand: Integrand,
    pub proposal: Distribution,
    pub true_value: Option<f64>,
}

impl fmt::Debug for ImportanceProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImportanceProblem")
            .field("name", &self.name)
            .field("target", &self.target)
            .field("proposal", &self.proposal)
            .field("true_value", &self.true_value)
            .finish_non_exhaustive()
    }
}

/// `E_{Beta(2,2)}[X ln X] = -7/24`.
pub const EXAMPLE_A_TRUE_VALUE: f64 = -7.0 / 24.0;
/// `E_{Gamma(2, rate 5)}[exp(-X^2)]`, by quadrature.
pub const EXAMPLE_B_TRUE_VALUE: f64 = 0.823_607_757_013_621;

impl ImportanceProblem {
    pub fn new(
        name: impl Into<String>,
        target: Distribution,
        integrand: impl Fn(f64) -> f64 + Send + Sync + 'static,
        proposal: Distribution,
    ) -> Self {
        Self {
            name: name.into(),
            target,
            integrand: Arc::new(integrand),
            proposal,
            true_value: None,
        }
    }

    pub fn with_true_value(mut self, mu: f64) -> Self {
        self.true_value = Some(mu);
        self
    }

    /// `H(x) = x ln x` under `f = Beta(2, 2)`, proposal `g = Beta(3, 2)`.
    pub fn example_a() -> Self {
        Self::new(
            "example_a",
            Distribution::Beta { a: 2.0, b: 2.0 },
            |x| if x > 0.0 { x * x.ln() } else { 0.0 },
            Distribution::Beta { a: 3.0, b: 2.0 },
        )
        .with_true_value(EXAMPLE_A_TRUE_VALUE)
    }

    /// `H(x) = exp(-x^2)` under `f = Gamma(2, rate 5)`, proposal
    /// `g = Gamma(2, rate 6)`.
    pub fn example_b() -> Self {
        Self::new(
            "example_b",
            Distribution::Gamma {
                shape: 2.0,
                rate: 5.0,
            },
            |x| (-x * x).exp(),
            Distribution::Gamma {
                shape: 2.0,
                rate: 6.0,
            },
        )
        .with_true_value(EXAMPLE_B_TRUE_VALUE)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "a" | "example_a" => Ok(Self::example_a()),
            "b" | "example_b" => Ok(Self::example_b()),
            other => Err(Error::InvalidConfig(format!(
                "unknown importance example `{other}`"
            ))),
        }
    }

    /// The importance function `H(x) f(x) / g(x)` at `x`.
    pub fn weight(&self, x: f64) -> Result<f64> {
        importance_weight(x, self)
    }
}

/// Arithmetic mean of `h` over `values`.
pub fn mean_estimate(values: &[f64], h: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(values.iter().map(|&x| h(x)).sum::<f64>() / values.len() as f64)
}

/// `H(x) f(x) / g(x)` from direct density evaluations, taken through log
/// densities so a tiny `g` does not overflow the ratio.
pub fn importance_weight(x: f64, prob: &ImportanceProblem) -> Result<f64> {
    let h = (prob.integrand)(x);
    if h == 0.0 {
        return Ok(0.0);
    }
    let ln_f = prob.target.ln_pdf(x);
    if ln_f == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let ln_g = prob.proposal.ln_pdf(x);
    if ln_g == f64::NEG_INFINITY {
        return Err(Error::ZeroProposalDensity { x });
    }
    Ok(h * (ln_f - ln_g).exp())
}

/// One importance-sampling estimate from a size-`m` batch drawn from the
/// proposal by `method`.
pub fn importance_estimate(
    prob: &ImportanceProblem,
    m: usize,
    method: &Method,
    rng: &mut RngStream,
) -> Result<f64> {
    let batch = sample(&prob.proposal, method, m, rng)?;
    let mut total = 0.0;
    for &x in &batch.values {
        total += importance_weight(x, prob)?;
    }
    Ok(total / m as f64)
}

/// First-order Taylor approximation to the variance of the sample-mean
/// estimator of `E G(U)`, given `G'(1/2)`: `G'^2 / (12 m)` for IID and
/// `G'^2 / (12 m^3)` for QS.
pub fn taylor_variance_approx(g_prime_half: f64, m: usize, scheme: Scheme) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let mf = m as f64;
    let slope2 = g_prime_half * g_prime_half;
    Ok(match scheme {
        Scheme::Iid => slope2 / (12.0 * mf),
        Scheme::Qs => slope2 / (12.0 * mf.powi(3)),
    })
}

/// Replicate-level estimates with their spread and, when the true value is
/// known, the root-mean-squared error.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub method: String,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub mean: f64,
    /// Standard deviation of the replicate estimates.
    pub std_err: f64,
    pub rmse: Option<f64>,
    pub true_value: Option<f64>,
    #[serde(skip)]
    pub estimates: Vec<f64>,
}

impl EstimateSummary {
    pub fn from_estimates(
        method: &Method,
        m: usize,
        seed: u64,
        estimates: Vec<f64>,
        true_value: Option<f64>,
    ) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::EmptySample);
        }
        let mean = stats::mean(&estimates);
        let std_err = stats::std_dev(&estimates);
        let rmse = true_value.map(|mu| {
            (estimates.iter().map(|e| (e - mu).powi(2)).sum::<f64>() / estimates.len() as f64)
                .sqrt()
        });
        Ok(Self {
            method: method.label(),
            m,
            replicates: estimates.len(),
            seed,
            mean,
            std_err,
            rmse,
            true_value,
            estimates,
        })
    }

    /// Standard error of `mean` itself.
    pub fn mean_std_err(&self) -> f64 {
        self.std_err / (self.replicates as f64).sqrt()
    }
}

/// Runs `replicates` independent importance-sampling estimates; replicate
/// `r` uses stream `(seed, r)`, so the result does not depend on how the
/// work is scheduled across threads.
pub fn replicate_importance(
    prob: &ImportanceProblem,
    m: usize,
    method: &Method,
    seed: u64,
    replicates: usize,
) -> Result<EstimateSummary> {
    let estimates = (0..replicates as u64)
        .into_par_iter()
        .map(|r| importance_estimate(prob, m, method, &mut RngStream::new(seed, r)))
        .collect::<Result<Vec<_>>>()?;
    EstimateSummary::from_estimates(method, m, seed, estimates, prob.true_value)
}
