//! Closed-form moment, order-statistic, and spacing results for the uniform
//! draws behind IID, QS, and LQS samples.
//!
//! Every function here is pure. They serve both as CLI output and as the
//! reference values the Monte-Carlo checks are scored against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::LayerSpec;
use crate::special::beta_inc;

/// The two sampling schemes with closed-form order-statistic theory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Iid,
    Qs,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Iid => "iid",
            Scheme::Qs => "qs",
        }
    }
}

/// Quantile probability an order statistic is scored against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `p_k = k / (m + 1)`, the IID mean of `U_(k)`.
    Pk,
    /// `p_k* = (k - 1/2) / m`, the QS mean of `U_(k)*`.
    PkStar,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Pk => "p_k",
            Target::PkStar => "p_k_star",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub pair_covariance: f64,
    pub pair_correlation: f64,
}

impl MomentSummary {
    fn from_correlation(pair_correlation: f64) -> Self {
        let variance = 1.0 / 12.0;
        Self {
            mean: 0.5,
            variance,
            pair_covariance: pair_correlation * variance,
            pair_correlation,
        }
    }
}

/// Moments of the QS uniforms `U_1*, ..., U_m*`.
pub fn qs_uniform_moments(m: usize) -> Result<MomentSummary> {
    if m < 2 {
        return Err(Error::PairUndefined);
    }
    let m = m as f64;
    Ok(MomentSummary::from_correlation(-(m + 1.0) / (m * m)))
}

/// Moments of the LQS uniforms for layer sizes `(m_1, ..., m_K)`. The
/// correlation is formed as the QS one times [`adj_factor`], which keeps the
/// one-layer and all-singleton cases exact in floating point.
pub fn lqs_uniform_moments(layers: &LayerSpec) -> Result<MomentSummary> {
    let qs = qs_uniform_moments(layers.total())?;
    Ok(MomentSummary::from_correlation(
        qs.pair_correlation * adj_factor(layers)?,
    ))
}

/// `ADJ = (m^2 - sum_k m / m_k) / (m^2 - 1)`, the factor taking the QS
/// pairwise correlation at size `m` to the LQS one.
pub fn adj_factor(layers: &LayerSpec) -> Result<f64> {
    let total = layers.total();
    if total < 2 {
        return Err(Error::PairUndefined);
    }
    let m = total as f64;
    let ratio_sum: f64 = layers.sizes().iter().map(|&k| m / k as f64).sum();
    Ok((m * m - ratio_sum) / (m * m - 1.0))
}

fn check_rank(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || k > m {
        return Err(Error::Domain(format!(
            "order statistic rank {k} not in 1..={m}"
        )));
    }
    Ok(())
}

/// `(p_k, p_k*) = (k / (m + 1), (k - 1/2) / m)`.
pub fn quantile_targets(m: usize, k: usize) -> Result<(f64, f64)> {
    check_rank(m, k)?;
    let (m, k) = (m as f64, k as f64);
    Ok((k / (m + 1.0), (k - 0.5) / m))
}

/// Mean and variance of the `k`-th order statistic of `m` uniforms.
pub fn order_stat_moments(m: usize, k: usize, scheme: Scheme) -> Result<(f64, f64)> {
    let (p, p_star) = quantile_targets(m, k)?;
    let mf = m as f64;
    Ok(match scheme {
        Scheme::Iid => (p, p * (1.0 - p) / (mf + 2.0)),
        Scheme::Qs => (p_star, 1.0 / (12.0 * mf * mf)),
    })
}

/// Exact mean-squared error of `U_(k)` as an estimator of `target`.
pub fn mse_exact(m: usize, k: usize, target: Target, scheme: Scheme) -> Result<f64> {
    let (p, p_star) = quantile_targets(m, k)?;
    let mf = m as f64;
    let m2 = mf * mf;
    Ok(match (scheme, target) {
        (Scheme::Iid, Target::Pk) => p * (1.0 - p) / (mf + 2.0),
        // 1/(3m^2) - p(1-p)/m^2, rewritten as variance plus squared bias to
        // avoid cancellation near p = 1/2
        (Scheme::Qs, Target::Pk) => (1.0 / 12.0 + (p - 0.5).powi(2)) / m2,
        (Scheme::Iid, Target::PkStar) => {
            ((mf - 2.0) * p_star * (1.0 - p_star) + 0.75) / ((mf + 1.0) * (mf + 2.0))
        }
        (Scheme::Qs, Target::PkStar) => 1.0 / (12.0 * m2),
    })
}

fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "phi = {phi} must lie strictly inside (0, 1)"
        )))
    }
}

/// Large-`m` MSE with `phi = k / m` held fixed.
pub fn mse_asymptotic(phi: f64, m: usize, target: Target, scheme: Scheme) -> Result<f64> {
    check_phi(phi)?;
    if m == 0 {
        return Err(Error::Domain("m must be at least 1".into()));
    }
    let mf = m as f64;
    let spread = phi * (1.0 - phi);
    Ok(match (scheme, target) {
        (Scheme::Iid, _) => spread / mf,
        (Scheme::Qs, Target::Pk) => (1.0 - 3.0 * spread) / (3.0 * mf * mf),
        (Scheme::Qs, Target::PkStar) => 1.0 / (12.0 * mf * mf),
    })
}

/// Shape term of the asymptotic IID-minus-QS log-MSE gap:
/// `r(phi) = log(phi(1-phi)) - log(1 - 3 phi(1-phi))` for `p_k` and
/// `r*(phi) = log(phi(1-phi))` for `p_k*`.
pub fn log_mse_gap_shape(phi: f64, target: Target) -> Result<f64> {
    check_phi(phi)?;
    let spread = phi * (1.0 - phi);
    Ok(match target {
        Target::Pk => spread.ln() - (1.0 - 3.0 * spread).ln(),
        Target::PkStar => spread.ln(),
    })
}

/// `log MSE_iid - log MSE_qs ~ const + log m + shape(phi)`, with constant
/// `log 3` for `p_k` and `log 12` for `p_k*`.
pub fn log_mse_gap_asymptotic(phi: f64, m: usize, target: Target) -> Result<f64> {
    let shape = log_mse_gap_shape(phi, target)?;
    let constant = match target {
        Target::Pk => 3.0_f64.ln(),
        Target::PkStar => 12.0_f64.ln(),
    };
    Ok(constant + (m as f64).ln() + shape)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpacingKind {
    BetaLaw { alpha: f64, beta: f64 },
    TriangularLaw { lo: f64, mode: f64, hi: f64 },
}

/// Law of the spacing `U_(k+l) - U_(k)`; it does not depend on `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacingLaw {
    pub kind: SpacingKind,
    pub mean: f64,
    pub variance: f64,
}

impl SpacingLaw {
    pub fn cdf(&self, d: f64) -> f64 {
        match self.kind {
            SpacingKind::BetaLaw { alpha, beta } => beta_inc(alpha, beta, d),
            SpacingKind::TriangularLaw { lo, mode, hi } => {
                if d <= lo {
                    0.0
                } else if d >= hi {
                    1.0
                } else if d <= mode {
                    (d - lo).powi(2) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - d).powi(2) / ((hi - lo) * (hi - mode))
                }
            }
        }
    }

    pub fn pdf(&self, d: f64) -> f64 {
        match self.kind {
            SpacingKind::BetaLaw { alpha, beta } => {
                crate::distribution::Distribution::Beta { a: alpha, b: beta }.pdf(d)
            }
            SpacingKind::TriangularLaw { lo, mode, hi } => {
                if d <= lo || d >= hi {
                    0.0
                } else if d <= mode {
                    2.0 * (d - lo) / ((hi - lo) * (mode - lo))
                } else {
                    2.0 * (hi - d) / ((hi - lo) * (hi - mode))
                }
            }
        }
    }
}

pub fn spacing_law(m: usize, ell: usize, scheme: Scheme) -> Result<SpacingLaw> {
    if ell == 0 || ell >= m {
        return Err(Error::Domain(format!(
            "spacing lag {ell} not in 1..={}",
            m.saturating_sub(1)
        )));
    }
    let (mf, l) = (m as f64, ell as f64);
    Ok(match scheme {
        Scheme::Iid => SpacingLaw {
            kind: SpacingKind::BetaLaw {
                alpha: l,
                beta: mf - l + 1.0,
            },
            mean: l / (mf + 1.0),
            variance: l * (mf - l + 1.0) / ((mf + 1.0).powi(2) * (mf + 2.0)),
        },
        Scheme::Qs => SpacingLaw {
            kind: SpacingKind::TriangularLaw {
                lo: (l - 1.0) / mf,
                mode: l / mf,
                hi: (l + 1.0) / mf,
            },
            mean: l / mf,
            variance: 1.0 / (6.0 * mf * mf),
        },
    })
}
