//! Univariate distributions with density, CDF, and quantile evaluation, plus
//! the equiprobable quantile-block partition and the conditional block laws.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta_inc, gamma_p, ln_beta, ln_gamma, std_normal_cdf, std_normal_quantile};

/// Absolute tolerance on `x` for numerical CDF inversion.
pub const INVERSION_TOL: f64 = 1e-12;
/// Iteration cap for numerical CDF inversion.
pub const INVERSION_MAX_ITER: usize = 200;

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A finitely supported law on sorted atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLaw {
    points: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::Domain(
                "discrete law needs equally many points and probabilities".into(),
            ));
        }
        if points.iter().any(|x| !x.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "discrete points must be finite and strictly increasing".into(),
            ));
        }
        if probs.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::Domain(
                "discrete probabilities must be positive".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "discrete probabilities sum to {total}, not 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            points,
            probs,
            cumulative,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `F(x_j)` for each atom.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    fn mass(&self, x: f64) -> f64 {
        match self.points.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.points.partition_point(|&p| p <= x);
        if n == 0 {
            0.0
        } else {
            self.cumulative[n - 1]
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cumulative.partition_point(|&c| c < p);
        self.points[i.min(self.points.len() - 1)]
    }
}

/// A law known through its quantile function, with optional closed-form CDF
/// and density. Missing pieces are recovered numerically from the quantile.
#[derive(Clone)]
pub struct CustomLaw {
    name: String,
    quantile: RealMap,
    cdf: Option<RealMap>,
    pdf: Option<RealMap>,
    support: (f64, f64),
}

impl CustomLaw {
    pub fn new(
        name: impl Into<String>,
        support: (f64, f64),
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            quantile: Arc::new(quantile),
            cdf: None,
            pdf: None,
            support,
        }
    }

    pub fn with_cdf(mut self, cdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.cdf = Some(Arc::new(cdf));
        self
    }

    pub fn with_pdf(mut self, pdf: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.pdf = Some(Arc::new(pdf));
        self
    }

    fn cdf(&self, x: f64) -> f64 {
        if let Some(cdf) = &self.cdf {
            return cdf(x).clamp(0.0, 1.0);
        }
        if x < self.support.0 {
            return 0.0;
        }
        if x >= self.support.1 {
            return 1.0;
        }
        // F(x) = sup{p : Q(p) <= x}
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if (self.quantile)(mid) <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn pdf(&self, x: f64) -> f64 {
        if let Some(pdf) = &self.pdf {
            return pdf(x).max(0.0);
        }
        if x < self.support.0 || x > self.support.1 {
            return 0.0;
        }
        let h = 1e-5 * x.abs().max(1.0);
        ((self.cdf(x + h) - self.cdf(x - h)) / (2.0 * h)).max(0.0)
    }
}

impl fmt::Debug for CustomLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomLaw")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("has_cdf", &self.cdf.is_some())
            .field("has_pdf", &self.pdf.is_some())
            .finish()
    }
}

/// A univariate probability law exposing `f`, `F`, and `Q`.
///
/// `Gamma` is parameterized by shape and *rate*, so its density is
/// proportional to `x^(shape-1) e^(-rate x)`.
#[derive(Clone, Debug)]
pub enum Distribution {
    Uniform01,
    Normal { mu: f64, sigma: f64 },
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
    Discrete(DiscreteLaw),
    Custom(CustomLaw),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl Distribution {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Domain(format!(
                "normal mean must be finite, got {mu}"
            )));
        }
        Ok(Self::Normal {
            mu,
            sigma: positive("sigma", sigma)?,
        })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Ok(Self::Beta {
            a: positive("beta a", a)?,
            b: positive("beta b", b)?,
        })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::Gamma {
            shape: positive("gamma shape", shape)?,
            rate: positive("gamma rate", rate)?,
        })
    }

    pub fn discrete(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        DiscreteLaw::new(points, probs).map(Self::Discrete)
    }

    /// Builds a built-in family from a lowercase name and positional parameters.
    ///
    /// `discrete` takes the atoms followed by their probabilities.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "{name} takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "uniform" | "uniform01" => {
                want(0)?;
                Ok(Self::Uniform01)
            }
            "normal" => {
                if params.is_empty() {
                    return Self::normal(0.0, 1.0);
                }
                want(2)?;
                Self::normal(params[0], params[1])
            }
            "beta" => {
                want(2)?;
                Self::beta(params[0], params[1])
            }
            "gamma" => {
                want(2)?;
                Self::gamma(params[0], params[1])
            }
            "discrete" => {
                if params.is_empty() || !params.len().is_multiple_of(2) {
                    return Err(Error::Domain(
                        "discrete takes n points followed by n probabilities".into(),
                    ));
                }
                let (points, probs) = params.split_at(params.len() / 2);
                Self::discrete(points.to_vec(), probs.to_vec())
            }
            other => Err(Error::Domain(format!(
                "unknown distribution family `{other}`"
            ))),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Self::Discrete(_))
    }

    /// Closed support interval, with infinite endpoints where unbounded.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Uniform01 | Self::Beta { .. } => (0.0, 1.0),
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Gamma { .. } => (0.0, f64::INFINITY),
            Self::Discrete(d) => (d.points[0], *d.points.last().unwrap()),
            Self::Custom(c) => c.support,
        }
    }

    /// Density (mass for `Discrete`) at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Discrete(d) => d.mass(x),
            Self::Custom(c) => c.pdf(x),
            _ => self.ln_pdf(x).exp(),
        }
    }

    /// Log density; `-inf` where the density vanishes.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Self::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                let left = edge_log_term(a - 1.0, x);
                let right = edge_log_term(b - 1.0, 1.0 - x);
                left + right - ln_beta(a, b)
            }
            Self::Gamma { shape, rate } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() + edge_log_term(shape - 1.0, x) - rate * x - ln_gamma(shape)
            }
            _ => self.pdf(x).ln(),
        }
    }

    /// Right-continuous distribution function `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self {
            Self::Uniform01 => x.clamp(0.0, 1.0),
            Self::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Self::Beta { a, b } => beta_inc(*a, *b, x),
            Self::Gamma { shape, rate } => gamma_p(*shape, x * rate),
            Self::Discrete(d) => d.cdf(x),
            Self::Custom(c) => c.cdf(x),
        }
    }

    /// Generalized inverse `Q(p) = inf{x : F(x) >= p}`.
    ///
    /// `p` of exactly 0 or 1 is accepted only when the matching support
    /// endpoint is finite.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let x = self.quantile_or_endpoint(p)?;
        if x.is_infinite() {
            return Err(Error::Domain(format!(
                "quantile at p = {p} lies at an infinite support endpoint"
            )));
        }
        Ok(x)
    }

    /// Like [`quantile`](Self::quantile) but returns `±inf` for the
    /// endpoints of unbounded supports.
    pub fn quantile_or_endpoint(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        let (lo, hi) = self.support();
        if let Self::Discrete(d) = self {
            return Ok(if p == 0.0 { lo } else { d.quantile(p) });
        }
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 {
            return Ok(hi);
        }
        match *self {
            Self::Uniform01 => Ok(p),
            Self::Normal { mu, sigma } => Ok(mu + sigma * std_normal_quantile(p)),
            Self::Beta { a, b } => invert_cdf(
                p,
                |x| beta_inc(a, b, x),
                |x| self.pdf(x),
                0.0,
                1.0,
                a / (a + b),
            ),
            Self::Gamma { shape, rate } => {
                let mut upper = shape.max(1.0);
                while gamma_p(shape, upper) < p {
                    upper *= 2.0;
                    if upper > 1e300 {
                        return Err(Error::NonConvergence { p, iterations: 0 });
                    }
                }
                let ln_norm = ln_gamma(shape);
                let standard = invert_cdf(
                    p,
                    |x| gamma_p(shape, x),
                    |x| {
                        if x <= 0.0 {
                            0.0
                        } else {
                            ((shape - 1.0) * x.ln() - x - ln_norm).exp()
                        }
                    },
                    0.0,
                    upper,
                    shape,
                )?;
                Ok(standard / rate)
            }
            Self::Custom(ref c) => Ok((c.quantile)(p)),
            Self::Discrete(_) => unreachable!(),
        }
    }

    /// Quantile-block boundaries `w_s = Q(s/m)` for `s = 0..=m`.
    pub fn block_boundaries(&self, m: usize) -> Result<BlockPartition> {
        if m == 0 {
            return Err(Error::Domain("block count must be at least 1".into()));
        }
        let boundaries = (0..=m)
            .map(|s| self.quantile_or_endpoint(s as f64 / m as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(BlockPartition { m, boundaries })
    }

    /// `Q(p | s) = Q((s + p - 1) / m)`, the quantile of block `s` of `m`.
    pub fn conditional_quantile(&self, m: usize, s: usize, p: f64) -> Result<f64> {
        check_block(m, s)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
        }
        self.quantile(((s - 1) as f64 + p) / m as f64)
    }

    /// CDF of `Q(U)` with `U ~ U((s-1)/m, s/m)`.
    ///
    /// Equals `m (F(x) - (s-1)/m)` inside block `s`, 0 below it, and 1 above.
    /// Averaging over all `s` with weight `1/m` recovers `F(x)`.
    pub fn conditional_cdf(&self, m: usize, s: usize, x: f64) -> Result<f64> {
        check_block(m, s)?;
        Ok((m as f64 * self.cdf(x) - (s - 1) as f64).clamp(0.0, 1.0))
    }

    /// Density of block `s`: `m f(x)` on `(w_{s-1}, w_s]`, zero elsewhere.
    pub fn conditional_pdf(&self, m: usize, s: usize, x: f64) -> Result<f64> {
        check_block(m, s)?;
        let lo = self.quantile_or_endpoint((s - 1) as f64 / m as f64)?;
        let hi = self.quantile_or_endpoint(s as f64 / m as f64)?;
        if x >= lo && x <= hi {
            Ok(m as f64 * self.pdf(x))
        } else {
            Ok(0.0)
        }
    }
}

fn check_block(m: usize, s: usize) -> Result<()> {
    if m == 0 || s == 0 || s > m {
        return Err(Error::Domain(format!("block index {s} not in 1..={m}")));
    }
    Ok(())
}

// (power) * ln(x) with the 0 * ln(0) = 0 convention at the support edge.
fn edge_log_term(power: f64, x: f64) -> f64 {
    if power == 0.0 {
        0.0
    } else {
        power * x.ln()
    }
}

/// Safeguarded Newton iteration inside a shrinking bisection bracket.
fn invert_cdf(
    p: f64,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> Result<f64> {
    let mut x = if start > lo && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..INVERSION_MAX_ITER {
        let err = cdf(x) - p;
        if err == 0.0 {
            return Ok(x);
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let scale = x.abs().max(1.0);
        if hi - lo <= INVERSION_TOL * scale {
            return Ok(0.5 * (lo + hi));
        }
        let density = pdf(x);
        let newton = x - err / density;
        let next = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 0.01 * INVERSION_TOL * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence {
        p,
        iterations: INVERSION_MAX_ITER,
    })
}

/// Equiprobable quantile blocks `w_0 <= w_1 <= ... <= w_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub m: usize,
    pub boundaries: Vec<f64>,
}

impl BlockPartition {
    /// `(w_{s-1}, w_s)` for block `s` in `1..=m`.
    pub fn block(&self, s: usize) -> (f64, f64) {
        (self.boundaries[s - 1], self.boundaries[s])
    }
}

/// Serializable name-plus-parameters description of a built-in family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl DistSpec {
    pub fn build(&self) -> Result<Distribution> {
        Distribution::from_name(&self.family, &self.params)
    }
}

impl Default for DistSpec {
    fn default() -> Self {
        Self {
            family: "normal".into(),
            params: vec![0.0, 1.0],
        }
    }
}
