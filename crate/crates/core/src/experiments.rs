//! Reproducible experiment runners: closed-form theory against Monte-Carlo
//! evidence, plot-ready QQ and MSE tables, and importance-sampling studies.
//!
//! Every statistical comparison is reported as a [`Check`] carrying the
//! theory value, the empirical value, its standard error, and the z-score
//! (or the goodness-of-fit statistic and p-value), so pass/fail can be
//! read mechanically. Replicate `r` always draws from stream `(seed, r)`,
//! which makes every artifact independent of the worker count.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{DistSpec, Distribution};
use crate::error::{Error, Result};
use crate::estimators::{replicate_importance, EstimateSummary, ImportanceProblem};
use crate::sampling::{sample, LayerSpec, Method, RngStream, SampleBatch};
use crate::stats::{self, GofResult};
use crate::table::{Cell, Table};
use crate::theory::{self, Scheme, Target};

/// `|z|` above this fails a moment check.
pub const Z_LIMIT: f64 = 4.0;
/// Goodness-of-fit tests fail below this p-value.
pub const GOF_ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MomentCheck,
    QqExport,
    MseGrid,
    SpacingCheck,
    ImportanceStudy,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::MomentCheck => "moment_check",
            Self::QqExport => "qq_export",
            Self::MseGrid => "mse_grid",
            Self::SpacingCheck => "spacing_check",
            Self::ImportanceStudy => "importance_study",
        }
    }

    fn default_m(self) -> usize {
        match self {
            Self::MomentCheck | Self::QqExport => 30,
            Self::MseGrid => 20,
            Self::SpacingCheck => 10,
            Self::ImportanceStudy => 100,
        }
    }

    fn default_replicates(self) -> usize {
        match self {
            Self::MomentCheck | Self::SpacingCheck => 100_000,
            Self::QqExport => 20,
            Self::MseGrid => 1,
            Self::ImportanceStudy => 1000,
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moment_check" => Ok(Self::MomentCheck),
            "qq_export" => Ok(Self::QqExport),
            "mse_grid" => Ok(Self::MseGrid),
            "spacing_check" => Ok(Self::SpacingCheck),
            "importance_study" => Ok(Self::ImportanceStudy),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment `{other}`"
            ))),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

/// Experiment settings. Unset optional fields take per-experiment defaults
/// when the config is [resolved](ExperimentConfig::resolve).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub distribution: DistSpec,
    /// Sample size; the largest `m` of the grid for `mse_grid`.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub layers: Option<LayerSpec>,
    #[serde(default)]
    pub methods: Option<Vec<Method>>,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Spacing lags for `spacing_check`.
    #[serde(default)]
    pub lags: Option<Vec<usize>>,
    /// `a` or `b` for `importance_study`.
    #[serde(default)]
    pub example: Option<String>,
    /// Not echoed into reports, so an artifact does not depend on where it
    /// was written.
    #[serde(default, skip_serializing)]
    pub output_path: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// Worker threads; results do not depend on it.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            distribution: DistSpec::default(),
            m: None,
            layers: None,
            methods: None,
            replicates: None,
            seed: 0,
            lags: None,
            example: None,
            output_path: None,
            format: Format::default(),
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Fills defaults and validates; the result has every optional field
    /// that the experiment uses set.
    pub fn resolve(&self) -> Result<Self> {
        let kind = self.experiment;
        let mut cfg = self.clone();
        let m = match (cfg.m, &cfg.layers) {
            (Some(m), _) => m,
            (None, Some(layers)) => layers.total(),
            (None, None) => kind.default_m(),
        };
        cfg.m = Some(m);
        if m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        let replicates = cfg.replicates.unwrap_or(kind.default_replicates());
        if replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        cfg.replicates = Some(replicates);
        if let Some(layers) = &cfg.layers {
            layers.check_total(m)?;
        }
        if cfg.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }

        match kind {
            ExperimentKind::MomentCheck
            | ExperimentKind::QqExport
            | ExperimentKind::ImportanceStudy => {
                let methods = cfg.methods.clone().unwrap_or_else(|| {
                    let mut methods = vec![Method::Iid, Method::Qs];
                    if let Some(layers) = &cfg.layers {
                        methods.push(Method::Lqs(layers.clone()));
                    }
                    methods
                });
                if methods.is_empty() {
                    return Err(Error::InvalidConfig(
                        "at least one method is required".into(),
                    ));
                }
                for method in &methods {
                    if let Method::Lqs(layers) = method {
                        layers.check_total(m)?;
                    }
                }
                cfg.methods = Some(methods);
            }
            ExperimentKind::MseGrid | ExperimentKind::SpacingCheck => {}
        }

        match kind {
            ExperimentKind::MomentCheck if m < 2 => {
                return Err(Error::InvalidConfig("moment_check needs m >= 2".into()));
            }
            ExperimentKind::QqExport => {
                cfg.distribution.build()?;
            }
            ExperimentKind::SpacingCheck => {
                let lags = match &cfg.lags {
                    Some(lags) => lags.clone(),
                    None => [1, 3, 5].into_iter().filter(|&l| l < m).collect(),
                };
                if lags.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "no valid spacing lag for m = {m}"
                    )));
                }
                if let Some(bad) = lags.iter().find(|&&l| l == 0 || l >= m) {
                    return Err(Error::InvalidConfig(format!(
                        "spacing lag {bad} not in 1..={}",
                        m - 1
                    )));
                }
                cfg.lags = Some(lags);
            }
            ExperimentKind::ImportanceStudy => {
                let example = cfg.example.clone().unwrap_or_else(|| "a".into());
                ImportanceProblem::by_name(&example)?;
                cfg.example = Some(example);
            }
            _ => {}
        }
        Ok(cfg)
    }
}

/// One mechanically checkable comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub method: String,
    pub theory: Option<f64>,
    pub empirical: Option<f64>,
    pub std_err: Option<f64>,
    pub z_score: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub n: Option<usize>,
    pub passed: bool,
}

impl Check {
    fn blank(name: impl Into<String>, method: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            method: method.into(),
            theory: None,
            empirical: None,
            std_err: None,
            z_score: None,
            statistic: None,
            p_value: None,
            n: None,
            passed: false,
        }
    }

    /// Passes when `|empirical - theory| / std_err <= Z_LIMIT`.
    pub fn moment(
        name: impl Into<String>,
        method: impl Into<String>,
        theory: f64,
        empirical: f64,
        std_err: f64,
    ) -> Self {
        let z = stats::z_score(empirical, theory, std_err);
        Self {
            theory: Some(theory),
            empirical: Some(empirical),
            std_err: Some(std_err),
            z_score: Some(z),
            passed: z.abs() <= Z_LIMIT,
            ..Self::blank(name, method)
        }
    }

    /// Passes when the p-value is at least `GOF_ALPHA`.
    pub fn gof(name: impl Into<String>, method: impl Into<String>, result: GofResult) -> Self {
        Self {
            statistic: Some(result.statistic),
            p_value: Some(result.p_value),
            n: Some(result.n),
            passed: result.passes(GOF_ALPHA),
            ..Self::blank(name, method)
        }
    }

    /// A deterministic condition with an optional value for the record.
    pub fn condition(
        name: impl Into<String>,
        method: impl Into<String>,
        passed: bool,
        value: Option<f64>,
    ) -> Self {
        Self {
            empirical: value,
            passed,
            ..Self::blank(name, method)
        }
    }

    fn table(checks: &[Check]) -> Table {
        let mut t = Table::new(&[
            "check",
            "method",
            "theory",
            "empirical",
            "std_err",
            "z_score",
            "statistic",
            "p_value",
            "n",
            "passed",
        ]);
        for c in checks {
            t.push(vec![
                c.name.clone().into(),
                c.method.clone().into(),
                c.theory.into(),
                c.empirical.into(),
                c.std_err.into(),
                c.z_score.into(),
                c.statistic.into(),
                c.p_value.into(),
                c.n.into(),
                c.passed.into(),
            ]);
        }
        t
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub summaries: Vec<EstimateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

impl Report {
    fn new(config: ExperimentConfig, checks: Vec<Check>) -> Self {
        Self {
            experiment: config.experiment,
            passed: checks.iter().all(|c| c.passed),
            config,
            checks,
            summaries: Vec::new(),
            table: None,
        }
    }

    pub fn check(&self, name: &str, method: &str) -> Option<&Check> {
        self.checks
            .iter()
            .find(|c| c.name == name && c.method == method)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// The CSV artifact: the data table when the experiment produces one,
    /// otherwise the check table.
    pub fn to_csv(&self) -> Result<String> {
        match &self.table {
            Some(t) => t.to_csv_string(),
            None => Check::table(&self.checks).to_csv_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Check table as CSV, regardless of whether a data table exists.
    pub fn checks_csv(&self) -> Result<String> {
        Check::table(&self.checks).to_csv_string()
    }
}

/// Validates `cfg`, then runs it, on a dedicated pool when `threads` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let cfg = cfg.resolve()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(|| dispatch(&cfg)),
        None => dispatch(&cfg),
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        ExperimentKind::MomentCheck => run_moment_check(cfg),
        ExperimentKind::QqExport => run_qq_export(cfg),
        ExperimentKind::MseGrid => run_mse_grid(cfg),
        ExperimentKind::SpacingCheck => run_spacing_check(cfg),
        ExperimentKind::ImportanceStudy => run_importance_study(cfg),
    }
}

fn par_replicates<T: Send>(
    seed: u64,
    replicates: usize,
    f: impl Fn(&mut RngStream) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| f(&mut RngStream::new(seed, r)))
        .collect()
}

fn settings(cfg: &ExperimentConfig) -> (usize, usize) {
    (
        cfg.m.expect("resolved config"),
        cfg.replicates.expect("resolved config"),
    )
}

fn theory_pair_correlation(method: &Method, m: usize) -> Result<f64> {
    Ok(match method {
        Method::Iid => 0.0,
        Method::Qs => theory::qs_uniform_moments(m)?.pair_correlation,
        Method::Lqs(layers) => theory::lqs_uniform_moments(layers)?.pair_correlation,
    })
}

/// Per-batch moment statistics of the uniforms, centred at the known mean
/// 1/2: the batch mean, the mean square, and the average cross product
/// over all ordered pairs `i != j`.
fn uniform_moment_stats(u: &[f64]) -> (f64, f64, f64) {
    let m = u.len() as f64;
    let centred_sum: f64 = u.iter().map(|x| x - 0.5).sum();
    let square_sum: f64 = u.iter().map(|x| (x - 0.5).powi(2)).sum();
    let cross = (centred_sum * centred_sum - square_sum) / (m * (m - 1.0));
    (centred_sum / m + 0.5, square_sum / m, cross)
}

/// Mean absolute deviation of the sorted uniforms from `p_k*`.
fn adherence(sorted: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, u)| (u - (i as f64 + 0.5) / m).abs())
        .sum::<f64>()
        / m
}

struct BatchMoments {
    mean: f64,
    square: f64,
    cross: f64,
    adherence: f64,
}

/// Empirical mean, variance, pairwise covariance, and pairwise correlation
/// of the uniforms for each method, scored against the closed forms.
pub fn run_moment_check(cfg: &ExperimentConfig) -> Result<Report> {
    let (m, replicates) = settings(cfg);
    let methods = cfg.methods.as_deref().expect("resolved config");
    let mut checks = Vec::new();
    let mut adherence_by_method = Vec::new();
    for method in methods {
        let label = method.label();
        let batches = par_replicates(cfg.seed, replicates, |rng| {
            let batch = sample(&Distribution::Uniform01, method, m, rng)?;
            let (mean, square, cross) = uniform_moment_stats(&batch.uniforms);
            Ok(BatchMoments {
                mean,
                square,
                cross,
                adherence: adherence(&batch.sorted_uniforms()),
            })
        })?;
        let means: Vec<f64> = batches.iter().map(|b| b.mean).collect();
        let squares: Vec<f64> = batches.iter().map(|b| b.square).collect();
        let crosses: Vec<f64> = batches.iter().map(|b| b.cross).collect();
        let adherences: Vec<f64> = batches.iter().map(|b| b.adherence).collect();

        let corr_theory = theory_pair_correlation(method, m)?;
        checks.push(Check::moment(
            "mean",
            &label,
            0.5,
            stats::mean(&means),
            stats::std_err_of_mean(&means),
        ));
        checks.push(Check::moment(
            "variance",
            &label,
            1.0 / 12.0,
            stats::mean(&squares),
            stats::std_err_of_mean(&squares),
        ));
        checks.push(Check::moment(
            "pair_covariance",
            &label,
            corr_theory / 12.0,
            stats::mean(&crosses),
            stats::std_err_of_mean(&crosses),
        ));
        // ratio estimator with a delta-method standard error
        let var_hat = stats::mean(&squares);
        let corr_hat = stats::mean(&crosses) / var_hat;
        let linearized: Vec<f64> = crosses
            .iter()
            .zip(&squares)
            .map(|(c, v)| (c - corr_hat * v) / var_hat)
            .collect();
        checks.push(Check::moment(
            "pair_correlation",
            &label,
            corr_theory,
            corr_hat,
            stats::std_err_of_mean(&linearized),
        ));
        let mad = stats::mean(&adherences);
        checks.push(Check {
            std_err: Some(stats::std_err_of_mean(&adherences)),
            ..Check::condition("adherence_mad", &label, true, Some(mad))
        });
        adherence_by_method.push((method.clone(), mad));
    }

    let find = |pred: fn(&Method) -> bool| {
        adherence_by_method
            .iter()
            .find(|(m, _)| pred(m))
            .map(|(_, v)| *v)
    };
    let iid = find(|m| matches!(m, Method::Iid));
    let qs = find(|m| matches!(m, Method::Qs));
    for (method, lqs) in &adherence_by_method {
        if let (Method::Lqs(layers), Some(iid), Some(qs)) = (method, iid, qs) {
            let reductive = layers.sizes().len() == 1 || layers.sizes().iter().all(|&s| s == 1);
            if !reductive {
                checks.push(Check::condition(
                    "adherence_between_qs_and_iid",
                    method.label(),
                    qs < *lqs && *lqs < iid,
                    Some(*lqs),
                ));
            }
        }
    }
    Ok(Report::new(cfg.clone(), checks))
}

/// Sorted sample values against theoretical quantiles, one row per order
/// statistic per replicate per method. IID rows use `Q(p_k)`; QS and LQS
/// rows use `Q(p_k*)`.
pub fn run_qq_export(cfg: &ExperimentConfig) -> Result<Report> {
    let (m, replicates) = settings(cfg);
    let dist = cfg.distribution.build()?;
    let methods = cfg.methods.as_deref().expect("resolved config");
    let mut table = Table::new(&[
        "method",
        "replicate",
        "k",
        "theoretical_quantile",
        "sample_order_stat",
    ]);
    let mut checks = Vec::new();
    for method in methods {
        let theoretical = (1..=m)
            .map(|k| {
                let (p, p_star) = theory::quantile_targets(m, k)?;
                dist.quantile(if *method == Method::Iid { p } else { p_star })
            })
            .collect::<Result<Vec<_>>>()?;
        let batches: Vec<SampleBatch> =
            par_replicates(cfg.seed, replicates, |rng| sample(&dist, method, m, rng))?;
        if *method == Method::Qs {
            let covered = batches.iter().all(|b| {
                b.sorted_uniforms()
                    .iter()
                    .enumerate()
                    .all(|(k, &u)| u > k as f64 / m as f64 && u <= (k + 1) as f64 / m as f64)
            });
            if !covered {
                return Err(Error::Domain("QS batch missed a quantile block".into()));
            }
            checks.push(Check::condition(
                "block_coverage",
                method.label(),
                true,
                None,
            ));
        }
        for (r, batch) in batches.iter().enumerate() {
            for (k, x) in batch.sorted_values().into_iter().enumerate() {
                table.push(vec![
                    method.label().into(),
                    r.into(),
                    (k + 1).into(),
                    theoretical[k].into(),
                    x.into(),
                ]);
            }
        }
    }
    let mut report = Report::new(cfg.clone(), checks);
    report.table = Some(table);
    Ok(report)
}

/// Exact IID and QS mean-squared errors over `1 <= k <= m <= m_max` for
/// both quantile targets, with the log-MSE difference.
pub fn run_mse_grid(cfg: &ExperimentConfig) -> Result<Report> {
    let (m_max, _) = settings(cfg);
    let mut table = Table::new(&["target", "m", "k", "mse_iid", "mse_qs", "log_diff", "sign"]);
    let mut checks = Vec::new();
    for target in [Target::Pk, Target::PkStar] {
        let mut min_gap = f64::INFINITY;
        let mut m1_equal = true;
        let mut rows = 0usize;
        for m in 1..=m_max {
            for k in 1..=m {
                let iid = theory::mse_exact(m, k, target, Scheme::Iid)?;
                let qs = theory::mse_exact(m, k, target, Scheme::Qs)?;
                let gap = iid.ln() - qs.ln();
                if m == 1 {
                    m1_equal &= gap == 0.0;
                } else {
                    min_gap = min_gap.min(gap);
                }
                let sign = if gap > 0.0 {
                    1
                } else if gap < 0.0 {
                    -1
                } else {
                    0
                };
                table.push(vec![
                    target.name().into(),
                    m.into(),
                    k.into(),
                    iid.into(),
                    qs.into(),
                    gap.into(),
                    Cell::Int(sign),
                ]);
                rows += 1;
            }
        }
        checks.push(Check::condition(
            "equal_at_m1",
            target.name(),
            m1_equal,
            None,
        ));
        if m_max >= 2 {
            checks.push(Check::condition(
                "qs_dominates",
                target.name(),
                min_gap > 0.0,
                Some(min_gap),
            ));
        }
        checks.push(Check::condition(
            "row_count",
            target.name(),
            rows == m_max * (m_max + 1) / 2,
            Some(rows as f64),
        ));
    }
    let mut report = Report::new(cfg.clone(), checks);
    report.table = Some(table);
    Ok(report)
}

/// Order-statistic moments and spacing laws for IID and QS uniforms.
///
/// Replicate `r` contributes one spacing `U_(k+l) - U_(k)` per lag with
/// `k` cycling through `1..=m-l`, so the pooled spacings are independent
/// and also probe that the law does not depend on `k`.
pub fn run_spacing_check(cfg: &ExperimentConfig) -> Result<Report> {
    let (m, replicates) = settings(cfg);
    let lags = cfg.lags.as_deref().expect("resolved config");
    let mut checks = Vec::new();
    for scheme in [Scheme::Iid, Scheme::Qs] {
        let method = match scheme {
            Scheme::Iid => Method::Iid,
            Scheme::Qs => Method::Qs,
        };
        let label = scheme.name();
        let sorted: Vec<Vec<f64>> = par_replicates(cfg.seed, replicates, |rng| {
            Ok(sample(&Distribution::Uniform01, &method, m, rng)?.sorted_uniforms())
        })?;

        for k in 1..=m {
            let (mean, var) = theory::order_stat_moments(m, k, scheme)?;
            let column: Vec<f64> = sorted.iter().map(|u| u[k - 1]).collect();
            checks.push(Check::moment(
                format!("order_stat_mean_k{k}"),
                label,
                mean,
                stats::mean(&column),
                stats::std_err_of_mean(&column),
            ));
            checks.push(Check::moment(
                format!("order_stat_variance_k{k}"),
                label,
                var,
                stats::variance(&column),
                stats::std_err_of_variance(&column),
            ));
        }

        for &lag in lags {
            let law = theory::spacing_law(m, lag, scheme)?;
            let spacings: Vec<f64> = sorted
                .iter()
                .enumerate()
                .map(|(r, u)| {
                    let k = r % (m - lag);
                    u[k + lag] - u[k]
                })
                .collect();
            checks.push(Check::gof(
                format!("spacing_ks_l{lag}"),
                label,
                stats::ks_test(&spacings, |d| law.cdf(d)),
            ));
            checks.push(Check::moment(
                format!("spacing_mean_l{lag}"),
                label,
                law.mean,
                stats::mean(&spacings),
                stats::std_err_of_mean(&spacings),
            ));
            checks.push(Check::moment(
                format!("spacing_variance_l{lag}"),
                label,
                law.variance,
                stats::variance(&spacings),
                stats::std_err_of_variance(&spacings),
            ));
        }
    }
    Ok(Report::new(cfg.clone(), checks))
}

/// Replicated importance-sampling estimates for each method, with
/// summaries and the replicate-level table behind a violin plot.
pub fn run_importance_study(cfg: &ExperimentConfig) -> Result<Report> {
    let (m, replicates) = settings(cfg);
    let methods = cfg.methods.as_deref().expect("resolved config");
    let prob = ImportanceProblem::by_name(cfg.example.as_deref().expect("resolved config"))?;
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    let mut table = Table::new(&["method", "replicate", "estimate"]);
    for method in methods {
        let summary = replicate_importance(&prob, m, method, cfg.seed, replicates)?;
        if let Some(mu) = prob.true_value {
            checks.push(Check::moment(
                "mean_vs_true_value",
                method.label(),
                mu,
                summary.mean,
                summary.mean_std_err(),
            ));
        }
        for (r, e) in summary.estimates.iter().enumerate() {
            table.push(vec![method.label().into(), r.into(), (*e).into()]);
        }
        summaries.push(summary);
    }
    let std_err_of = |wanted: &Method| {
        methods
            .iter()
            .zip(&summaries)
            .find(|(m, _)| *m == wanted)
            .map(|(_, s)| s.std_err)
    };
    if let (Some(iid), Some(qs)) = (std_err_of(&Method::Iid), std_err_of(&Method::Qs)) {
        checks.push(Check::condition(
            "qs_std_err_below_iid",
            "qs",
            qs < iid,
            Some(qs / iid),
        ));
    }
    let mut report = Report::new(cfg.clone(), checks);
    report.summaries = summaries;
    report.table = Some(table);
    Ok(report)
}

/// Runs `cfg` and writes the rendered artifact to `output_path` (or
/// returns it when unset).
pub fn run_and_render(cfg: &ExperimentConfig) -> Result<(Report, String)> {
    let report = run_experiment(cfg)?;
    let text = report.render(cfg.format)?;
    if let Some(path) = &cfg.output_path {
        fs::write(path, &text)?;
    }
    Ok((report, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig::new(kind)
    }

    #[test]
    fn resolve_fills_defaults() {
        let c = cfg(ExperimentKind::ImportanceStudy).resolve().unwrap();
        assert_eq!(c.m, Some(100));
        assert_eq!(c.replicates, Some(1000));
        assert_eq!(c.methods, Some(vec![Method::Iid, Method::Qs]));
        assert_eq!(c.example.as_deref(), Some("a"));

        let mut c = cfg(ExperimentKind::MomentCheck);
        c.layers = Some("18,9,3".parse().unwrap());
        let c = c.resolve().unwrap();
        assert_eq!(c.m, Some(30));
        assert_eq!(c.methods.unwrap().len(), 3);

        let c = cfg(ExperimentKind::SpacingCheck).resolve().unwrap();
        assert_eq!(c.lags, Some(vec![1, 3, 5]));
    }

    #[test]
    fn resolve_rejects_bad_configs() {
        let mut c = cfg(ExperimentKind::MomentCheck);
        c.m = Some(30);
        c.layers = Some("18,9,4".parse().unwrap());
        assert!(matches!(c.resolve(), Err(Error::InvalidLayers(_))));

        let mut c = cfg(ExperimentKind::SpacingCheck);
        c.lags = Some(vec![10]);
        assert!(c.resolve().is_err());

        let mut c = cfg(ExperimentKind::MomentCheck);
        c.m = Some(1);
        assert!(c.resolve().is_err());

        let mut c = cfg(ExperimentKind::QqExport);
        c.replicates = Some(0);
        assert!(c.resolve().is_err());

        let mut c = cfg(ExperimentKind::ImportanceStudy);
        c.example = Some("z".into());
        assert!(c.resolve().is_err());

        assert!(ExperimentConfig::from_json(r#"{"experiment":"mse_grid","bogus":1}"#).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{
            "experiment": "moment_check",
            "distribution": {"family": "gamma", "params": [2, 5]},
            "layers": [18, 9, 3],
            "methods": ["iid", "qs", {"lqs": [18, 9, 3]}],
            "replicates": 50,
            "seed": 9,
            "format": "json"
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(c.layers, Some("18,9,3".parse().unwrap()));
        assert_eq!(
            c.methods.as_ref().unwrap()[2],
            Method::Lqs("18,9,3".parse().unwrap())
        );
        assert_eq!(c.format, Format::Json);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn mse_grid_shape() {
        let r = run_experiment(&cfg(ExperimentKind::MseGrid)).unwrap();
        assert!(r.passed);
        let t = r.table.as_ref().unwrap();
        assert_eq!(t.len(), 420);
        let gap = t.column("log_diff").unwrap();
        let m_col = t.column("m").unwrap();
        for row in &t.rows {
            let (Cell::Int(m), Cell::Real(g)) = (&row[m_col], &row[gap]) else {
                panic!()
            };
            if *m == 1 {
                assert_eq!(*g, 0.0);
            } else {
                assert!(*g > 0.0);
            }
        }
    }

    #[test]
    fn qq_export_row_counts() {
        let mut c = cfg(ExperimentKind::QqExport);
        c.layers = Some("18,9,3".parse().unwrap());
        c.replicates = Some(4);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.table.unwrap().len(), 3 * 4 * 30);

        let mut c = cfg(ExperimentKind::QqExport);
        c.m = Some(1);
        c.replicates = Some(5);
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.table.unwrap().len(), 2 * 5);
    }

    #[test]
    fn small_moment_check_reports_every_method() {
        let mut c = cfg(ExperimentKind::MomentCheck);
        c.layers = Some("3,2".parse().unwrap());
        c.replicates = Some(2000);
        let r = run_experiment(&c).unwrap();
        for method in ["iid", "qs", "lqs(3,2)"] {
            for name in [
                "mean",
                "variance",
                "pair_covariance",
                "pair_correlation",
                "adherence_mad",
            ] {
                assert!(r.check(name, method).is_some(), "{name} {method}");
            }
        }
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("check,method,theory,empirical,std_err,z_score"));
    }

    #[test]
    fn output_is_independent_of_thread_count() {
        let mut c = cfg(ExperimentKind::ImportanceStudy);
        c.example = Some("b".into());
        c.replicates = Some(64);
        c.m = Some(20);
        c.threads = Some(1);
        let one = run_experiment(&c).unwrap().to_csv().unwrap();
        c.threads = Some(4);
        let four = run_experiment(&c).unwrap().to_csv().unwrap();
        assert_eq!(one, four);
    }
}
