//! `qstrat`: draw IID/QS/LQS samples, print closed-form theory, and run
//! reproducible experiments.
//!
//! Exit status is 0 on success, 1 on a usage or validation error, and 2 on a
//! runtime failure.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qstrat::experiments::{run_experiment, ExperimentConfig, ExperimentKind, Format};
use qstrat::table::{Cell, Table};
use qstrat::theory::{self, Scheme, Target};
use qstrat::{sample, DistSpec, Error, LayerSpec, Method, RngStream};

#[derive(Parser, Debug)]
#[command(
    name = "qstrat",
    version,
    about = "Quantile-stratified sampling toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one sample and write it as CSV or JSON.
    Sample(SampleArgs),
    /// Print closed-form moments, MSEs, and spacing laws as JSON.
    Theory(TheoryArgs),
    /// Run an experiment from flags or a JSON config file.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Distribution family: uniform, normal, beta, gamma (shape, rate), discrete.
    #[arg(long, default_value = "normal")]
    dist: String,
    /// Comma-separated family parameters.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Vec<f64>,
    /// iid, qs, or lqs.
    #[arg(long, default_value = "qs")]
    method: String,
    #[arg(long)]
    m: usize,
    /// Comma-separated layer sizes for lqs; must sum to m.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long, env = "QSTRAT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long)]
    m: usize,
    /// Order-statistic rank.
    #[arg(long)]
    k: Option<usize>,
    /// Spacing lag.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    layers: Option<String>,
    /// Quantile position for the asymptotic MSE forms.
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// JSON config file; flags given alongside override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// moment_check, qq_export, mse_grid, spacing_check, importance_study.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    layers: Option<String>,
    /// Comma-separated methods (iid, qs, lqs); lqs uses --layers.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, env = "QSTRAT_SEED")]
    seed: Option<u64>,
    /// Comma-separated spacing lags.
    #[arg(long, value_delimiter = ',')]
    ell: Option<Vec<usize>>,
    /// Importance example: a or b.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_layers(layers: Option<&str>) -> Result<Option<LayerSpec>, Error> {
    layers.map(str::parse).transpose()
}

fn parse_method(name: &str, layers: Option<&LayerSpec>) -> Result<Method, Error> {
    match name.trim() {
        "iid" => Ok(Method::Iid),
        "qs" => Ok(Method::Qs),
        "lqs" => layers
            .cloned()
            .map(Method::Lqs)
            .ok_or_else(|| Error::InvalidConfig("lqs needs --layers".into())),
        other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<(), Error> {
    let format: Format = args.format.parse()?;
    let dist = DistSpec {
        family: args.dist.clone(),
        params: args.params.clone(),
    }
    .build()?;
    let layers = parse_layers(args.layers.as_deref())?;
    let method = parse_method(&args.method, layers.as_ref())?;
    if layers.is_some() && !matches!(method, Method::Lqs(_)) {
        return Err(Error::InvalidConfig(
            "--layers only applies to --method lqs".into(),
        ));
    }
    let batch = sample(&dist, &method, args.m, &mut RngStream::new(args.seed, 0))?;
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&batch)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new(&["index", "layer", "block", "uniform", "value"]);
            for i in 0..batch.len() {
                t.push(vec![
                    Cell::from(i + 1),
                    batch.layers[i].into(),
                    batch.blocks[i].into(),
                    batch.uniforms[i].into(),
                    batch.values[i].into(),
                ]);
            }
            t.to_csv_string()?
        }
    };
    emit(args.out.as_ref(), &text)
}

fn theory_json(args: &TheoryArgs) -> Result<Value, Error> {
    let m = args.m;
    if m == 0 {
        return Err(Error::InvalidConfig("--m must be at least 1".into()));
    }
    let mut doc = json!({ "m": m });
    if m >= 2 {
        doc["qs_uniform_moments"] = serde_json::to_value(theory::qs_uniform_moments(m)?)?;
    }
    if let Some(layers) = parse_layers(args.layers.as_deref())? {
        layers.check_total(m)?;
        doc["layers"] = json!(layers.sizes());
        if m >= 2 {
            doc["lqs_uniform_moments"] =
                serde_json::to_value(theory::lqs_uniform_moments(&layers)?)?;
            doc["adj_factor"] = json!(theory::adj_factor(&layers)?);
        }
    }
    let ranks: Vec<usize> = match args.k {
        Some(k) => vec![k],
        None => (1..=m).collect(),
    };
    let mut order_stats = Vec::new();
    for k in ranks {
        let (p_k, p_k_star) = theory::quantile_targets(m, k)?;
        let (iid_mean, iid_var) = theory::order_stat_moments(m, k, Scheme::Iid)?;
        let (qs_mean, qs_var) = theory::order_stat_moments(m, k, Scheme::Qs)?;
        let mut mse = serde_json::Map::new();
        for target in [Target::Pk, Target::PkStar] {
            for scheme in [Scheme::Iid, Scheme::Qs] {
                mse.insert(
                    format!("{}_{}", scheme.name(), target.name()),
                    json!(theory::mse_exact(m, k, target, scheme)?),
                );
            }
        }
        order_stats.push(json!({
            "k": k,
            "p_k": p_k,
            "p_k_star": p_k_star,
            "iid": { "mean": iid_mean, "variance": iid_var },
            "qs": { "mean": qs_mean, "variance": qs_var },
            "mse": mse,
        }));
    }
    doc["order_statistics"] = Value::Array(order_stats);
    if let Some(ell) = args.ell {
        doc["spacing"] = json!({
            "ell": ell,
            "iid": theory::spacing_law(m, ell, Scheme::Iid)?,
            "qs": theory::spacing_law(m, ell, Scheme::Qs)?,
        });
    }
    if let Some(phi) = args.phi {
        let mut asym = serde_json::Map::new();
        for target in [Target::Pk, Target::PkStar] {
            for scheme in [Scheme::Iid, Scheme::Qs] {
                asym.insert(
                    format!("{}_{}", scheme.name(), target.name()),
                    json!(theory::mse_asymptotic(phi, m, target, scheme)?),
                );
            }
        }
        asym.insert(
            "r".into(),
            json!(theory::log_mse_gap_shape(phi, Target::Pk)?),
        );
        asym.insert(
            "r_star".into(),
            json!(theory::log_mse_gap_shape(phi, Target::PkStar)?),
        );
        doc["asymptotic"] = json!({ "phi": phi, "mse": asym });
    }
    Ok(doc)
}

fn cmd_theory(args: TheoryArgs) -> Result<(), Error> {
    let doc = theory_json(&args)?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(args.out.as_ref(), &text)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&args.config, &args.kind) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(kind)) => ExperimentConfig::new(kind.parse()?),
        (None, None) => {
            return Err(Error::InvalidConfig("give --kind or --config".into()));
        }
    };
    if let (Some(_), Some(kind)) = (&args.config, &args.kind) {
        cfg.experiment = kind.parse::<ExperimentKind>()?;
    }
    if let Some(dist) = &args.dist {
        cfg.distribution = DistSpec {
            family: dist.clone(),
            params: Vec::new(),
        };
    }
    if let Some(params) = &args.params {
        cfg.distribution.params = params.clone();
    }
    if let Some(m) = args.m {
        cfg.m = Some(m);
    }
    if let Some(layers) = parse_layers(args.layers.as_deref())? {
        cfg.layers = Some(layers);
    }
    if let Some(names) = &args.methods {
        let methods = names
            .iter()
            .map(|n| parse_method(n, cfg.layers.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        cfg.methods = Some(methods);
    }
    if let Some(r) = args.replicates {
        cfg.replicates = Some(r);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(lags) = &args.ell {
        cfg.lags = Some(lags.clone());
    }
    if let Some(example) = &args.example {
        cfg.example = Some(example.clone());
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    if let Some(out) = &args.out {
        cfg.output_path = Some(out.to_string_lossy().into_owned());
    }
    if let Some(format) = &args.format {
        cfg.format = format.parse()?;
    }
    Ok(cfg)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let cfg = experiment_config(&args)?;
    let report = run_experiment(&cfg)?;
    let text = report.render(cfg.format)?;
    match &cfg.output_path {
        Some(path) => fs::write(path, &text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    let failed: Vec<_> = report.failed_checks().collect();
    eprintln!(
        "{}: {} checks, {} failed",
        report.experiment,
        report.checks.len(),
        failed.len()
    );
    for c in failed {
        eprintln!(
            "  FAIL {} [{}] z={:?} p={:?}",
            c.name, c.method, c.z_score, c.p_value
        );
    }
    Ok(())
}
