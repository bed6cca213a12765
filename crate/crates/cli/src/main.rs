use std::f64::consts::LN_2;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use netlimits::harness::{self, OutputFormat};
use netlimits::info::{kl_decomposition, mi_latent_monte_carlo};
use netlimits::{
    condition, deserialize_graph, fano_lower_bound, kl_graph, map_recover, mc_moment_check, mi_pairwise_upper,
    mi_plugin, sample, sample_labels, serialize_graph, Error, ExperimentConfig, LabelVector, LikelihoodMode,
    ModelSpec, Result, Seed,
};

#[derive(Parser)]
#[command(name = "netlimits", version, about = "Two-community network models and their recovery limits")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for `sweep` and `threshold`; other commands emit JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sample labels and a graph; prints the graph document.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        /// Fixed labels such as `1,1,-1`; drawn uniformly when absent.
        #[arg(long, allow_hyphen_values = true)]
        labels: Option<String>,
        /// Also write the latent positions of latent-space models here.
        #[arg(long)]
        latent_out: Option<PathBuf>,
    },
    /// Evaluate the non-recoverability condition.
    Threshold {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
    },
    /// KL divergence between the graph laws under two labelings.
    Kl {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long, allow_hyphen_values = true)]
        y_alt: String,
        /// Also report the per-edge decomposition.
        #[arg(long)]
        decompose: bool,
    },
    /// Mutual information between labels and graph, with its pairwise bound
    /// and the Fano error bound.
    Mi {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        /// Report in bits instead of nats.
        #[arg(long)]
        bits: bool,
        /// For latent models: nested Monte Carlo with this many latent draws
        /// instead of the edge-marginal surrogate.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Compare the closed-form latent-space edge moment with Monte Carlo.
    MomentCheck {
        #[arg(long)]
        d: usize,
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        #[arg(long)]
        sigma: f64,
        /// Nodes with different labels.
        #[arg(long)]
        cross: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Exhaustive MAP labels of an observed graph.
    Recover {
        #[command(flatten)]
        model: ModelArgs,
        /// Graph document as written by `sample`.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "surrogate")]
        mode: Mode,
        #[arg(long, default_value_t = 512)]
        draws: usize,
    },
    /// Run a parameter sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Surrogate,
    MonteCarlo,
}

#[derive(Args)]
struct ModelArgs {
    /// Model spec as a JSON file; replaces the flags below.
    #[arg(long, conflicts_with = "model")]
    spec: Option<PathBuf>,
    /// sbm, ergm, lsm, dsbm, dlsm, dpam or dswm.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated mean vector.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    p_mix: Option<f64>,
    /// Dynamic modifier as JSON, e.g. `{"kind":"harmonic"}`.
    #[arg(long)]
    modifier: Option<String>,
    /// Restrict the modifier's history to the last WINDOW pairs.
    #[arg(long)]
    window: Option<usize>,
}

fn parse_list<T: std::str::FromStr>(field: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Config(format!("--{field}: cannot parse `{t}`")))
        })
        .collect()
}

impl ModelArgs {
    fn build(&self) -> Result<ModelSpec> {
        if let Some(path) = &self.spec {
            return Ok(serde_json::from_slice(&fs::read(path)?)?);
        }
        let kind = self
            .model
            .as_deref()
            .ok_or_else(|| Error::Config("either --model or --spec is required".into()))?;
        let mut doc = serde_json::Map::new();
        doc.insert("kind".into(), json!(kind));
        let mut put = |key: &str, value: Option<Value>| {
            if let Some(v) = value {
                doc.insert(key.into(), v);
            }
        };
        put("p", self.p.map(|v| json!(v)));
        put("q", self.q.map(|v| json!(v)));
        put("beta", self.beta.map(|v| json!(v)));
        put("d", self.d.map(|v| json!(v)));
        put("sigma", self.sigma.map(|v| json!(v)));
        put("m", self.m.map(|v| json!(v)));
        put("s", self.s.map(|v| json!(v)));
        put("p_mix", self.p_mix.map(|v| json!(v)));
        if let Some(mu) = &self.mu {
            let mu: Vec<f64> = parse_list("mu", mu)?;
            if self.d.is_none() {
                put("d", Some(json!(mu.len())));
            }
            put("mu", Some(json!(mu)));
        }
        if let Some(m) = &self.modifier {
            put("modifier", Some(serde_json::from_str(m)?));
        } else if matches!(kind, "dsbm" | "dlsm") {
            put("modifier", Some(json!({"kind": "one"})));
        }
        if let Some(size) = self.window {
            put("predecessors", Some(json!({"kind": "window", "size": size})));
        }
        serde_json::from_value(Value::Object(doc)).map_err(|e| Error::Config(format!("model flags: {e}")))
    }
}

fn labels_arg(text: &str) -> Result<LabelVector> {
    LabelVector::new(parse_list("labels", text)?)
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_line(value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Sample {
            model,
            n,
            labels,
            latent_out,
        } => {
            let spec = model.build()?;
            let mut rng = Seed::new(cli.seed, 0).rng();
            let y = match labels {
                Some(text) => labels_arg(&text)?,
                None => sample_labels(n, &mut rng),
            };
            if y.len() != n {
                return Err(Error::LengthMismatch { left: n, right: y.len() });
            }
            let s = sample(&spec, &y, &mut rng)?;
            if let (Some(path), Some(z)) = (latent_out, &s.latent) {
                fs::write(path, json_line(z)?)?;
            }
            let mut bytes = serialize_graph(&s.graph, Some(&y));
            bytes.push(b'\n');
            write_out(out, &bytes)
        }
        Command::Threshold { model, n } => {
            let report = condition(&model.build()?, n)?;
            let bytes = match cli.format {
                Some(Format::Csv) => format!(
                    "model,n,lhs,rhs,nonrecoverable\n{},{n},{},{},{}\n",
                    report.model,
                    harness::fmt_float(report.lhs),
                    harness::fmt_float(report.rhs),
                    report.nonrecoverable
                )
                .into_bytes(),
                _ => json_line(&report)?,
            };
            write_out(out, &bytes)
        }
        Command::Kl {
            model,
            y,
            y_alt,
            decompose,
        } => {
            let spec = model.build()?;
            let (y, y_alt) = (labels_arg(&y)?, labels_arg(&y_alt)?);
            let value = if decompose {
                json!(kl_decomposition(&spec, &y, &y_alt)?)
            } else {
                json!({ "kl": kl_graph(&spec, &y, &y_alt)? })
            };
            write_out(out, &json_line(&value)?)
        }
        Command::Mi { model, n, bits, draws } => {
            let spec = model.build()?;
            let estimate = match draws {
                Some(l) => mi_latent_monte_carlo(&spec, n, l, Seed::new(cli.seed, 0))?,
                None => mi_plugin(&spec, n)?,
            };
            let upper = match mi_pairwise_upper(&spec, n) {
                Ok(u) => Some(u),
                Err(Error::UnsupportedSpec(_)) => None,
                Err(e) => return Err(e),
            };
            let scale = if bits { 1.0 / LN_2 } else { 1.0 };
            let value = json!({
                "mi": estimate.value * scale,
                "standard_error": estimate.standard_error * scale,
                "method": estimate.method,
                "edge_marginal_surrogate": estimate.edge_marginal_surrogate,
                "pairwise_upper": upper.map(|u| u * scale),
                "unit": if bits { "bits" } else { "nats" },
                "fano_lower_bound": fano_lower_bound(estimate.value, n),
            });
            write_out(out, &json_line(&value)?)
        }
        Command::MomentCheck {
            d,
            mu,
            sigma,
            cross,
            samples,
        } => {
            let mu: Vec<f64> = parse_list("mu", &mu)?;
            let check = mc_moment_check(d, &mu, sigma, !cross, samples, Seed::new(cli.seed, 0))?;
            let value = json!({
                "estimate": check.estimate,
                "standard_error": check.standard_error,
                "closed_form": check.closed_form,
                "within_3se": check.agrees_within(3.0),
            });
            write_out(out, &json_line(&value)?)
        }
        Command::Recover {
            model,
            graph,
            mode,
            draws,
        } => {
            let spec = model.build()?;
            let (g, _) = deserialize_graph(&fs::read(graph)?)?;
            let mode = match mode {
                Mode::Surrogate => LikelihoodMode::Surrogate,
                Mode::MonteCarlo => LikelihoodMode::MonteCarlo { draws, seed: cli.seed },
            };
            write_out(out, &json_line(&map_recover(&spec, &g, mode)?)?)
        }
        Command::Sweep { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if cli.seed != 0 {
                cfg.seed = cli.seed;
            }
            let result = netlimits::run_sweep(&cfg)?;
            let format = match cli.format {
                Some(Format::Csv) => OutputFormat::Csv,
                Some(Format::Json) => OutputFormat::Json,
                None => cfg.format.unwrap_or(OutputFormat::Csv),
            };
            let target = out.map(Path::to_path_buf).or(cfg.output.clone());
            let mut bytes = Vec::new();
            match format {
                OutputFormat::Csv => harness::write_csv(&result, &mut bytes)?,
                OutputFormat::Json => harness::write_json(&result, &mut bytes)?,
            }
            write_out(target.as_deref(), &bytes)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
