use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use softqec_cli::commands::{self, Output};
use softqec_cli::config::{preset, preset_names, ExperimentConfig, Overrides};
use softqec_cli::CliError;

#[derive(Parser)]
#[command(name = "softqec", version, about = "Surface-code decoding experiments with soft readout information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep noise strength and fit the threshold of each decoder.
    Threshold(Common),
    /// Sweep and tabulate failure rates without fitting.
    Curve(Common),
    /// Scan the measurement time of duration-derived circuit noise.
    Tradeoff(Common),
    /// Check a configuration's models, or an exported model file.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Exported model file (from export-graph) to check instead.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Sampled shots for the identity checks.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Simulated readout records per amplitude-damping density.
        #[arg(long, default_value_t = 1_000_000)]
        ks_samples: usize,
    },
    /// Write the fault graphs (or decoding graphs) of one point as JSON.
    ExportGraph {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distance: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        /// Scanned value (p or tau_m); defaults to the first.
        #[arg(long)]
        param: Option<f64>,
        /// Export decoding graphs with weights instead of fault graphs.
        #[arg(long)]
        decoding: bool,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    config: Option<PathBuf>,
    /// Built-in preset instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path; a JSON mirror is written next to it.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<usize>>,
    /// No per-point progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(CliError::Config("give a configuration file or --preset".into())),
        };
        cfg.apply(&Overrides {
            trials: self.trials,
            seed: self.seed,
            workers: self.workers,
            output: self.output.clone(),
            distances: self.distances.clone(),
        })?;
        Ok(cfg)
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn json_text(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default() + "\n"
}

/// Writes the tables and prints the summary; returns whether a check failed.
fn emit(cfg: &ExperimentConfig, out: &Output) -> Result<bool, CliError> {
    match &cfg.output {
        Some(path) => {
            if !out.csv.is_empty() {
                write(path, &out.csv)?;
                write(&path.with_extension("json"), &json_text(&out.json))?;
            } else {
                write(path, &json_text(&out.json))?;
            }
            for l in &out.summary {
                println!("{l}");
            }
        }
        None => {
            print!("{}", out.csv);
            let to_stdout = out.csv.is_empty();
            for l in &out.summary {
                if to_stdout {
                    println!("{l}");
                } else {
                    eprintln!("{l}");
                }
            }
        }
    }
    Ok(out.failed)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let progress = |quiet: bool| move |s: &str| if !quiet { eprintln!("{s}") };
    match cli.command {
        Command::Threshold(c) => {
            let cfg = c.load()?;
            emit(&cfg, &commands::threshold(&cfg, &mut progress(c.quiet))?)
        }
        Command::Curve(c) => {
            let cfg = c.load()?;
            emit(&cfg, &commands::curve(&cfg, &mut progress(c.quiet))?)
        }
        Command::Tradeoff(c) => {
            let cfg = c.load()?;
            emit(&cfg, &commands::tradeoff(&cfg, &mut progress(c.quiet))?)
        }
        Command::Validate { common, model: Some(path), .. } => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let checks = commands::validate_model_file(&value)?;
            for c in &checks {
                println!("{}", c.line());
            }
            if let Some(out) = &common.output {
                write(out, &json_text(&serde_json::json!({ "command": "validate", "model": path, "checks": checks })))?;
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(CliError::Config(format!("{} violates the model conditions", path.display())));
            }
            Ok(false)
        }
        Command::Validate { common, samples, ks_samples, .. } => {
            let cfg = common.load()?;
            emit(&cfg, &commands::validate(&cfg, samples, ks_samples)?)
        }
        Command::ExportGraph { common, distance, rounds, param, decoding } => {
            let cfg = common.load()?;
            let v = commands::export_graph(&cfg, distance, rounds, param, decoding)?;
            match &cfg.output {
                Some(p) => write(p, &json_text(&v))?,
                None => print!("{}", json_text(&v)),
            }
            Ok(false)
        }
        Command::Presets => {
            for name in preset_names() {
                let cfg = preset(name)?;
                println!("{name}: {}", cfg.description);
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
