//! Command line front end: argument parsing, dispatch and exit codes.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use finder::config::RunConfig;
use finder::{ErrorKind, FinderError};

pub mod experiment;
pub mod tools;

pub use experiment::{run, MetricsRow, RunSummary};

#[derive(Debug, Parser)]
#[command(
    name = "finder",
    version,
    about = "Residual-eigenspace features and leave-pair-out evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run leave-pair-out cross-validation and write result tables.
    Run(RunArgs),
    /// Generate a labeled CSV from a scenario or spec files.
    Synth(tools::SynthArgs),
    /// Fill missing cells by k-nearest-neighbor averaging.
    Impute(tools::ImputeArgs),
    /// Print Markov and tail bounds for a dataset.
    Bounds(tools::BoundsArgs),
}

/// Every run setting. Flags override values read from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, alias = "input")]
    pub input_path: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    /// Label of class B.
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Label of class A; defaults to the only other label present.
    #[arg(long)]
    pub negative_label: Option<String>,
    /// direct, mls, aca-s, aca-l or raw.
    #[arg(long)]
    pub variant: Option<String>,
    /// Integer, or a fraction in (0, 1] for energy truncation.
    #[arg(long)]
    pub m_a: Option<String>,
    /// Comma-separated residual dimensions.
    #[arg(long)]
    pub m_res_list: Option<String>,
    /// balanced or unbalanced.
    #[arg(long)]
    pub regime: Option<String>,
    /// linear or rbf.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub cost: Option<String>,
    /// auto, auto*k or a positive number.
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub impute_k: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    /// true or false.
    #[arg(long)]
    pub shuffle: Option<String>,
    /// true or false.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 17] = [
            ("input_path", &self.input_path),
            ("label_column", &self.label_column),
            ("positive_label", &self.positive_label),
            ("negative_label", &self.negative_label),
            ("variant", &self.variant),
            ("m_a", &self.m_a),
            ("m_res_list", &self.m_res_list),
            ("regime", &self.regime),
            ("kernel", &self.kernel),
            ("cost", &self.cost),
            ("gamma", &self.gamma),
            ("seed", &self.seed),
            ("impute_k", &self.impute_k),
            ("output_dir", &self.output_dir),
            ("shuffle", &self.shuffle),
            ("grid", &self.grid),
            ("tol", &self.tol),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    /// Config file values, then flag overrides, then validation.
    pub fn resolve(&self) -> finder::Result<RunConfig> {
        let cfg = match &self.config {
            Some(path) => {
                let text = read_text(path)?;
                let mut pairs = finder::config::parse_kv(&text)?;
                for (k, v) in self.overrides() {
                    pairs.retain(|(key, _)| key != k);
                    pairs.push((k.to_string(), v.to_string()));
                }
                let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
                RunConfig::from_text(&text)?
            }
            None => {
                let input = self.input_path.as_deref().ok_or_else(|| {
                    FinderError::InvalidParameter("--input-path or --config is required".into())
                })?;
                let label = self.label_column.as_deref().ok_or_else(|| {
                    FinderError::InvalidParameter("--label-column or --config is required".into())
                })?;
                let mut cfg = RunConfig::new(input, label);
                for (k, v) in self.overrides() {
                    cfg.set(k, v)?;
                }
                cfg
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub(crate) fn read_text(path: &Path) -> finder::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| FinderError::Format(format!("cannot read {}: {e}", path.display())))
}

pub fn exit_code(err: &FinderError) -> i32 {
    match err.kind() {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

pub fn dispatch(cli: Cli) -> finder::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config.resolve()?;
            let summary = run(&cfg)?;
            for row in &summary.rows {
                println!("{}", row.summary_line());
            }
            for path in &summary.files {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Synth(args) => tools::synth(&args),
        Command::Impute(args) => tools::impute(&args),
        Command::Bounds(args) => tools::bounds(&args),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
