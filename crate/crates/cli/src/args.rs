use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use privest::harness::EstimatorKind;
use privest::{FamilyId, KChoice, ParameterSpace, ParametricFamily};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "privest", version, about = "Private, efficient point estimation: experiments and audits")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the private estimator once on a data file or on synthetic data.
    Estimate(EstimateArgs),
    /// Monte Carlo experiment over a grid of sample sizes; writes a CSV report.
    Experiment(ExperimentArgs),
    /// Randomized privacy audit over neighboring datasets.
    Audit(AuditArgs),
}

pub const SUBCOMMANDS: [&str; 3] = ["estimate", "experiment", "audit"];

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

/// Comma-separated list of sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct NGrid(pub Vec<usize>);

fn n_grid(s: &str) -> Result<NGrid, String> {
    s.split(',').map(|t| positive_usize(t.trim())).collect::<Result<_, _>>().map(NGrid)
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// bernoulli | gaussian_fixed_var | exponential_rate
    #[arg(long)]
    pub model: FamilyId,
    /// Lower end of the parameter space (defaults per model).
    #[arg(long, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    /// Upper end of the parameter space (defaults per model).
    #[arg(long, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    /// Known standard deviation (gaussian_fixed_var only, default 1).
    #[arg(long, value_parser = positive_f64)]
    pub sigma: Option<f64>,
}

impl ModelArgs {
    pub fn family(&self) -> Result<ParametricFamily, CliError> {
        let default = ParametricFamily::default_for(self.model);
        if self.sigma.is_some() && self.model != FamilyId::GaussianFixedVar {
            return Err(CliError::Usage("--sigma only applies to gaussian_fixed_var".into()));
        }
        let lower = self.theta_min.unwrap_or(default.space().lower());
        let upper = self.theta_max.unwrap_or(default.space().upper());
        let space = ParameterSpace::new(lower, upper).map_err(CliError::usage)?;
        let family = match self.model {
            FamilyId::Bernoulli => ParametricFamily::bernoulli(space),
            FamilyId::GaussianFixedVar => ParametricFamily::gaussian(self.sigma.unwrap_or(1.0), space),
            FamilyId::ExponentialRate => ParametricFamily::exponential_rate(space),
        };
        family.map_err(CliError::usage)
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Observations, one per line.
    #[arg(long, conflicts_with_all = ["theta", "n"])]
    pub data_file: Option<PathBuf>,
    /// True parameter for synthetic data.
    #[arg(long, allow_negative_numbers = true, requires = "n")]
    pub theta: Option<f64>,
    /// Synthetic sample size.
    #[arg(long, value_parser = positive_usize, requires = "theta")]
    pub n: Option<usize>,
    #[arg(long, value_parser = positive_f64)]
    pub eps: f64,
    /// Number of blocks: `auto` or a positive integer.
    #[arg(long, default_value = "auto")]
    pub k: KChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the record as CSV to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also emit the unperturbed block average z̄ (not private).
    #[arg(long)]
    pub release_zbar: bool,
    /// Clamp the released value into the parameter space.
    #[arg(long)]
    pub post_clamp: bool,
    /// Flat key = value file with flag values; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    /// Single sample size.
    #[arg(long, value_parser = positive_usize, conflicts_with = "n_grid")]
    pub n: Option<usize>,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_parser = n_grid)]
    pub n_grid: Option<NGrid>,
    #[arg(long, value_parser = positive_f64, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value = "auto")]
    pub k: KChoice,
    #[arg(long, value_parser = positive_usize, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// mle | bias_corrected | block_average | private
    #[arg(long, default_value = "private")]
    pub estimator: EstimatorKind,
    /// CSV report path; without it the CSV goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = positive_usize, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ExperimentArgs {
    pub fn n_grid(&self) -> Result<Vec<usize>, CliError> {
        match (&self.n_grid, self.n) {
            (Some(grid), None) => Ok(grid.0.clone()),
            (None, Some(n)) => Ok(vec![n]),
            _ => Err(CliError::Usage("one of --n or --n-grid is required".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
    #[arg(long, value_parser = positive_f64)]
    pub eps: f64,
    #[arg(long, default_value = "auto")]
    pub k: KChoice,
    #[arg(long, value_parser = positive_usize, default_value_t = 1000)]
    pub pairs: usize,
    /// Points in the output grid spanning z̄ ± 10λ.
    #[arg(long, value_parser = positive_usize, default_value_t = 1000)]
    pub y_grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = positive_usize, default_value_t = 1)]
    pub workers: usize,
    /// Test hook: audit with this Laplace scale instead of Λ/(kε).
    #[arg(long, value_parser = positive_f64, hide = true)]
    pub noise_scale_override: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Splices the contents of `--config <file>` into the argument list right
/// after the subcommand, so that explicit flags (which come later) win.
///
/// Each non-blank, non-`#` line is `key = value` (or `key value`), where `key`
/// is a flag name without the leading dashes. `true`/`false` values toggle
/// boolean flags.
pub fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = if let Some(p) = argv[pos].strip_prefix("--config=") {
        let p = p.to_string();
        argv.remove(pos);
        p
    } else {
        if pos + 1 >= argv.len() {
            return Err(CliError::Usage("--config needs a file path".into()));
        }
        argv.remove(pos);
        argv.remove(pos)
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let mut tokens = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => match line.split_once(char::is_whitespace) {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (line, "true"),
            },
        };
        let key = key.trim_start_matches("--");
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("{path}:{}: bad config entry `{line}`", lineno + 1)));
        }
        match value {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            v => {
                tokens.push(format!("--{key}"));
                tokens.push(v.to_string());
            }
        }
    }
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|i| i + 1)
        .ok_or_else(|| CliError::Usage("--config needs a subcommand".into()))?;
    argv.splice(at..at, tokens);
    Ok(argv)
}
