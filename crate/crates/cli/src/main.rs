//! `privest`: command-line front end for the private estimator.
//!
//! Exit codes: 0 success or audit pass, 1 data error, 2 usage error,
//! 3 audit failure.

mod args;
mod data;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use privest::harness::{
    dp_audit_with_scale, run_trials, seeded_private_estimate, synthetic_private_estimate, with_workers,
    ExperimentConfig,
};
use privest::rng::stream;
use serde_json::json;
use thiserror::Error;

use crate::args::{AuditArgs, Cli, Command, EstimateArgs, ExperimentArgs};
use crate::report::{build_identifier, real, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
    #[error("privacy audit failed")]
    AuditFailed,
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::AuditFailed => 3,
        }
    }
}

impl From<privest::Error> for CliError {
    fn from(e: privest::Error) -> Self {
        match e {
            privest::Error::DegenerateData { .. } => CliError::Data(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn run_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = args.model.family()?;
    let (n, est) = match (&args.data_file, args.theta, args.n) {
        (Some(path), _, _) => {
            let data = data::read_dataset(path, &family)?;
            (data.len(), seeded_private_estimate(&family, &data, args.eps, args.k, args.seed)?)
        }
        (None, Some(theta), Some(n)) => (n, synthetic_private_estimate(&family, theta, n, args.eps, args.k, args.seed)?.1),
        _ => return Err(CliError::Usage("give either --data-file or both --theta and --n".into())),
    };
    let released = if args.post_clamp { est.clamped_output(&family) } else { est.output };

    let mut line = format!(
        "model={} n={n} k={} epsilon={} seed={} estimate={}",
        family.id(),
        est.params.k,
        real(args.eps),
        args.seed,
        real(released)
    );
    let mut header = String::from("model,n,k,epsilon,seed,estimate");
    let mut row = format!("{},{n},{},{},{},{}", family.id(), est.params.k, real(args.eps), args.seed, real(released));
    if args.release_zbar {
        line += &format!(" zbar={}", real(est.average));
        header += ",zbar";
        row += &format!(",{}", real(est.average));
    }
    println!("{line}");

    if let Some(out) = &args.out {
        report::write_file(out, &format!("{header}\n{row}\n"))?;
        let manifest = RunManifest {
            command: "estimate",
            config: json!({
                "family": family,
                "data_file": args.data_file,
                "theta": args.theta,
                "n": n,
                "epsilon": args.eps,
                "k": args.k.to_string(),
                "seed": args.seed,
                "release_zbar": args.release_zbar,
                "post_clamp": args.post_clamp,
            }),
            build_identifier: build_identifier(),
            wall_time: started.elapsed().as_secs_f64(),
            output_paths: vec![out.clone()],
        };
        report::write_manifest(out, &manifest)?;
    }
    Ok(())
}

fn run_experiment(args: ExperimentArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let config = ExperimentConfig {
        family: args.model.family()?,
        theta_true: args.theta,
        n_grid: args.n_grid()?,
        epsilon: args.eps,
        k_policy: args.k,
        trials: args.trials,
        seed: args.seed,
        estimator_kind: args.estimator,
    };
    config.validate()?;
    let rows = with_workers(args.workers, || run_trials(&config))??;
    let csv = report::experiment_csv(&config, &rows);
    let summary = report::summary_table(&rows);
    match &args.out {
        Some(out) => {
            report::write_file(out, &csv)?;
            let manifest = RunManifest {
                command: "experiment",
                config: &config,
                build_identifier: build_identifier(),
                wall_time: started.elapsed().as_secs_f64(),
                output_paths: vec![out.clone()],
            };
            report::write_manifest(out, &manifest)?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn run_audit(args: AuditArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let family = args.model.family()?;
    let k = args.k.resolve(args.n, args.eps, family.space().diameter())?;
    let report = with_workers(args.workers, || {
        dp_audit_with_scale(
            &family,
            args.n,
            args.eps,
            k,
            args.pairs,
            args.y_grid,
            args.noise_scale_override,
            &mut stream(args.seed),
        )
    })??;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    if let Some(out) = &args.out {
        report::write_file(out, &json)?;
        let manifest = RunManifest {
            command: "audit",
            config: json!({
                "family": family,
                "n": args.n,
                "epsilon": args.eps,
                "k": k,
                "pairs": args.pairs,
                "y_grid": args.y_grid,
                "seed": args.seed,
                "noise_scale_override": args.noise_scale_override,
            }),
            build_identifier: build_identifier(),
            wall_time: started.elapsed().as_secs_f64(),
            output_paths: vec![out.clone()],
        };
        report::write_manifest(out, &manifest)?;
    }
    println!(
        "pairs_tested={} max_sensitivity_ratio={} max_abs_log_ratio={} epsilon_target={} pass={}",
        report.pairs_tested,
        real(report.max_sensitivity_ratio),
        real(report.max_abs_log_ratio),
        real(report.epsilon_target),
        report.pass
    );
    if report.pass {
        Ok(())
    } else {
        let pair = serde_json::to_string(&report.worst_pair).map_err(|e| CliError::Io(e.to_string()))?;
        eprintln!("violating pair: {pair}");
        Err(CliError::AuditFailed)
    }
}

fn main() -> ExitCode {
    let result = args::expand_config(std::env::args().collect()).and_then(|argv| {
        let cli = Cli::try_parse_from(argv).map_err(|e| {
            let _ = e.print();
            // --help and --version are not errors.
            if e.use_stderr() {
                CliError::Usage(String::new())
            } else {
                std::process::exit(0)
            }
        })?;
        match cli.command {
            Command::Estimate(a) => run_estimate(a),
            Command::Experiment(a) => run_experiment(a),
            Command::Audit(a) => run_audit(a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
