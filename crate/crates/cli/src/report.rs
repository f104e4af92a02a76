//! Report formatting. Reals are written with 17 significant digits so that
//! reports are byte-reproducible and round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use privest::harness::{EstimatorKind, ExperimentConfig, TrialStats};
use serde::Serialize;

use crate::CliError;

pub const EXPERIMENT_HEADER: &str =
    "n,estimator,epsilon,k,trials,mse,mse_stderr,bias,variance,relative_efficiency,predicted_mse,seed";

pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn experiment_csv(config: &ExperimentConfig, rows: &[TrialStats]) -> String {
    let mut out = String::from(EXPERIMENT_HEADER);
    out.push('\n');
    let private = config.estimator_kind == EstimatorKind::Private;
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            s.n,
            config.estimator_kind,
            if private { real(config.epsilon) } else { String::new() },
            s.k.map(|k| k.to_string()).unwrap_or_default(),
            s.trials,
            real(s.mse),
            real(s.standard_error_of_mse),
            real(s.bias),
            real(s.variance),
            real(s.relative_efficiency),
            s.predicted_mse.map(real).unwrap_or_default(),
            config.seed,
        );
    }
    out
}

pub fn summary_table(rows: &[TrialStats]) -> String {
    let mut out = format!(
        "{:>10} {:>7} {:>13} {:>13} {:>13} {:>10} {:>13}\n",
        "n", "k", "mse", "predicted", "bias", "rel_eff", "resamples"
    );
    for s in rows {
        let _ = writeln!(
            out,
            "{:>10} {:>7} {:>13.5e} {:>13} {:>13.4e} {:>10.4} {:>13}",
            s.n,
            s.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            s.mse,
            s.predicted_mse.map(|p| format!("{p:.5e}")).unwrap_or_else(|| "-".into()),
            s.bias,
            s.relative_efficiency,
            s.resamples,
        );
    }
    out
}

/// Provenance record written next to the reports of a run.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub build_identifier: String,
    pub wall_time: f64,
    pub output_paths: Vec<PathBuf>,
}

pub fn build_identifier() -> String {
    format!("privest {}", env!("CARGO_PKG_VERSION"))
}

pub fn manifest_path(report: &Path) -> PathBuf {
    let mut name = report.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_manifest<C: Serialize>(report: &Path, manifest: &RunManifest<C>) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&manifest_path(report), &(json + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_use_seventeen_digits() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(2.0), "2.0000000000000000e0");
        assert_eq!(real(f64::NAN), "NaN");
        for x in [std::f64::consts::PI, 1e-300, -7.25e12] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }
}
