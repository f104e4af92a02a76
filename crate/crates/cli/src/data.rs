use std::fs;
use std::path::Path;

use privest::{Dataset, ParametricFamily};

use crate::CliError;

/// Parses one decimal observation per line; blank lines are skipped.
pub fn parse_observations(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(x) if x.is_finite() => out.push(x),
            _ => return Err(CliError::Data(format!("line {}: `{line}` is not a finite decimal number", i + 1))),
        }
    }
    Ok(out)
}

pub fn read_dataset(path: &Path, family: &ParametricFamily) -> Result<Dataset, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let obs = parse_observations(&text)?;
    for (i, &x) in obs.iter().enumerate() {
        family
            .check_observation(x)
            .map_err(|e| CliError::Data(format!("observation {} ({x}): {e}", i + 1)))?;
    }
    Dataset::new(obs).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
