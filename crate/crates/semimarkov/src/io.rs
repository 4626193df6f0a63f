//! Model configuration files and the CSV/JSON result formats.
//!
//! A model is a JSON document:
//!
//! ```json
//! {
//!   "states": 2,
//!   "p0": [0.5, 0.5],
//!   "jump_kernel": [[0.0, 1.0], [1.0, 0.0]],
//!   "sojourns": [{"pmf": [0.3, 0.7]}, {"pmf": [1.0]}],
//!   "observation": {"c": [0.0, 2.0], "d": [0.1, 0.1]}
//! }
//! ```
//!
//! `jump_kernel[j][i]` is the probability that a jump out of state `i+1`
//! lands in state `j+1` (columns are departure states). `observation` is
//! optional. Validation failures name the offending field.
//!
//! Floats in CSV output are written with 17 significant digits so values
//! round-trip exactly; state indices in files are 1-based.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::Reestimates;
use crate::filter::FilterState;
use crate::model::{JumpKernel, ModelError, ObservationModel, SemiMarkovModel, SojournLaw};
use crate::simulate::PathRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {source}")]
    Invalid { field: String, source: ModelError },
    #[error("observations: no `y` column in header `{header}`")]
    MissingColumn { header: String },
    #[error("observations line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("observations: file contains no data rows")]
    EmptyObservations,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SojournConfig {
    pub pmf: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

/// Serialized form of a model, as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub states: usize,
    pub p0: Vec<f64>,
    pub jump_kernel: Vec<Vec<f64>>,
    pub sojourns: Vec<SojournConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationConfig>,
}

impl ModelConfig {
    /// Validates and builds the model (and observation model if present).
    pub fn build(&self) -> Result<(SemiMarkovModel, Option<ObservationModel>), IoError> {
        let invalid = |field: &str, source: ModelError| IoError::Invalid {
            field: field.to_string(),
            source,
        };
        if self.jump_kernel.len() != self.states {
            return Err(invalid(
                "jump_kernel",
                ModelError::KernelShape {
                    row: 0,
                    len: self.jump_kernel.len(),
                    n: self.states,
                },
            ));
        }
        let kernel =
            JumpKernel::new(self.jump_kernel.clone()).map_err(|e| invalid("jump_kernel", e))?;
        let mut sojourns = Vec::with_capacity(self.sojourns.len());
        for (i, s) in self.sojourns.iter().enumerate() {
            let law = SojournLaw::new(s.pmf.clone())
                .map_err(|e| invalid(&format!("sojourns[{i}].pmf"), e))?;
            sojourns.push(law);
        }
        let model = SemiMarkovModel::new(kernel, sojourns, self.p0.clone()).map_err(|e| {
            let field = match &e {
                ModelError::SojournCount { .. } => "sojourns",
                _ => "p0",
            };
            invalid(field, e)
        })?;
        let obs = match &self.observation {
            Some(o) => Some(
                ObservationModel::new(o.c.clone(), o.d.clone())
                    .map_err(|e| invalid("observation", e))?,
            ),
            None => None,
        };
        Ok((model, obs))
    }
}

pub fn parse_model(json: &str) -> Result<(SemiMarkovModel, Option<ObservationModel>), IoError> {
    let config: ModelConfig = serde_json::from_str(json)?;
    config.build()
}

pub fn load_model(
    path: impl AsRef<Path>,
) -> Result<(SemiMarkovModel, Option<ObservationModel>), IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

/// Formats a float with 17 significant digits (exact f64 round-trip).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads observations from a CSV with a `y` column — either a bare `k,y`
/// file or the output of the `simulate` command.
pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<f64>, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    parse_observations(&text)
}

pub fn parse_observations(text: &str) -> Result<Vec<f64>, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(IoError::EmptyObservations)?;
    let column = header
        .split(',')
        .position(|name| name.trim() == "y")
        .ok_or_else(|| IoError::MissingColumn {
            header: header.to_string(),
        })?;
    let mut y = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(',').nth(column).ok_or_else(|| IoError::Parse {
            line: idx + 1,
            message: format!("missing column {}", column + 1),
        })?;
        let value: f64 = field.trim().parse().map_err(|e| IoError::Parse {
            line: idx + 1,
            message: format!("bad float `{field}`: {e}"),
        })?;
        y.push(value);
    }
    if y.is_empty() {
        return Err(IoError::EmptyObservations);
    }
    Ok(y)
}

/// `k,state,h[,y]` with 1-based states.
pub fn write_simulation_csv(mut w: impl Write, path: &PathRecord) -> std::io::Result<()> {
    if path.observations.is_some() {
        writeln!(w, "k,state,h,y")?;
    } else {
        writeln!(w, "k,state,h")?;
    }
    for k in 0..path.len() {
        match &path.observations {
            Some(y) => writeln!(
                w,
                "{},{},{},{}",
                k,
                path.states[k] + 1,
                path.sojourn_clock[k],
                fmt_float(y[k])
            )?,
            None => writeln!(w, "{},{},{}", k, path.states[k] + 1, path.sojourn_clock[k])?,
        }
    }
    Ok(())
}

/// `k,hhat,map_state,post_1..post_N,log_norm`.
pub fn write_filter_csv(mut w: impl Write, states: &[FilterState]) -> std::io::Result<()> {
    let n = states.first().map_or(0, |s| s.posterior.len());
    let posts: Vec<String> = (1..=n).map(|j| format!("post_{j}")).collect();
    writeln!(w, "k,hhat,map_state,{},log_norm", posts.join(","))?;
    for (k, s) in states.iter().enumerate() {
        let posts: Vec<String> = s.posterior.iter().map(|&p| fmt_float(p)).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            k,
            s.sojourn_estimate,
            s.map_state + 1,
            posts.join(","),
            fmt_float(s.log_likelihood)
        )?;
    }
    Ok(())
}

/// `k,smoothed_1..smoothed_N`.
pub fn write_smoothed_csv(mut w: impl Write, smoothed: &[Vec<f64>]) -> std::io::Result<()> {
    let n = smoothed.first().map_or(0, Vec::len);
    let cols: Vec<String> = (1..=n).map(|j| format!("smoothed_{j}")).collect();
    writeln!(w, "k,{}", cols.join(","))?;
    for (k, row) in smoothed.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&p| fmt_float(p)).collect();
        writeln!(w, "{},{}", k, cells.join(","))?;
    }
    Ok(())
}

/// Long format `k,i,posterior` of per-step state marginals.
pub fn write_marginals_csv(mut w: impl Write, marginals: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(w, "k,i,posterior")?;
    for (k, row) in marginals.iter().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            writeln!(w, "{},{},{}", k, i + 1, fmt_float(p))?;
        }
    }
    Ok(())
}

/// `k,log_norm` sidecar.
pub fn write_log_norm_csv(mut w: impl Write, log_norms: &[f64]) -> std::io::Result<()> {
    writeln!(w, "k,log_norm")?;
    for (k, &x) in log_norms.iter().enumerate() {
        writeln!(w, "{},{}", k, fmt_float(x))?;
    }
    Ok(())
}

pub fn write_reestimates_json(mut w: impl Write, est: &Reestimates) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(est).expect("re-estimates serialize");
    writeln!(w, "{text}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "states": 2,
        "p0": [0.5, 0.5],
        "jump_kernel": [[0.0, 1.0], [1.0, 0.0]],
        "sojourns": [{"pmf": [0.3, 0.7]}, {"pmf": [1.0]}],
        "observation": {"c": [0.0, 2.0], "d": [0.1, 0.1]}
    }"#;

    #[test]
    fn parses_the_documented_schema() {
        let (model, obs) = parse_model(EXAMPLE).unwrap();
        assert_eq!(model.n_states(), 2);
        assert_eq!(model.sojourn(0).support_len(), 2);
        let obs = obs.unwrap();
        assert_eq!(obs.levels(), &[0.0, 2.0]);
    }

    #[test]
    fn observation_is_optional() {
        let json = r#"{
            "states": 2,
            "p0": [1.0, 0.0],
            "jump_kernel": [[0.0, 1.0], [1.0, 0.0]],
            "sojourns": [{"pmf": [1.0]}, {"pmf": [1.0]}]
        }"#;
        let (_, obs) = parse_model(json).unwrap();
        assert!(obs.is_none());
    }

    #[test]
    fn errors_name_the_field() {
        let bad_kernel = EXAMPLE.replace("[[0.0, 1.0], [1.0, 0.0]]", "[[0.1, 1.0], [0.9, 0.0]]");
        let err = parse_model(&bad_kernel).unwrap_err();
        assert!(err.to_string().contains("jump_kernel"), "{err}");

        let bad_pmf = EXAMPLE.replace("[0.3, 0.7]", "[0.3, 0.6]");
        let err = parse_model(&bad_pmf).unwrap_err();
        assert!(err.to_string().contains("sojourns[0].pmf"), "{err}");

        let bad_d = EXAMPLE.replace("\"d\": [0.1, 0.1]", "\"d\": [0.1, -0.1]");
        let err = parse_model(&bad_d).unwrap_err();
        assert!(err.to_string().contains("observation"), "{err}");
    }

    #[test]
    fn observation_csv_round_trip() {
        let text = "k,y\n0,1.25\n1,-0.5\n";
        assert_eq!(parse_observations(text).unwrap(), vec![1.25, -0.5]);
        // The simulate output format is accepted as-is.
        let sim = "k,state,h,y\n0,1,1,0.25\n1,2,1,0.75\n";
        assert_eq!(parse_observations(sim).unwrap(), vec![0.25, 0.75]);
        assert!(matches!(
            parse_observations("k,state\n0,1\n"),
            Err(IoError::MissingColumn { .. })
        ));
        assert!(matches!(
            parse_observations("k,y\n"),
            Err(IoError::EmptyObservations)
        ));
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, -1.0 / 3.0, 1e-15, 123456.789, f64::MIN_POSITIVE] {
            let parsed: f64 = fmt_float(x).parse().unwrap();
            assert_eq!(parsed, x);
        }
    }
}
