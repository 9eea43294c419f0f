//! JSON measure and probe files.
//!
//! A measure file is `{"ambient_dim": n, "points": [[...], ...], "weights": [...]}`;
//! `weights` may be omitted for unit weights. A probe file is an array of points.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tangentia_core::DiscreteMeasure;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        source: tangentia_core::Error,
    },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureFile {
    pub ambient_dim: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MeasureFile {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        Self {
            ambient_dim: m.dim(),
            points: m.points().map(|(p, _)| p.to_vec()).collect(),
            weights: Some(m.weights().to_vec()),
        }
    }

    pub fn into_measure(self) -> tangentia_core::Result<DiscreteMeasure> {
        let weights = self.weights.unwrap_or_else(|| vec![1.0; self.points.len()]);
        DiscreteMeasure::new(self.ambient_dim, self.points, weights)
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_owned(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_measure(path: &Path, text: &str) -> Result<DiscreteMeasure, InputError> {
    let file: MeasureFile = parse(path, text)?;
    file.into_measure().map_err(|source| InputError::Invalid {
        path: path.to_owned(),
        source,
    })
}

pub fn read_measure(path: &Path) -> Result<DiscreteMeasure, InputError> {
    parse_measure(path, &read(path)?)
}

pub fn parse_probes(path: &Path, text: &str, dim: usize) -> Result<Vec<Vec<f64>>, InputError> {
    let probes: Vec<Vec<f64>> = parse(path, text)?;
    if let Some(p) = probes.iter().find(|p| p.len() != dim) {
        return Err(InputError::Invalid {
            path: path.to_owned(),
            source: tangentia_core::Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            },
        });
    }
    if probes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(InputError::Invalid {
            path: path.to_owned(),
            source: tangentia_core::Error::NonFiniteCoordinate,
        });
    }
    Ok(probes)
}

pub fn read_probes(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, InputError> {
    parse_probes(path, &read(path)?, dim)
}

pub fn measure_json(m: &DiscreteMeasure) -> String {
    let mut s = serde_json::to_string_pretty(&MeasureFile::from_measure(m)).expect("serializable");
    s.push('\n');
    s
}

/// Pretty JSON with a trailing newline; non-finite numbers become `null`.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = DiscreteMeasure::new(2, vec![vec![0.1, 0.2], vec![-0.5, 1e-17]], vec![0.25, 3.0]).unwrap();
        let back = parse_measure(Path::new("m.json"), &measure_json(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn weights_default_to_one() {
        let m = parse_measure(Path::new("m.json"), r#"{"ambient_dim": 1, "points": [[0.5], [0.25]]}"#).unwrap();
        assert_eq!(m.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn errors_carry_location() {
        let err = parse_measure(Path::new("bad.json"), "{\n  \"ambient_dim\": 2,\n  \"points\": [[1, 2],\n  oops]\n}").unwrap_err();
        match err {
            InputError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
        let err = parse_measure(Path::new("bad.json"), r#"{"ambient_dim": 2, "points": [[1]]}"#).unwrap_err();
        assert!(matches!(err, InputError::Invalid { .. }));
        let err = parse_probes(Path::new("p.json"), "[[0, 0, 0]]", 2).unwrap_err();
        assert!(err.to_string().contains("p.json"));
    }
}
