//! JSON documents for distributions going in and results coming out.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::PidAtoms;
use crate::config::SolverConfig;
use crate::error::{invalid, Result};
use crate::prob::{DiscreteTriple, GaussianTriple};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sizes {
    pub m: usize,
    pub x: usize,
    pub y: usize,
}

/// On-disk description of a joint distribution. The pmf is row-major over
/// m, then x, then y; the covariance is row-major in block order M, X, Y.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputDocument {
    Discrete { alphabet_sizes: Sizes, pmf: Vec<f64> },
    Gaussian { dims: Sizes, cov: Vec<f64> },
}

#[derive(Debug, Clone)]
pub enum ParsedInput {
    Discrete(DiscreteTriple),
    Gaussian(GaussianTriple),
}

impl InputDocument {
    pub fn from_discrete(dist: &DiscreteTriple) -> InputDocument {
        InputDocument::Discrete {
            alphabet_sizes: Sizes { m: dist.km(), x: dist.kx(), y: dist.ky() },
            pmf: dist.pmf().to_vec(),
        }
    }

    pub fn from_gaussian(g: &GaussianTriple) -> InputDocument {
        InputDocument::Gaussian {
            dims: Sizes { m: g.dm(), x: g.dx(), y: g.dy() },
            cov: g.cov().transpose().as_slice().to_vec(),
        }
    }

    /// Validates and builds the distribution the document describes.
    pub fn realize(self) -> Result<ParsedInput> {
        match self {
            InputDocument::Discrete { alphabet_sizes: s, pmf } => {
                Ok(ParsedInput::Discrete(DiscreteTriple::new(s.m, s.x, s.y, pmf)?))
            }
            InputDocument::Gaussian { dims, cov } => {
                let d = dims.m + dims.x + dims.y;
                if cov.len() != d * d {
                    return Err(invalid(format!(
                        "cov has {} entries, expected {} ({d} x {d})",
                        cov.len(),
                        d * d
                    )));
                }
                let cov = DMatrix::from_row_slice(d, d, &cov);
                Ok(ParsedInput::Gaussian(GaussianTriple::new(dims.m, dims.x, dims.y, cov)?))
            }
        }
    }
}

pub fn parse_input(path: &Path) -> Result<ParsedInput> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let doc: InputDocument = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    doc.realize()
}

/// Everything a single compute run reports. Serializes losslessly; the
/// timestamp is the only field allowed to differ between identical runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDocument {
    pub tool: String,
    pub timestamp: String,
    pub method: String,
    pub units: String,
    pub atoms: PidAtoms,
    pub diagnostics: serde_json::Value,
    pub config: SolverConfig,
}

impl OutputDocument {
    pub fn new(
        method: &str,
        atoms: PidAtoms,
        diagnostics: serde_json::Value,
        config: &SolverConfig,
    ) -> OutputDocument {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        OutputDocument {
            tool: format!("pidkit {}", env!("CARGO_PKG_VERSION")),
            timestamp: now,
            method: method.to_string(),
            units: "bits".to_string(),
            atoms,
            diagnostics,
            config: config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("pidkit-io-{}.json", rand::random::<u64>()));
        std::fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn discrete_documents_round_trip() {
        let d = corpus::and_gate();
        let doc = InputDocument::from_discrete(&d);
        let text = serde_json::to_string(&doc).unwrap();
        let path = write_temp(&text);
        let parsed = parse_input(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        match parsed {
            ParsedInput::Discrete(back) => assert_eq!(back, d),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn gaussian_documents_round_trip() {
        let g = corpus::gaussian_scalar(0.5, 1.0);
        let doc = InputDocument::from_gaussian(&g);
        let text = serde_json::to_string(&doc).unwrap();
        let path = write_temp(&text);
        let parsed = parse_input(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        match parsed {
            ParsedInput::Gaussian(back) => {
                assert_eq!(back.dm(), g.dm());
                let diff = (back.cov() - g.cov()).abs().max();
                assert!(diff < 1e-15);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn bad_documents_name_the_problem() {
        let path = write_temp(
            r#"{"kind":"discrete","alphabet_sizes":{"m":2,"x":2,"y":2},
               "pmf":[0.12,0.12,0.12,0.12,0.12,0.13,0.13,0.13]}"#,
        );
        let err = parse_input(&path).unwrap_err().to_string();
        std::fs::remove_file(&path).unwrap();
        assert!(err.contains("sums to"), "{err}");

        let path = write_temp(
            r#"{"kind":"gaussian","dims":{"m":1,"x":1,"y":1},
               "cov":[1.0,2.0,0.0,2.0,1.0,0.0,0.0,0.0,1.0]}"#,
        );
        let err = parse_input(&path).unwrap_err().to_string();
        std::fs::remove_file(&path).unwrap();
        assert!(err.contains("min eigenvalue"), "{err}");

        let path = write_temp(r#"{"kind":"discrete","alphabet_sizes""#);
        let err = parse_input(&path).unwrap_err().to_string();
        std::fs::remove_file(&path).unwrap();
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn output_documents_round_trip_losslessly() {
        let d = corpus::xor();
        let atoms = crate::broja::tilde_pid(&d, &SolverConfig::default()).unwrap().atoms;
        let doc = OutputDocument::new(
            "broja",
            atoms,
            serde_json::json!({"converged": true}),
            &SolverConfig::default(),
        );
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: OutputDocument = serde_json::from_str(&text).unwrap();
        let text2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, text2);
    }
}
