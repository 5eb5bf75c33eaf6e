//! Run configuration read from JSON.
//!
//! Unknown keys are rejected so a typo in a config file fails loudly instead
//! of silently falling back to a default.

use crate::error::{Error, Result};
use crate::mode_space::SplittingKind;
use crate::model::{dft_phases, InputState, Model, ModelConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SplittingChoice {
    Half,
    Orthogonal,
}

impl From<SplittingChoice> for SplittingKind {
    fn from(choice: SplittingChoice) -> Self {
        match choice {
            SplittingChoice::Half => SplittingKind::Half,
            SplittingChoice::Orthogonal => SplittingKind::Orthogonal,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInput {
    pub weights: Vec<f64>,
    /// Complex entries as [re, im] pairs, one row per mixture component.
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InputChoice {
    Named(String),
    Explicit(ExplicitInput),
}

impl Default for InputChoice {
    fn default() -> Self {
        InputChoice::Named("random".into())
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_state_tol")]
    pub state: f64,
    #[serde(default = "default_probability_tol")]
    pub probability: f64,
}

fn default_state_tol() -> f64 {
    1e-10
}

fn default_probability_tol() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { state: default_state_tol(), probability: default_probability_tol() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Dictionary size N.
    pub n: usize,
    pub d_values: Vec<f64>,
    pub splitting: SplittingChoice,
    /// Optional N x N unimodular matrix with orthogonal rows, entries as
    /// [re, im] pairs. Defaults to the discrete Fourier phases.
    #[serde(default)]
    pub phase_matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub input: InputChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn complex_rows(rows: &[Vec<[f64; 2]>], size: usize, what: &str) -> Result<DMatrix<Complex64>> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(Error::InvalidConfig(format!("{what} must be {size} x {size}")));
    }
    Ok(DMatrix::from_fn(size, size, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.d_values.is_empty() {
            return Err(Error::InvalidConfig("d_values is empty".into()));
        }
        match &self.input {
            InputChoice::Named(name) if name != "random" => {
                return Err(Error::InvalidConfig(format!(
                    "unknown input kind {name:?}, expected \"random\" or explicit weights/coeffs"
                )));
            }
            InputChoice::Explicit(explicit) => {
                if explicit.weights.len() != self.n {
                    return Err(Error::InvalidConfig(format!(
                        "input.weights must have {} entries",
                        self.n
                    )));
                }
                complex_rows(&explicit.coeffs, self.n, "input.coeffs")?;
            }
            _ => {}
        }
        if let Some(rows) = &self.phase_matrix {
            complex_rows(rows, self.n, "phase_matrix")?;
        }
        Ok(())
    }

    pub fn phases(&self) -> Result<DMatrix<Complex64>> {
        match &self.phase_matrix {
            Some(rows) => complex_rows(rows, self.n, "phase_matrix"),
            None => Ok(dft_phases(self.n)),
        }
    }

    /// Model for one of the configured d values.
    pub fn model(&self, d: f64) -> Result<Model> {
        let mut mc = ModelConfig::new(self.n, d, self.splitting.into());
        mc.phases = Some(self.phases()?);
        mc.tol = self.tolerances.state;
        Model::new(mc)
    }

    /// The configured input state; the random choice is drawn from the seed,
    /// so repeated calls agree.
    pub fn input_state(&self) -> Result<InputState> {
        match &self.input {
            InputChoice::Named(_) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                InputState::random(self.n, &mut rng)
            }
            InputChoice::Explicit(explicit) => {
                let coeffs = complex_rows(&explicit.coeffs, self.n, "input.coeffs")?;
                InputState::new(explicit.weights.clone(), coeffs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = RunConfig::from_json(
            r#"{"n": 3, "d_values": [0.5, 1.0], "splitting": "orthogonal"}"#,
        )
        .unwrap();
        assert_eq!(config.n, 3);
        assert_eq!(config.seed, 0);
        assert_eq!(config.tolerances.state, 1e-10);
        assert!(matches!(config.input, InputChoice::Named(ref s) if s == "random"));
        let model = config.model(1.0).unwrap();
        assert_eq!(model.size(), 3);
        let a = config.input_state().unwrap();
        let b = config.input_state().unwrap();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(
            r#"{"n": 2, "d_values": [1.0], "splitting": "half", "dvalues": [2.0]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Json(_)));
    }

    #[test]
    fn explicit_input_and_phases_round_trip() {
        let text = r#"{
            "n": 2,
            "d_values": [1.0],
            "splitting": "half",
            "phase_matrix": [[[1,0],[1,0]],[[1,0],[-1,0]]],
            "input": {
                "weights": [0.25, 0.75],
                "coeffs": [[[1,0],[0,0]],[[0,0],[1,0]]]
            },
            "seed": 5,
            "tolerances": {"state": 1e-9},
            "output_dir": "out"
        }"#;
        let config = RunConfig::from_json(text).unwrap();
        assert_eq!(config.tolerances.state, 1e-9);
        assert_eq!(config.tolerances.probability, 1e-12);
        let input = config.input_state().unwrap();
        assert_eq!(input.weights(), &[0.25, 0.75]);
        let model = config.model(1.0).unwrap();
        assert_eq!(model.phases()[(1, 1)], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn bad_shapes_and_names_fail() {
        let err = RunConfig::from_json(
            r#"{"n": 2, "d_values": [], "splitting": "half"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        let err = RunConfig::from_json(
            r#"{"n": 2, "d_values": [1.0], "splitting": "half", "input": "uniform"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        let err = RunConfig::from_json(
            r#"{"n": 3, "d_values": [1.0], "splitting": "half",
                "phase_matrix": [[[1,0],[1,0]],[[1,0],[-1,0]]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
