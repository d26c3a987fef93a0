use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::lmi::Objective;
use crate::weyl::{EnvelopePart, FreeParameters, TrigPerturbation, TrigTerm};

/// Row-major nested array.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub parameters: ParametersConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub theta: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
    #[serde(rename = "M")]
    pub m: Rows,
    #[serde(rename = "J")]
    pub j: Rows,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub terms: Vec<TermConfig>,
    pub error_part: Option<ErrorPartConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub r: f64,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub phi: f64,
}

/// Extra bound `ZZᵀ ⪯ μ₁ Γ XXᵀ Γᵀ + μ I` for an unmodeled remainder.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPartConfig {
    #[serde(rename = "Gamma")]
    pub gamma: Rows,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Mu1Config {
    Value(f64),
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersConfig {
    pub mu1: Option<Mu1Config>,
    pub gamma: Option<f64>,
    pub omegas: Option<Vec<f64>>,
    pub nus: Option<Rows>,
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    #[serde(rename = "Q")]
    pub q: Option<Rows>,
    pub objective: Option<Objective>,
    /// Coordinate descent over `(ω, ν)` at the chosen `μ₁`.
    #[serde(default)]
    pub refine: bool,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    /// Number of output intervals of the simulated trajectory.
    pub samples: Option<usize>,
    pub trials: Option<usize>,
    /// Multiplies every `Γ_k` before the oracle checks (negative controls).
    pub gamma_scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub report_path: Option<PathBuf>,
    pub trajectory_path: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_T_FINAL: f64 = 5.0;
pub const DEFAULT_DT: f64 = 0.002;
pub const DEFAULT_SAMPLES: usize = 500;

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn system_matrices(&self) -> Result<(RMat, RMat, RMat, RMat)> {
        Ok((
            matrix(&self.system.theta, "system.theta")?,
            matrix(&self.system.r, "system.R")?,
            matrix(&self.system.m, "system.M")?,
            matrix(&self.system.j, "system.J")?,
        ))
    }

    pub fn perturbation(&self) -> Result<TrigPerturbation> {
        let terms = self
            .perturbation
            .terms
            .iter()
            .map(|t| TrigTerm::new(t.r, DVector::from_vec(t.lambda.clone()), t.phi))
            .collect();
        TrigPerturbation::new(terms)
    }

    pub fn error_part(&self) -> Result<Option<EnvelopePart>> {
        let Some(e) = &self.perturbation.error_part else {
            return Ok(None);
        };
        if !(e.mu.is_finite() && e.mu >= 0.0) {
            return Err(Error::Config(format!("perturbation.error_part.mu = {} must be >= 0", e.mu)));
        }
        Ok(Some(EnvelopePart { c: 1.0, phi: matrix(&e.gamma, "perturbation.error_part.Gamma")?, mu0: e.mu }))
    }

    /// Free parameters for `terms` trig terms and `parts` envelope parts,
    /// defaulting every `ω` and `ν` to 1.
    pub fn free_parameters(&self, terms: usize, parts: usize) -> Result<FreeParameters> {
        let defaults = FreeParameters::defaults(terms, parts);
        let omegas = self.parameters.omegas.clone().unwrap_or(defaults.omegas);
        let nus = match &self.parameters.nus {
            Some(rows) => matrix(rows, "parameters.nus")?,
            None => defaults.nus,
        };
        FreeParameters::new(omegas, nus)
    }

    pub fn weight(&self) -> Result<Option<RMat>> {
        self.parameters.q.as_ref().map(|q| matrix(q, "parameters.Q")).transpose()
    }
}

/// Converts nested rows into a matrix, naming `field` in diagnostics.
pub fn matrix(rows: &Rows, field: &str) -> Result<RMat> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if nrows == 0 || ncols == 0 {
        return Err(Error::Config(format!("{field}: empty matrix")));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Config(format!("{field}: row {k} has {} entries, expected {ncols}", rows[k].len())));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{field}: non-finite entry")));
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn rows_of(m: &RMat) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DESK: &str = r#"{
        "system": {"theta": [[0,1],[-1,0]], "R": [[0,0],[0,0]], "M": [[1,0],[0,1]], "J": [[0,1],[-1,0]]},
        "perturbation": {"terms": [{"r": 1, "lambda": [0.7071067811865476, 0]}]},
        "parameters": {"mu1": 1, "gamma": 2}
    }"#;

    #[test]
    fn parses_desk_config() {
        let cfg = AnalysisConfig::from_json(DESK).unwrap();
        assert_eq!(cfg.parameters.mu1, Some(Mu1Config::Value(1.0)));
        assert_eq!(cfg.perturbation().unwrap().len(), 1);
        let (theta, ..) = cfg.system_matrices().unwrap();
        assert_eq!(theta, crate::linalg::s2());
    }

    #[test]
    fn grid_and_unknown_keys() {
        let grid = DESK.replace(r#""mu1": 1"#, r#""mu1": [0.5, 1, 2]"#);
        let cfg = AnalysisConfig::from_json(&grid).unwrap();
        assert_eq!(cfg.parameters.mu1, Some(Mu1Config::Grid(vec![0.5, 1.0, 2.0])));
        let bad = DESK.replace(r#""gamma": 2"#, r#""gama": 2"#);
        let err = AnalysisConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("gama") && err.contains("line"), "{err}");
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let err = matrix(&vec![vec![1.0, 2.0], vec![3.0]], "system.R").unwrap_err();
        assert!(err.to_string().contains("system.R"));
    }
}
