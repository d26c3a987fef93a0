use serde::Serialize;

use super::config::Rows;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level report. Field order is the serialized key order.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    pub system: SystemSummary,
    pub envelope: Option<EnvelopeSummary>,
    pub certificate: Option<CertificateSummary>,
    pub infeasibility: Option<Infeasibility>,
    pub scan: Option<Vec<ScanPoint>>,
    pub oracle: Option<OracleSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Infeasible,
    Verified,
    VerificationFailed,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSummary {
    pub n: usize,
    pub m: usize,
    pub spectral_abscissa: f64,
    pub realizability_residual: f64,
    pub theta_condition: f64,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeSummary {
    pub mu1: f64,
    pub mu0: f64,
    #[serde(rename = "Gamma")]
    pub gammas: Vec<Rows>,
    pub sigmas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub nus: Rows,
    pub refined: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    #[serde(rename = "Pi")]
    pub pi: Rows,
    pub gamma: f64,
    pub gamma_star: f64,
    pub ms_bound: f64,
    pub supply: f64,
    pub lambda_min_pi: f64,
    pub second_moment_bound: f64,
    pub solve_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Infeasibility {
    pub reason: String,
    /// `(μ₁, γ*)` for each evaluated point.
    pub margins: Vec<MarginPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarginPoint {
    pub mu1: f64,
    pub decay_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub mu1: f64,
    pub decay_margin: Option<f64>,
    pub gamma: Option<f64>,
    pub ms_bound: Option<f64>,
    pub error: Option<String>,
    pub best: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub cutoff: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub trajectory: Option<TrajectorySummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub t_final: f64,
    pub dt: f64,
    pub samples: usize,
    pub v0: Option<f64>,
    pub max_envelope_violation: Option<f64>,
    pub stationary_v: Option<f64>,
    pub ms_bound: Option<f64>,
    /// `⟨Π, P_ss⟩` from the nominal steady covariance.
    pub nominal_stationary_v: Option<f64>,
    pub dissipation_residual: Option<f64>,
    pub max_trace_error: f64,
    pub max_leak: f64,
    pub csv_path: Option<String>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
