use rayon::prelude::*;

use super::{decay_margin, operator_matrix, solve_certificate, StabilityCertificate};
use crate::error::{Error, Result};
use crate::system::QuantumLinearSystem;
use crate::weyl::PerturbationEnvelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxGammaStar,
    MinMsBound,
}

#[derive(Debug, Clone)]
pub struct ScanRow {
    pub mu1: f64,
    /// `None` when the envelope or operator could not be built.
    pub decay_margin: Option<f64>,
    pub envelope: Option<PerturbationEnvelope>,
    pub certificate: Option<StabilityCertificate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub best: usize,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn best_row(&self) -> &ScanRow {
        &self.rows[self.best]
    }

    pub fn best_certificate(&self) -> &StabilityCertificate {
        self.rows[self.best].certificate.as_ref().expect("best row is certified")
    }
}

fn evaluate<F>(sys: &QuantumLinearSystem, build: &F, mu1: f64, gamma: Option<f64>) -> ScanRow
where
    F: Fn(f64) -> Result<PerturbationEnvelope>,
{
    let mut row = ScanRow { mu1, decay_margin: None, envelope: None, certificate: None, error: None };
    let envelope = match build(mu1) {
        Ok(e) => e,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let margin = match operator_matrix(sys.a(), &envelope).and_then(|k| decay_margin(&k)) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.decay_margin = Some(margin);
    if margin > 0.0 {
        let gamma = gamma.filter(|g| *g < margin).unwrap_or(0.5 * margin);
        match solve_certificate(sys, &envelope, gamma, None) {
            Ok(cert) => row.certificate = Some(cert),
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row.envelope = Some(envelope);
    row
}

/// Evaluates the certification pipeline at each `μ₁` of `grid`.
///
/// Each feasible point is certified at `gamma` when given and below its
/// margin, otherwise at `½γ*`. Points are independent and evaluated in
/// parallel; ties resolve to the earliest grid point.
pub fn scan_mu1<F>(
    sys: &QuantumLinearSystem,
    envelope_builder: F,
    grid: &[f64],
    objective: Objective,
    gamma: Option<f64>,
) -> Result<ScanResult>
where
    F: Fn(f64) -> Result<PerturbationEnvelope> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = grid.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::NonPositiveMu1(*bad));
    }
    let rows: Vec<ScanRow> = grid.par_iter().map(|&mu1| evaluate(sys, &envelope_builder, mu1, gamma)).collect();

    let score = |row: &ScanRow| -> Option<f64> {
        let cert = row.certificate.as_ref()?;
        Some(match objective {
            Objective::MaxGammaStar => cert.decay_margin,
            Objective::MinMsBound => -cert.ms_bound,
        })
    };
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(s) = score(row) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    match best {
        Some((best, _)) => Ok(ScanResult { best, rows }),
        None => Err(Error::AllInfeasible {
            margins: rows.iter().map(|r| (r.mu1, r.decay_margin.unwrap_or(f64::NAN))).collect(),
        }),
    }
}
