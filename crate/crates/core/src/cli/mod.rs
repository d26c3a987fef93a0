//! Config-driven orchestration behind the `qrstab` binary.
//!
//! Exit codes: 0 success, 1 error or failed verification, 2 no certificate,
//! 3 Fock cutoff leak.

pub mod config;
pub mod report;

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::lmi::{
    decay_margin, operator_matrix, refine_parameters, scan_mu1, solve_certificate, Objective, RefineOptions,
    StabilityCertificate,
};
use crate::oracle::{
    block_positivity_sample, build_quadratures, ccr_interior_residual, closed_form_z, commutator_residual,
    dissipation_residual, envelope_gap_blocks, function_order_check, lindblad_evolve, linear_combination,
    write_trajectory_csv, zz_product_residual, EvolveOptions, FockModel, FockSpace, InitialState,
    DEFAULT_INTERIOR_FRACTION,
};
use crate::system::{build_system, nominal_steady_covariance, spectral_abscissa, QuantumLinearSystem};
use crate::weyl::{
    envelope_augmented, sigma_coefficients, EnvelopePart, FreeParameters, PerturbationEnvelope, TrigPerturbation,
};

pub use config::{AnalysisConfig, Mu1Config};
pub use report::{Report, Status};

use config::{rows_of, DEFAULT_DT, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TRIALS, DEFAULT_T_FINAL};
use report::{
    CertificateSummary, CheckResult, EnvelopeSummary, Infeasibility, MarginPoint, OracleSummary, ScanPoint,
    SystemSummary, TrajectorySummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Verify,
    Scan,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Scan => "scan",
        }
    }
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub cutoff: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    Infeasible = 2,
    CutoffLeak = 3,
}

impl ExitStatus {
    /// Exit status for an error that aborted a command.
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::CutoffLeak { .. } => ExitStatus::CutoffLeak,
            _ => ExitStatus::Failure,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub exit: ExitStatus,
}

/// Per-mode cutoff used when neither the config nor the command line sets one.
pub fn default_cutoff(modes: usize) -> usize {
    if modes == 1 {
        crate::oracle::DEFAULT_CUTOFF
    } else {
        12
    }
}

struct Setup {
    sys: QuantumLinearSystem,
    p: TrigPerturbation,
    error: Option<EnvelopePart>,
    params: FreeParameters,
    q: Option<RMat>,
}

impl Setup {
    fn new(cfg: &AnalysisConfig) -> Result<Self> {
        let (theta, r, m, j) = cfg.system_matrices()?;
        let sys = build_system(theta, r, m, j)?;
        let p = cfg.perturbation()?;
        let error = cfg.error_part()?;
        let parts = p.len() + usize::from(error.is_some());
        let params = cfg.free_parameters(p.len(), parts)?;
        Ok(Self { sys, p, error, params, q: cfg.weight()? })
    }

    fn envelope(&self, mu1: f64, params: &FreeParameters) -> Result<PerturbationEnvelope> {
        envelope_augmented(&self.p, self.sys.theta(), mu1, params, self.error.as_ref())
    }

    fn parts(&self) -> usize {
        self.p.len() + usize::from(self.error.is_some())
    }
}

/// Outcome of the certification stage.
struct Analysis {
    mu1: f64,
    params: FreeParameters,
    envelope: Option<PerturbationEnvelope>,
    certificate: Option<StabilityCertificate>,
    refined: bool,
    infeasibility: Option<Infeasibility>,
    scan: Option<Vec<ScanPoint>>,
}

/// `μ₁ = −α(A)` for Hurwitz `A`, else 1.
fn default_mu1(sys: &QuantumLinearSystem) -> Result<f64> {
    let alpha = spectral_abscissa(sys.a())?;
    Ok(if alpha < 0.0 { -alpha } else { 1.0 })
}

fn default_grid(sys: &QuantumLinearSystem) -> Result<Vec<f64>> {
    let centre = default_mu1(sys)?;
    Ok((-3..=3).map(|k| centre * 2f64.powi(k)).collect())
}

fn is_infeasibility(e: &Error) -> bool {
    matches!(e, Error::Infeasible { .. } | Error::IndefinitePi { .. } | Error::AllInfeasible { .. })
}

fn certify_single(setup: &Setup, cfg: &AnalysisConfig, mu1: f64) -> Result<Analysis> {
    let envelope = setup.envelope(mu1, &setup.params)?;
    let margin = decay_margin(&operator_matrix(setup.sys.a(), &envelope)?)?;
    let mut out = Analysis {
        mu1,
        params: setup.params.clone(),
        envelope: Some(envelope),
        certificate: None,
        refined: false,
        infeasibility: None,
        scan: None,
    };
    let margins = vec![MarginPoint { mu1, decay_margin: Some(margin) }];
    if margin <= 0.0 {
        out.infeasibility =
            Some(Infeasibility { reason: format!("decay margin {margin:.6e} is not positive"), margins });
        return Ok(out);
    }
    let gamma = cfg.parameters.gamma.unwrap_or(0.5 * margin);
    let envelope = out.envelope.as_ref().expect("set above");
    match solve_certificate(&setup.sys, envelope, gamma, setup.q.as_ref()) {
        Ok(cert) => out.certificate = Some(cert),
        Err(e) if is_infeasibility(&e) => {
            out.infeasibility = Some(Infeasibility { reason: e.to_string(), margins });
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

fn certify_grid(setup: &Setup, cfg: &AnalysisConfig, grid: &[f64]) -> Result<Analysis> {
    let objective = cfg.parameters.objective.unwrap_or(Objective::MaxGammaStar);
    let build = |mu1: f64| setup.envelope(mu1, &setup.params);
    match scan_mu1(&setup.sys, build, grid, objective, cfg.parameters.gamma) {
        Ok(res) => {
            let scan = res
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| ScanPoint {
                    mu1: r.mu1,
                    decay_margin: r.decay_margin,
                    gamma: r.certificate.as_ref().map(|c| c.gamma),
                    ms_bound: r.certificate.as_ref().map(|c| c.ms_bound),
                    error: r.error.clone(),
                    best: i == res.best,
                })
                .collect();
            let best = res.best_row();
            // scan rows use Q = I; re-solve with the configured weight
            let cert = match &setup.q {
                Some(q) => solve_certificate(
                    &setup.sys,
                    best.envelope.as_ref().expect("certified"),
                    res.best_certificate().gamma,
                    Some(q),
                )?,
                None => res.best_certificate().clone(),
            };
            Ok(Analysis {
                mu1: best.mu1,
                params: setup.params.clone(),
                envelope: best.envelope.clone(),
                certificate: Some(cert),
                refined: false,
                infeasibility: None,
                scan: Some(scan),
            })
        }
        Err(Error::AllInfeasible { margins }) => Ok(Analysis {
            mu1: grid[0],
            params: setup.params.clone(),
            envelope: None,
            certificate: None,
            refined: false,
            infeasibility: Some(Infeasibility {
                reason: "every grid point is infeasible".into(),
                margins: margins
                    .into_iter()
                    .map(|(mu1, m)| MarginPoint { mu1, decay_margin: m.is_finite().then_some(m) })
                    .collect(),
            }),
            scan: None,
        }),
        Err(e) => Err(e),
    }
}

fn analyze(setup: &Setup, cfg: &AnalysisConfig, force_grid: bool) -> Result<Analysis> {
    let mu1 = cfg.parameters.mu1.clone();
    let mut analysis = match (mu1, force_grid) {
        (Some(Mu1Config::Grid(grid)), _) => certify_grid(setup, cfg, &grid)?,
        (Some(Mu1Config::Value(v)), true) => certify_grid(setup, cfg, &[v])?,
        (None, true) => certify_grid(setup, cfg, &default_grid(&setup.sys)?)?,
        (Some(Mu1Config::Value(v)), false) => certify_single(setup, cfg, v)?,
        (None, false) => certify_single(setup, cfg, default_mu1(&setup.sys)?)?,
    };
    if cfg.parameters.refine && analysis.certificate.is_some() {
        match refine_parameters(
            &setup.sys,
            &setup.p,
            analysis.mu1,
            &analysis.params,
            setup.error.as_ref(),
            &RefineOptions::default(),
        ) {
            Ok(r) if r.certificate.ms_bound < analysis.certificate.as_ref().map_or(f64::INFINITY, |c| c.ms_bound) => {
                log::info!("refinement lowered ms_bound after {} sweeps", r.sweeps);
                analysis.params = r.params;
                analysis.envelope = Some(r.envelope);
                analysis.certificate = Some(r.certificate);
                analysis.refined = true;
            }
            Ok(_) => {}
            Err(e) if is_infeasibility(&e) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(analysis)
}

fn system_summary(sys: &QuantumLinearSystem) -> Result<SystemSummary> {
    Ok(SystemSummary {
        n: sys.n(),
        m: sys.m_dim(),
        spectral_abscissa: spectral_abscissa(sys.a())?,
        realizability_residual: sys.realizability_residual(),
        theta_condition: sys.theta_condition(),
        a: rows_of(sys.a()),
        b: rows_of(sys.b()),
    })
}

fn envelope_summary(setup: &Setup, analysis: &Analysis) -> Result<Option<EnvelopeSummary>> {
    let Some(env) = &analysis.envelope else {
        return Ok(None);
    };
    let sigmas = if setup.parts() == 0 { Vec::new() } else { sigma_coefficients(&analysis.params, setup.parts())? };
    Ok(Some(EnvelopeSummary {
        mu1: env.mu1(),
        mu0: env.mu0(),
        gammas: env.gammas().iter().map(rows_of).collect(),
        sigmas,
        omegas: analysis.params.omegas.clone(),
        nus: rows_of(&analysis.params.nus),
        refined: analysis.refined,
    }))
}

fn certificate_summary(cert: &StabilityCertificate) -> CertificateSummary {
    CertificateSummary {
        pi: rows_of(&cert.pi),
        gamma: cert.gamma,
        gamma_star: cert.decay_margin,
        ms_bound: cert.ms_bound,
        supply: cert.supply,
        lambda_min_pi: cert.lambda_min_pi,
        second_moment_bound: cert.second_moment_bound(),
        solve_residual: cert.solve_residual,
    }
}

fn base_report(command: Command, setup: &Setup, analysis: &Analysis) -> Result<Report> {
    Ok(Report {
        schema_version: report::SCHEMA_VERSION,
        command: command.name().into(),
        status: if analysis.certificate.is_some() { Status::Certified } else { Status::Infeasible },
        system: system_summary(&setup.sys)?,
        envelope: envelope_summary(setup, analysis)?,
        certificate: analysis.certificate.as_ref().map(certificate_summary),
        infeasibility: analysis.infeasibility.clone(),
        scan: analysis.scan.clone(),
        oracle: None,
    })
}

fn certification_exit(analysis: &Analysis) -> ExitStatus {
    if analysis.certificate.is_some() {
        ExitStatus::Success
    } else {
        ExitStatus::Infeasible
    }
}

pub fn cmd_analyze(cfg: &AnalysisConfig) -> Result<Outcome> {
    let setup = Setup::new(cfg)?;
    let analysis = analyze(&setup, cfg, false)?;
    Ok(Outcome { report: base_report(Command::Analyze, &setup, &analysis)?, exit: certification_exit(&analysis) })
}

pub fn cmd_scan(cfg: &AnalysisConfig) -> Result<Outcome> {
    let setup = Setup::new(cfg)?;
    let analysis = analyze(&setup, cfg, true)?;
    Ok(Outcome { report: base_report(Command::Scan, &setup, &analysis)?, exit: certification_exit(&analysis) })
}

fn space_for(setup: &Setup, cfg: &AnalysisConfig, ov: &Overrides) -> Result<FockSpace> {
    let modes = setup.sys.n() / 2;
    let cutoff = ov.cutoff.or(cfg.parameters.cutoff).unwrap_or_else(|| default_cutoff(modes));
    FockSpace::new(modes, cutoff)
}

pub fn cmd_simulate(cfg: &AnalysisConfig, ov: &Overrides) -> Result<Outcome> {
    let setup = Setup::new(cfg)?;
    let space = space_for(&setup, cfg, ov)?;
    let analysis = analyze(&setup, cfg, false)?;
    let mut report = base_report(Command::Simulate, &setup, &analysis)?;
    let Some(cert) = &analysis.certificate else {
        return Ok(Outcome { report, exit: ExitStatus::Infeasible });
    };
    let t_final = cfg.parameters.t_final.unwrap_or(DEFAULT_T_FINAL);
    let dt = cfg.parameters.dt.unwrap_or(DEFAULT_DT);
    let samples = cfg.parameters.samples.unwrap_or(DEFAULT_SAMPLES);
    if !(t_final.is_finite() && t_final > 0.0) || samples == 0 {
        return Err(Error::Config("parameters.t_final must be positive and samples nonzero".into()));
    }
    let traj = lindblad_evolve(
        &setup.sys,
        &setup.p,
        space,
        &InitialState::Vacuum,
        &EvolveOptions::uniform(t_final, samples, dt),
        Some(cert),
    )?;
    let trajectory_path = cfg.outputs.trajectory_path.clone();
    if let Some(path) = &trajectory_path {
        write_trajectory_csv(&traj, std::fs::File::create(path)?)?;
    }
    let nominal_stationary_v = nominal_steady_covariance(&setup.sys).ok().map(|ss| linalg::frob(&cert.pi, &ss.p));
    report.oracle = Some(OracleSummary {
        cutoff: space.cutoff(),
        seed: ov.seed.or(cfg.parameters.seed).unwrap_or(DEFAULT_SEED),
        checks: Vec::new(),
        trajectory: Some(TrajectorySummary {
            t_final,
            dt,
            samples,
            v0: traj.points[0].v,
            max_envelope_violation: traj.max_envelope_violation(),
            stationary_v: traj.stationary_v(),
            ms_bound: Some(cert.ms_bound),
            nominal_stationary_v,
            dissipation_residual: Some(dissipation_residual(&traj, cert)),
            max_trace_error: traj.max_trace_error(),
            max_leak: traj.points.iter().map(|p| p.leak).fold(0.0, f64::max),
            csv_path: trajectory_path.map(|p| p.display().to_string()),
        }),
    });
    Ok(Outcome { report, exit: ExitStatus::Success })
}

fn check(name: impl Into<String>, value: f64, tolerance: f64, pass: bool) -> CheckResult {
    CheckResult { name: name.into(), value, tolerance, pass }
}

pub fn cmd_verify(cfg: &AnalysisConfig, ov: &Overrides) -> Result<Outcome> {
    let setup = Setup::new(cfg)?;
    let space = space_for(&setup, cfg, ov)?;
    let seed = ov.seed.or(cfg.parameters.seed).unwrap_or(DEFAULT_SEED);
    let trials = cfg.parameters.trials.unwrap_or(DEFAULT_TRIALS);
    let analysis = analyze(&setup, cfg, false)?;
    let mut report = base_report(Command::Verify, &setup, &analysis)?;

    let x = build_quadratures(&space, setup.sys.theta())?;
    let model = FockModel::build(&setup.sys, &setup.p, space)?;
    let interior = space.interior(DEFAULT_INTERIOR_FRACTION);
    let theta = setup.sys.theta();
    let mut checks = Vec::new();

    let herm = model.hermiticity_residual();
    checks.push(check("hermiticity", herm, 1e-12, herm <= 1e-12));
    let ccr = ccr_interior_residual(&space, &x, theta);
    checks.push(check("ccr_interior", ccr, 1e-8, ccr <= 1e-8));
    let comm = commutator_residual(&setup.p, theta, &x, &model.h1, &interior)?;
    checks.push(check("commutator_closed_form", comm.relative(), 1e-6, comm.passes(1e-6)));
    let zz = zz_product_residual(&setup.p, theta, &x, &interior)?;
    checks.push(check("zz_spectrum_product", zz.relative(), 1e-6, zz.passes(1e-6)));

    for (k, term) in setup.p.terms().iter().enumerate() {
        let kmat = linear_combination(&term.lambda, &x);
        let phi = term.phi;
        let omega = analysis.params.omegas.get(k).copied().unwrap_or(1.0);
        let (c1, c0) = if phi == 0.0 { (1.0, 0.0) } else { (1.0 + omega, (1.0 + 1.0 / omega) * phi * phi) };
        let ok = function_order_check(|z| (z + phi).sin().powi(2), |z| c1 * z * z + c0, &kmat, 1e-10);
        checks.push(check(format!("function_order_term_{k}"), f64::from(u8::from(!ok)), 0.0, ok));
    }

    if let Some(env) = &analysis.envelope {
        let scale = cfg.parameters.gamma_scale.unwrap_or(1.0);
        let env = env.with_gammas(env.gammas().iter().map(|g| g * scale).collect())?;
        let z = closed_form_z(&setup.p, theta, &x)?;
        let bp = block_positivity_sample(&envelope_gap_blocks(&env, &x, &z), &interior, trials, seed)?;
        checks.push(check("envelope_block_positivity", bp.min_value, -1e-6 * bp.scale, bp.pass));
    }

    let all = checks.iter().all(|c| c.pass);
    report.status = if all { Status::Verified } else { Status::VerificationFailed };
    report.oracle = Some(OracleSummary { cutoff: space.cutoff(), seed, checks, trajectory: None });
    Ok(Outcome { report, exit: if all { ExitStatus::Success } else { ExitStatus::Failure } })
}

/// Runs `command`, writing the report to `--out`, `outputs.report_path` or
/// stdout, in that order of preference.
pub fn run(command: Command, cfg: &AnalysisConfig, ov: &Overrides) -> Result<ExitStatus> {
    let outcome = match command {
        Command::Analyze => cmd_analyze(cfg)?,
        Command::Scan => cmd_scan(cfg)?,
        Command::Simulate => cmd_simulate(cfg, ov)?,
        Command::Verify => cmd_verify(cfg, ov)?,
    };
    let json = outcome.report.to_json();
    match ov.out.clone().or_else(|| cfg.outputs.report_path.clone()) {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(outcome.exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(mu1: &str) -> AnalysisConfig {
        AnalysisConfig::from_json(&format!(
            r#"{{
            "system": {{"theta": [[0,1],[-1,0]], "R": [[0,0],[0,0]], "M": [[1,0],[0,1]], "J": [[0,1],[-1,0]]}},
            "perturbation": {{"terms": [{{"r": 1, "lambda": [0.7071067811865476, 0]}}]}},
            "parameters": {{"mu1": {mu1}, "gamma": 2}}
        }}"#
        ))
        .unwrap()
    }

    #[test]
    fn desk_analysis() {
        let out = cmd_analyze(&desk("1")).unwrap();
        assert_eq!(out.exit, ExitStatus::Success);
        let cert = out.report.certificate.unwrap();
        assert!((cert.ms_bound - 6.0).abs() < 1e-9);
        assert!((cert.gamma_star - 3.0).abs() < 1e-9);
    }

    #[test]
    fn scan_marks_best_point() {
        let out = cmd_scan(&desk("[0.5, 1, 1.5]")).unwrap();
        let scan = out.report.scan.unwrap();
        assert_eq!(scan.iter().filter(|p| p.best).count(), 1);
        assert!(scan[0].best);
    }

    #[test]
    fn default_mu1_is_minus_abscissa() {
        let sys = Setup::new(&desk("1")).unwrap().sys;
        assert!((default_mu1(&sys).unwrap() - 2.0).abs() < 1e-12);
    }
}
