use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::{FockModel, FockSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::lmi::{gronwall_envelope, StabilityCertificate};
use crate::system::QuantumLinearSystem;
use crate::weyl::TrigPerturbation;

pub const TRACE_DRIFT_TOL: f64 = 1e-6;
pub const CUTOFF_LEAK_TOL: f64 = 1e-4;
/// Fraction of each mode's levels watched for leakage.
pub const LEAK_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Vacuum,
    /// Product of coherent states with the given amplitudes `α` per mode.
    Coherent(Vec<C64>),
    Density(CMat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    /// Output times, strictly increasing and starting at 0.
    pub times: Vec<f64>,
    /// Largest RK4 step; each output interval is split evenly.
    pub dt: f64,
}

impl EvolveOptions {
    /// `count + 1` evenly spaced output times on `[0, t_final]`.
    pub fn uniform(t_final: f64, count: usize, dt: f64) -> Self {
        let times = (0..=count).map(|i| t_final * i as f64 / count as f64).collect();
        Self { times, dt }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `⟨X⟩`.
    pub mean: DVector<f64>,
    /// `Re Tr(ρ X Xᵀ)`.
    pub p: RMat,
    /// `⟨Π, P⟩` when a certificate is attached.
    pub v: Option<f64>,
    /// Gronwall bound at `t` when a certificate is attached.
    pub envelope: Option<f64>,
    /// Largest `|Tr ρ − 1|` seen before renormalization since the previous point.
    pub trace_error: f64,
    /// Population in the top Fock levels.
    pub leak: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub final_rho: CMat,
    pub certificate: Option<StabilityCertificate>,
}

impl Trajectory {
    /// Largest `V(t) − envelope(t)`; `None` without a certificate.
    pub fn max_envelope_violation(&self) -> Option<f64> {
        self.points.iter().map(|p| Some(p.v? - p.envelope?)).try_fold(f64::NEG_INFINITY, |acc, x| x.map(|x| acc.max(x)))
    }

    /// Mean of `V` over the last fifth of the output grid.
    pub fn stationary_v(&self) -> Option<f64> {
        let tail = (self.points.len() / 5).max(1);
        let vs: Option<Vec<f64>> = self.points[self.points.len() - tail..].iter().map(|p| p.v).collect();
        vs.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn max_trace_error(&self) -> f64 {
        self.points.iter().map(|p| p.trace_error).fold(0.0, f64::max)
    }

    /// Largest relative error of central-difference `d⟨X⟩/dt` against `a⟨X⟩`.
    pub fn first_moment_residual(&self, a: &RMat) -> f64 {
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for w in self.points.windows(3) {
            let fd = (&w[2].mean - &w[0].mean) / (w[2].t - w[0].t);
            let model = a * &w[1].mean;
            err = err.max((fd - &model).norm());
            scale = scale.max(model.norm());
        }
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }
}

fn validate_density(rho: &CMat, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidState(format!("density matrix must be {dim}x{dim}")));
    }
    if linalg::herm_residual(rho) > 1e-12 {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let tr = linalg::trace_c(rho);
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    if linalg::herm_min_eigenvalue(rho) < -1e-10 {
        return Err(Error::InvalidState("density matrix is not positive".into()));
    }
    Ok(())
}

fn coherent_vector(alpha: C64, levels: usize) -> DVector<C64> {
    let mut v = DVector::zeros(levels);
    let mut term = C64::new(1.0, 0.0);
    for k in 0..levels {
        if k > 0 {
            term *= alpha / (k as f64).sqrt();
        }
        v[k] = term;
    }
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

fn initial_density(state: &InitialState, space: &FockSpace) -> Result<CMat> {
    let rho = match state {
        InitialState::Vacuum => space.vacuum(),
        InitialState::Coherent(alphas) => {
            if alphas.len() != space.modes() {
                return Err(Error::InvalidState(format!("{} amplitudes for {} modes", alphas.len(), space.modes())));
            }
            let psi = alphas
                .iter()
                .map(|a| coherent_vector(*a, space.cutoff()))
                .reduce(|acc, v| acc.kronecker(&v))
                .expect("at least one mode");
            &psi * psi.adjoint()
        }
        InitialState::Density(rho) => rho.clone(),
    };
    validate_density(&rho, space.dim())?;
    Ok(rho)
}

struct Generator {
    h_eff: CMat,
    jumps: Vec<(CMat, CMat)>,
}

impl Generator {
    fn new(model: &FockModel) -> Self {
        let dim = model.space.dim();
        let mut decay = CMat::zeros(dim, dim);
        for c in &model.jumps {
            decay += c.adjoint() * c;
        }
        let h_eff = model.hamiltonian() - decay * C64::new(0.0, 0.5);
        let jumps = model.jumps.iter().map(|c| (c.clone(), c.adjoint())).collect();
        Self { h_eff, jumps }
    }

    /// `−i(H_eff ρ − ρ H_eff†) + Σ c ρ c†` for Hermitian `ρ`.
    fn apply(&self, rho: &CMat) -> CMat {
        let g = &self.h_eff * rho;
        let mut out = (&g - g.adjoint()) * C64::new(0.0, -1.0);
        for (c, cd) in &self.jumps {
            out += c * rho * cd;
        }
        out
    }

    fn rk4(&self, rho: &CMat, h: f64) -> CMat {
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1 * C64::new(0.5 * h, 0.0)));
        let k3 = self.apply(&(rho + &k2 * C64::new(0.5 * h, 0.0)));
        let k4 = self.apply(&(rho + &k3 * C64::new(h, 0.0)));
        rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }
}

fn moments(rho: &CMat, x: &[CMat]) -> (DVector<f64>, RMat) {
    let n = x.len();
    let mean = DVector::from_fn(n, |j, _| linalg::trace_c(&(rho * &x[j])).re);
    let rx: Vec<CMat> = x.iter().map(|xa| rho * xa).collect();
    let mut p = RMat::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = linalg::trace_c(&(&rx[a] * &x[b])).re;
            p[(a, b)] = v;
            p[(b, a)] = v;
        }
    }
    (mean, p)
}

/// Integrates the master equation of the perturbed system and records moments
/// at each output time.
///
/// Fails with [`Error::TraceDrift`] when a step moves the trace by more than
/// `1e−6` and with [`Error::CutoffLeak`] when the top tenth of the Fock levels
/// holds more than `1e−4` of the population.
pub fn lindblad_evolve(
    sys: &QuantumLinearSystem,
    p: &TrigPerturbation,
    space: FockSpace,
    initial: &InitialState,
    opts: &EvolveOptions,
    certificate: Option<&StabilityCertificate>,
) -> Result<Trajectory> {
    if opts.times.first() != Some(&0.0) || opts.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("output times must start at 0 and increase".into()));
    }
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {} must be positive", opts.dt)));
    }
    let model = FockModel::build(sys, p, space)?;
    let generator = Generator::new(&model);
    let top = space.top_levels(LEAK_BAND);
    let mut rho = initial_density(initial, &space)?;

    let record = |rho: &CMat, t: f64, trace_error: f64| -> Result<TrajectoryPoint> {
        let leak: f64 = top.iter().map(|&i| rho[(i, i)].re).sum();
        if leak > CUTOFF_LEAK_TOL {
            return Err(Error::CutoffLeak { time: t, population: leak });
        }
        let (mean, p) = moments(rho, &model.x);
        let v = certificate.map(|c| linalg::frob(&c.pi, &p));
        Ok(TrajectoryPoint { t, mean, p, v, envelope: None, trace_error, leak })
    };

    let mut points = vec![record(&rho, 0.0, 0.0)?];
    for w in opts.times.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / opts.dt).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        let mut worst = 0.0_f64;
        for s in 0..steps {
            rho = generator.rk4(&rho, h);
            let tr = linalg::trace_c(&rho);
            let err = (tr - C64::new(1.0, 0.0)).norm();
            if err > TRACE_DRIFT_TOL {
                return Err(Error::TraceDrift { time: w[0] + (s + 1) as f64 * h, error: err });
            }
            worst = worst.max(err);
            rho = linalg::hermitize(&(rho / C64::new(tr.re, 0.0)));
        }
        points.push(record(&rho, w[1], worst)?);
    }

    if let Some(cert) = certificate {
        let v0 = points[0].v.expect("certificate attached");
        let bound = gronwall_envelope(cert, v0, &opts.times);
        for (pt, b) in points.iter_mut().zip(bound) {
            pt.envelope = Some(b);
        }
    }
    Ok(Trajectory { points, final_rho: rho, certificate: certificate.cloned() })
}

/// Largest `dV/dt + γV − c` along the trajectory, with `dV/dt` from central
/// differences and `c` the certificate supply.
pub fn dissipation_residual(traj: &Trajectory, cert: &StabilityCertificate) -> f64 {
    traj.points
        .windows(3)
        .filter_map(|w| {
            let dv = (w[2].v? - w[0].v?) / (w[2].t - w[0].t);
            Some(dv + cert.gamma * w[1].v? - cert.supply)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.12e}")).unwrap_or_default()
}

/// Columns `t, V, envelope, P11, P12, …, trace_error`, `P` row-major.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = traj.points.first().map(|p| p.p.nrows()).unwrap_or(0);
    let mut header = vec!["t".to_string(), "V".into(), "envelope".into()];
    for a in 1..=n {
        for b in 1..=n {
            header.push(format!("P{a}{b}"));
        }
    }
    header.push("trace_error".into());
    w.write_record(&header)?;
    for pt in &traj.points {
        let mut row = vec![format!("{:.12e}", pt.t), fmt_opt(pt.v), fmt_opt(pt.envelope)];
        for a in 0..n {
            for b in 0..n {
                row.push(format!("{:.12e}", pt.p[(a, b)]));
            }
        }
        row.push(format!("{:.3e}", pt.trace_error));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::s2;
    use crate::system::{build_system, nominal_steady_covariance};

    fn rotating() -> QuantumLinearSystem {
        build_system(s2(), RMat::identity(2, 2), RMat::identity(2, 2), s2()).unwrap()
    }

    #[test]
    fn first_moments_follow_the_drift() {
        let sys = rotating();
        let space = FockSpace::new(1, 30).unwrap();
        let opts = EvolveOptions::uniform(1.0, 200, 0.002);
        let traj = lindblad_evolve(
            &sys,
            &TrigPerturbation::empty(),
            space,
            &InitialState::Coherent(vec![C64::new(1.0, 0.5)]),
            &opts,
            None,
        )
        .unwrap();
        let res = traj.first_moment_residual(sys.a());
        assert!(res < 1e-4, "first-moment residual {res}");
    }

    #[test]
    fn vacuum_is_stationary_for_the_nominal_desk_system() {
        let sys = build_system(s2(), RMat::zeros(2, 2), RMat::identity(2, 2), s2()).unwrap();
        let space = FockSpace::new(1, 12).unwrap();
        let traj = lindblad_evolve(
            &sys,
            &TrigPerturbation::empty(),
            space,
            &InitialState::Vacuum,
            &EvolveOptions::uniform(0.5, 5, 0.005),
            None,
        )
        .unwrap();
        let ss = nominal_steady_covariance(&sys).unwrap();
        for pt in &traj.points {
            assert!((&pt.p - &ss.p).norm() < 1e-10);
        }
    }

    #[test]
    fn leak_is_reported() {
        let sys = rotating();
        let space = FockSpace::new(1, 8).unwrap();
        let err = lindblad_evolve(
            &sys,
            &TrigPerturbation::empty(),
            space,
            &InitialState::Coherent(vec![C64::new(2.0, 0.0)]),
            &EvolveOptions::uniform(0.1, 1, 0.01),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CutoffLeak { .. }));
    }

    #[test]
    fn csv_layout() {
        let sys = rotating();
        let traj = lindblad_evolve(
            &sys,
            &TrigPerturbation::empty(),
            FockSpace::new(1, 8).unwrap(),
            &InitialState::Vacuum,
            &EvolveOptions::uniform(0.1, 2, 0.01),
            None,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,V,envelope,P11,P12,P21,P22,trace_error");
        assert_eq!(lines.count(), 3);
    }
}
