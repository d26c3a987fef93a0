//! Coordinate descent over the free parameters `(ω, ν)` of a trigonometric
//! envelope, minimizing the mean-square bound at `γ = ½γ*`.

use super::{solve_certificate_default, StabilityCertificate};
use crate::error::{Error, Result};
use crate::system::QuantumLinearSystem;
use crate::weyl::{envelope_augmented, EnvelopePart, FreeParameters, PerturbationEnvelope, TrigPerturbation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_sweeps: usize,
    /// Initial multiplicative step, applied as `exp(±step)`.
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { max_sweeps: 50, initial_step: 1.0, min_step: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub params: FreeParameters,
    pub envelope: PerturbationEnvelope,
    pub certificate: StabilityCertificate,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
enum Coord {
    Omega(usize),
    Nu(usize, usize),
}

fn get(params: &FreeParameters, c: Coord) -> f64 {
    match c {
        Coord::Omega(k) => params.omegas[k],
        Coord::Nu(j, k) => params.nus[(j, k)],
    }
}

fn set(params: &mut FreeParameters, c: Coord, v: f64) {
    match c {
        Coord::Omega(k) => params.omegas[k] = v,
        Coord::Nu(j, k) => {
            params.nus[(j, k)] = v;
            params.nus[(k, j)] = v;
        }
    }
}

pub fn refine_parameters(
    sys: &QuantumLinearSystem,
    p: &TrigPerturbation,
    mu1: f64,
    initial: &FreeParameters,
    error: Option<&EnvelopePart>,
    opts: &RefineOptions,
) -> Result<Refined> {
    let evaluate = |params: &FreeParameters| -> Result<(PerturbationEnvelope, StabilityCertificate)> {
        let env = envelope_augmented(p, sys.theta(), mu1, params, error)?;
        let cert = solve_certificate_default(sys, &env, None)?;
        Ok((env, cert))
    };

    let mut params = initial.clone();
    let (mut envelope, mut certificate) = evaluate(&params)?;

    let parts = p.len() + usize::from(error.is_some());
    let mut coords: Vec<Coord> =
        p.terms().iter().enumerate().filter(|(_, t)| t.phi != 0.0).map(|(k, _)| Coord::Omega(k)).collect();
    for k in 1..parts {
        for j in 0..k {
            coords.push(Coord::Nu(j, k));
        }
    }
    if coords.is_empty() {
        return Ok(Refined { params, envelope, certificate, sweeps: 0 });
    }

    let mut step = opts.initial_step;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps && step >= opts.min_step {
        sweeps += 1;
        let mut improved = false;
        for &c in &coords {
            let base = get(&params, c);
            for factor in [step.exp(), (-step).exp()] {
                let mut trial = params.clone();
                set(&mut trial, c, base * factor);
                match evaluate(&trial) {
                    Ok((env, cert)) if cert.ms_bound < certificate.ms_bound => {
                        params = trial;
                        envelope = env;
                        certificate = cert;
                        improved = true;
                        break;
                    }
                    Ok(_) | Err(Error::Infeasible { .. }) | Err(Error::IndefinitePi { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Refined { params, envelope, certificate, sweeps })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::linalg::{s2, RMat};
    use crate::system::build_system;
    use crate::weyl::TrigTerm;

    #[test]
    fn refinement_never_worsens_the_bound() {
        let sys = build_system(s2(), RMat::zeros(2, 2), RMat::identity(2, 2), s2()).unwrap();
        let p = TrigPerturbation::new(vec![
            TrigTerm::new(0.3, DVector::from_vec(vec![0.5, 0.0]), 1.0),
            TrigTerm::new(0.2, DVector::from_vec(vec![0.0, 0.4]), 2.0),
        ])
        .unwrap();
        let start = FreeParameters::defaults(2, 2);
        let env0 = envelope_augmented(&p, sys.theta(), 1.0, &start, None).unwrap();
        let cert0 = solve_certificate_default(&sys, &env0, None).unwrap();
        let refined = refine_parameters(&sys, &p, 1.0, &start, None, &RefineOptions::default()).unwrap();
        assert!(refined.certificate.ms_bound <= cert0.ms_bound);
        assert!(refined.certificate.ms_bound < cert0.ms_bound, "expected a strict improvement");
        assert!(refined.params.omegas.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn zero_phase_single_term_has_nothing_to_tune() {
        let sys = build_system(s2(), RMat::zeros(2, 2), RMat::identity(2, 2), s2()).unwrap();
        let p = TrigPerturbation::new(vec![TrigTerm::cosine(DVector::from_vec(vec![0.5, 0.0]))]).unwrap();
        let refined =
            refine_parameters(&sys, &p, 1.0, &FreeParameters::defaults(1, 1), None, &RefineOptions::default()).unwrap();
        assert_eq!(refined.sweeps, 0);
    }
}
