use nalgebra::DVector;
use proptest::prelude::*;

use qrstab::linalg::{lyapunov_solve, RMat};
use qrstab::lmi::{apply_lmi_operator, operator_matrix};
use qrstab::system::build_system;
use qrstab::weyl::{to_spectrum, z_atoms, AtomicSpectrum, PerturbationEnvelope, TrigPerturbation, TrigTerm};

fn mat(n: usize, m: usize) -> impl Strategy<Value = RMat> {
    prop::collection::vec(-1.0..1.0f64, n * m).prop_map(move |v| RMat::from_vec(n, m, v))
}

fn antisym(n: usize) -> impl Strategy<Value = RMat> {
    mat(n, n).prop_map(|g| &g - g.transpose())
}

fn sym(n: usize) -> impl Strategy<Value = RMat> {
    mat(n, n).prop_map(|g| (&g + g.transpose()) * 0.5)
}

fn term(n: usize) -> impl Strategy<Value = TrigTerm> {
    (0.1..2.0f64, prop::collection::vec(-2.0..2.0f64, n), 0.0..std::f64::consts::TAU)
        .prop_map(|(r, l, phi)| TrigTerm::new(r, DVector::from_vec(l), phi))
}

fn perturbation(n: usize) -> impl Strategy<Value = TrigPerturbation> {
    prop::collection::vec(term(n), 0..4).prop_map(|t| TrigPerturbation::new(t).unwrap())
}

proptest! {
    #[test]
    fn realizability_holds(
        (theta, r, m, j) in prop_oneof![Just(2usize), Just(4)].prop_flat_map(|n| (antisym(n), sym(n), mat(2, n), antisym(2)))
    ) {
        if let Ok(sys) = build_system(theta.clone(), r, m, j.clone()) {
            let a = sys.a();
            let b = sys.b();
            let res = (a * &theta + &theta * a.transpose() + b * &j * b.transpose()).norm();
            prop_assert!(res <= 1e-10 * (1.0 + a.norm() * theta.norm()));
        }
    }

    #[test]
    fn lyapunov_residual_is_small(g in mat(4, 4), c in sym(4)) {
        // shift to make the matrix Hurwitz
        let a = &g - RMat::identity(4, 4) * (g.norm() + 0.5);
        let x = lyapunov_solve(&a, &c).unwrap();
        let res = (&a * &x + &x * a.transpose() + &c).norm();
        prop_assert!(res <= 1e-10 * (1.0 + c.norm()));
    }

    #[test]
    fn operator_matrix_agrees_with_direct_application(
        a in mat(2, 2), g1 in mat(2, 2), g2 in mat(2, 2), pi in sym(2), mu1 in 0.1..4.0f64
    ) {
        let env = PerturbationEnvelope::new(mu1, vec![g1, g2], 0.0).unwrap();
        let k = operator_matrix(&a, &env).unwrap();
        let diff = (k.apply(&pi) - apply_lmi_operator(&a, &env, &pi)).norm();
        prop_assert!(diff <= 1e-12 * (1.0 + pi.norm() * (1.0 + a.norm() + mu1)));
    }

    #[test]
    fn z_atoms_are_linear_under_union(p1 in perturbation(2), p2 in perturbation(2), theta in antisym(2)) {
        let joint = z_atoms(&p1.union(&p2).unwrap(), &theta).unwrap();
        let mut separate = z_atoms(&p1, &theta).unwrap();
        separate.extend(z_atoms(&p2, &theta).unwrap());
        prop_assert_eq!(joint, separate);
    }

    #[test]
    fn spectra_are_hermitian(p in perturbation(4)) {
        let s = to_spectrum(&p);
        prop_assert_eq!(s.len(), 2 * p.len());
        prop_assert!(AtomicSpectrum::new(s.atoms().to_vec()).is_ok());
    }
}
