//! Randomized invariants of the core crate.

use std::f64::consts::TAU;

use proptest::prelude::*;
use qlambda_core::amplitudes::{
    compton_pair_a, compton_pair_b, compton_total, moller_total, AmplitudeConfig, ComptonStates, MollerSpins,
};
use qlambda_core::dirac::{spin_sum, spin_sum_closed_form, Normalization, Spin};
use qlambda_core::dynamics::{evolve, magnus_second_order, LevelSystem};
use qlambda_core::kinematics::{compton_kinematics, moller_kinematics};
use qlambda_core::lorentz::{eta, minkowski_dot};
use qlambda_core::vacpol::shift_density;
use qlambda_core::{Boost, Constants, FourVector, ThreeVector, C64};

fn three(max: f64) -> impl Strategy<Value = ThreeVector> {
    (-max..max, -max..max, -max..max).prop_map(|(x, y, z)| ThreeVector::new(x, y, z))
}

fn boost() -> impl Strategy<Value = Boost> {
    (three(1.0), 0.0..0.9f64).prop_map(|(axis, beta)| {
        if axis.norm() < 1e-3 {
            Boost::identity()
        } else {
            Boost::along(axis, beta).unwrap()
        }
    })
}

fn spin() -> impl Strategy<Value = Spin> {
    prop_oneof![Just(Spin::Up), Just(Spin::Down)]
}

fn compton_states() -> impl Strategy<Value = ComptonStates> {
    (spin(), spin(), 1u8..=2, 1u8..=2).prop_map(|(spin_in, spin_out, pol_in, pol_out)| ComptonStates {
        spin_in,
        spin_out,
        pol_in,
        pol_out,
    })
}

fn moller_spins() -> impl Strategy<Value = MollerSpins> {
    (spin(), spin(), spin(), spin()).prop_map(|(p1, q1, p2, q2)| MollerSpins { p1, q1, p2, q2 })
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boosts_preserve_the_minkowski_product(b in boost(), p in three(5.0), q in three(5.0), m in 0.1..3.0f64) {
        let a = FourVector::on_shell(p, m);
        let c = FourVector::on_shell(q, 0.5 * m);
        let before = minkowski_dot(&a, &c);
        let after = minkowski_dot(&b.apply(&a), &b.apply(&c));
        prop_assert!((before - after).abs() <= 1e-12 * a.max_abs() * c.max_abs() * b.gamma() * b.gamma());
        let back = b.inverse().apply(&b.apply(&a));
        prop_assert!((back - a).max_abs() <= 1e-12 * a.max_abs() * b.gamma() * b.gamma());
    }

    #[test]
    fn eta_of_a_boosted_rest_frame_is_the_inverse_gamma(axis in three(1.0), beta in 0.0..0.95f64, mass in 0.1..10.0f64) {
        prop_assume!(axis.norm() > 1e-3);
        let b = Boost::along(axis, beta).unwrap();
        let moving = b.apply(&FourVector::from_parts(mass, ThreeVector::ZERO));
        prop_assert!((eta(&moving).unwrap() - (1.0 - beta * beta).sqrt()).abs() <= 1e-12);
        prop_assert_eq!(eta(&FourVector::from_parts(mass, ThreeVector::ZERO)).unwrap(), 1.0);
    }

    #[test]
    fn spinor_completeness(p in three(20.0), m in 0.05..5.0f64) {
        let summed = spin_sum(p, m).unwrap();
        let closed = spin_sum_closed_form(p, m, Normalization::Box).unwrap();
        prop_assert!((summed - closed).max_abs() <= 1e-13 * closed.max_abs().max(1.0));
    }

    #[test]
    fn compton_orderings_reproduce_the_propagator(
        w in 0.05..5.0f64, theta in 0.1..3.0f64, b in boost(), st in compton_states(),
    ) {
        let cfg = AmplitudeConfig::default();
        let kin = compton_kinematics(w, theta, &b, cfg.constants.m_e).unwrap();
        let total = compton_total(&kin, &st, &cfg).unwrap();
        let a = compton_pair_a(&kin, &st, &cfg).unwrap();
        let bb = compton_pair_b(&kin, &st, &cfg).unwrap();
        let scale = a.total.norm() + bb.total.norm();
        prop_assert!((total.total - (a.total + bb.total)).norm() <= 1e-14 * scale.max(1e-300));
        for part in [&a, &bb] {
            let err = (part.total - part.closed_form).norm();
            prop_assert!(err <= 1e-9 * part.total.norm().max(1e-12 * scale));
        }
    }

    #[test]
    fn moller_orderings_reproduce_the_propagator(
        e_cm in 2.05..20.0f64, theta in 0.1..3.0f64, b in boost(), sp in moller_spins(),
    ) {
        let cfg = AmplitudeConfig::default();
        let kin = moller_kinematics(e_cm, theta, &b, cfg.constants.m_e).unwrap();
        let r = moller_total(&kin, &sp, &cfg).unwrap();
        prop_assert!(close(r.total, r.closed_form, 1e-9) || r.closed_form.norm() < 1e-12 * r.parts.iter().map(|p| p.value.norm()).sum::<f64>());
    }

    #[test]
    fn pair_shift_density_is_negative(p in three(30.0), k in three(5.0)) {
        prop_assume!(k.norm() > 1e-3);
        let s = shift_density(p, k, k.norm(), &Constants::default()).unwrap();
        prop_assert!(s.shift_density < 0.0);
        prop_assert!(s.eta1 > 0.0 && s.eta1 <= 1.0);
    }

    #[test]
    fn evolution_is_unitary(
        e1 in 0.5..3.0f64, e2 in 0.5..3.0f64, o1 in 0.01..0.3f64, o2 in 0.01..0.3f64, phase in 0.0..TAU,
    ) {
        let sys = LevelSystem::lambda(e1, e2, C64::from_polar(o1, phase), C64::new(o2, 0.0)).unwrap();
        let psi0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let traj = evolve(&sys, &psi0, 40.0, 0.05).unwrap();
        prop_assert!(traj.max_norm_drift() <= 1e-10);
    }

    #[test]
    fn averaged_hamiltonian_matches_quadrature(
        n1 in 1u32..6, n2 in 1u32..6, o1 in 0.01..0.2f64, o2 in 0.01..0.2f64, phase in 0.0..TAU,
    ) {
        prop_assume!(n1 != n2);
        let (e1, e2) = (n1 as f64 * 0.5, n2 as f64 * 0.5);
        let sys = LevelSystem::lambda(e1, e2, C64::from_polar(o1, phase), C64::new(o2, 0.0)).unwrap();
        let avg = magnus_second_order(&sys).unwrap();
        prop_assert!(avg.relative_deviation() <= 1e-9);
    }
}
