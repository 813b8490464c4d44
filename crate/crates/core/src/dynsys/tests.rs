use std::sync::Arc;

use super::*;
use crate::coeff::{builtin, make_harmonic_family, make_radial_family, Target};
use crate::linalg::inf_norm;

fn log_profile(gamma: f64, shift: f64) -> Profile {
    Profile::LogInverse { gamma, shift }
}

fn analytic(gamma: f64) -> ReducedSystem<f64> {
    ReducedSystem::new(Arc::new(AnalyticMoments::a_cos2(log_profile(gamma, 0.0))))
}

#[test]
fn laplacian_systems_are_trivial() {
    let f = CoefficientField::<f64>::laplacian();
    let red = reduced_system(&f);
    assert!(max_abs(&red.matrix(3.0).unwrap()) < 1e-16);
    let full = full_system(&f);
    assert!(max_abs(&(full.matrix(3.0).unwrap() - m_inf::<f64>())) < 1e-14);
    assert!(max_abs(&full.r1(3.0).unwrap()) < 1e-14);
    let id = propagate(&red, 0.0, 10.0, &PropagateOptions::new(1e-10)).unwrap();
    assert!(max_abs(&(id.phi - Mat4::identity())) < 1e-15);
}

#[test]
fn reduced_matrix_column_for_log_family() {
    let f = make_harmonic_family::<f64>(Target::A, log_profile(0.4, 0.0), 2, 0.0).unwrap();
    let red = reduced_system(&f);
    let t = 4.0;
    let g = 0.4 / (1.0 + t);
    let m = red.matrix(t).unwrap();
    let want = [-g / 2.0, 0.0, 0.0, g / 2.0];
    for i in 0..4 {
        assert!((m[(i, 0)] - want[i]).abs() < 1e-12);
        for j in 1..4 {
            assert!(m[(i, j)].abs() < 1e-14);
        }
    }
    assert!(max_abs(&m) <= 4.0 * (1.0 + red.epsilon(t)));
}

#[test]
fn radial_reduced_matrix_vanishes() {
    let f = make_radial_family::<f64>(Some(Profile::Power { scale: 0.3, alpha: 0.5 }), None, None).unwrap();
    assert!(max_abs(&reduced_system(&f).matrix(2.0).unwrap()) < 1e-15);
}

#[test]
fn closed_form_log_family() {
    for gamma in [0.5, 1.0, 2.0] {
        let sys = analytic(gamma);
        for (s, t) in [(0.0, 30.0), (3.0, 17.0), (10.0, 12.5)] {
            let phi = propagate(&sys, s, t, &PropagateOptions::new(1e-10)).unwrap().phi;
            let p11 = ((1.0 + t) / (1.0 + s)).powf(gamma / 2.0);
            assert!((phi[(0, 0)] - p11).abs() <= 1e-8 * p11, "gamma {gamma}: {} vs {p11}", phi[(0, 0)]);
            assert!((phi[(3, 0)] + (p11 - 1.0)).abs() <= 1e-8 * p11);
        }
    }
}

#[test]
fn constant_system_exponential() {
    let c = 0.7;
    let sys = ConstantSystem(Mat4::<f64>::identity() * c);
    let phi = propagate(&sys, 1.0, 6.0, &PropagateOptions::new(1e-10)).unwrap().phi;
    let want = (-c * 5.0f64).exp();
    assert!(max_abs(&(phi - Mat4::identity() * want)) < 1e-9 * want.max(1e-3));
}

#[test]
fn semigroup_and_time_reversal() {
    let f = builtin("trig_poly").unwrap().build::<f64>().unwrap();
    let sys = reduced_system(&f);
    let rtol = 1e-8;
    let opts = PropagateOptions::new(rtol);
    let (s, u, t) = (0.5, 3.0, 8.0);
    let ts = propagate(&sys, s, t, &opts).unwrap().phi;
    let us = propagate(&sys, s, u, &opts).unwrap().phi;
    let tu = propagate(&sys, u, t, &opts).unwrap().phi;
    assert!(max_abs(&(ts - tu * us)) <= 10.0 * rtol * inf_norm(&ts));
    let st = propagate(&sys, t, s, &opts).unwrap().phi;
    assert!(max_abs(&(ts * st - Mat4::identity())) <= 10.0 * rtol);
}

#[test]
fn rtol_range_enforced() {
    let sys = ConstantSystem(Mat4::<f64>::zeros());
    assert!(propagate(&sys, 0.0, 1.0, &PropagateOptions::new(1e-2)).is_err());
    assert!(propagate(&sys, 0.0, 1.0, &PropagateOptions::new(1e-13)).is_err());
}

#[test]
fn samples_land_exactly() {
    let sys = analytic(1.0);
    let opts = PropagateOptions::new(1e-9).with_samples(vec![0.0, 0.3, 2.0, 5.0]);
    let out = propagate(&sys, 0.0, 5.0, &opts).unwrap();
    let times: Vec<f64> = out.samples.iter().map(|(t, _)| *t).collect();
    assert_eq!(times, vec![0.0, 0.3, 2.0, 5.0]);
    assert_eq!(out.samples[0].1, Mat4::identity());
}

#[test]
fn full_system_splitting() {
    let f = builtin("dini_power").unwrap().build::<f64>().unwrap();
    let full = full_system(&f);
    for t in [1.0, 5.0, 10.0] {
        let sp = full.split(t).unwrap();
        let eps = full.epsilon(t);
        assert!(max_abs(&(sp.m - m_inf::<f64>() - sp.s1 - sp.s2)) < 1e-15);
        assert!(max_abs(&sp.s1) <= 10.0 * eps);
        assert!(max_abs(&sp.s2) <= 10.0 * eps * eps + 1e-14);
    }
}

#[test]
fn reduction_residual_is_second_order() {
    let f = make_harmonic_family::<f64>(Target::A, Profile::Power { scale: 0.2, alpha: 0.0001 }, 2, 0.0).unwrap();
    let full = full_system(&f);
    let red = reduced_system(&f);
    let t = 1.0;
    let diff = max_abs(&(full.r1(t).unwrap() - red.matrix(t).unwrap()));
    let eps = full.epsilon(t);
    assert!(diff <= 10.0 * eps * eps, "{diff} vs {}", eps * eps);
    let grid: Vec<f64> = (1..=30).map(|k| k as f64).collect();
    for name in ["dini_power", "log_unstable", "oscillatory"] {
        let f = builtin(name).unwrap().build::<f64>().unwrap();
        let tab = reduction_check(&full_system(&f), &reduced_system(&f), &grid).unwrap();
        assert!(tab.bounded, "{name}: {:?}", tab.rows);
        assert!(tab.bound < 10.0, "{name}: {}", tab.bound);
    }
}

#[test]
fn probes_on_oracles() {
    let settings = ProbeSettings::default();
    let zero = ConstantSystem(Mat4::<f64>::zeros());
    let st = uniform_stability_probe(&zero, &settings).unwrap();
    assert_eq!(st.verdict, StabilityVerdict::Stable);
    assert_eq!(st.kappa_max, 1.0);
    let co = asymptotic_constancy_probe(&zero, &unit_basis::<f64, 4>(), &settings).unwrap();
    assert_eq!(co.verdict, ConstancyVerdict::Constant);

    let unstable = analytic(1.0);
    assert_eq!(uniform_stability_probe(&unstable, &settings).unwrap().verdict, StabilityVerdict::Unstable);
    let co = asymptotic_constancy_probe(&unstable, &unit_basis::<f64, 4>(), &settings).unwrap();
    assert_eq!(co.verdict, ConstancyVerdict::Divergent);

    let osc = ReducedSystem::new(Arc::new(AnalyticMoments::a_cos2(Profile::OscillatoryLog {
        gamma: 1.0,
        eta: 1.0,
        shift: 0.0,
    })));
    assert_eq!(uniform_stability_probe(&osc, &settings).unwrap().verdict, StabilityVerdict::Stable);
    let co = asymptotic_constancy_probe(&osc, &unit_basis::<f64, 4>(), &settings).unwrap();
    assert_eq!(co.verdict, ConstancyVerdict::Constant, "{:?}", co.rows);
}

#[test]
fn f32_propagation() {
    let sys = ReducedSystem::new(Arc::new(AnalyticMoments::<f32>::a_cos2(log_profile(1.0, 0.0))));
    let phi = propagate(&sys, 0.0f32, 10.0, &PropagateOptions::new(1e-5)).unwrap().phi;
    let want = 11f32.sqrt();
    assert!((phi[(0, 0)] - want).abs() < 1e-3 * want);
}
