use proptest::prelude::*;

use regan::cli::validate_config;
use regan::coeff::make_trig_poly_family;
use regan::dynsys::{propagate, reduced_system, PropagateOptions};
use regan::moments::verify_r_identity;
use regan::pdelab::{decompose_circle, GradientField, Grid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn r_identity_holds_for_random_fields(seed in 0u64..10_000, degree in 2u32..6, amp in 0.01f64..0.2, k in 0i32..12) {
        let field = make_trig_poly_family::<f64>(seed, degree, amp).unwrap();
        let err = verify_r_identity(&field, 2f64.powi(-k)).unwrap();
        prop_assert!(err <= 1e-10, "{}", err);
    }

    #[test]
    fn affine_gradients_decompose_exactly(
        c in prop::array::uniform2(-2.0f64..2.0),
        m in prop::array::uniform4(-2.0f64..2.0),
        r in 0.05f64..0.3,
    ) {
        let grid = Grid::new(0.6875, 1.0 / 64.0).unwrap();
        let g = GradientField::from_fn(grid, |x, y| [c[0] + m[0] * x + m[1] * y, c[1] + m[2] * x + m[3] * y]);
        let d = decompose_circle(&g, r, 64);
        let want = [m[0], m[2], m[1], m[3]];
        for k in 0..2 {
            prop_assert!((d.u0[k] - c[k]).abs() <= 1e-12);
        }
        for k in 0..4 {
            prop_assert!((d.v[k] - want[k]).abs() <= 1e-11, "{:?} vs {:?}", d.v, want);
        }
        prop_assert!(d.w.iter().all(|w| w[0].abs() <= 1e-11 && w[1].abs() <= 1e-11));
        prop_assert!(d.reconstruction_error <= 1e-12);
    }

    #[test]
    fn propagation_round_trip_is_identity(seed in 0u64..1000, s in 0.0f64..5.0, dt in 0.5f64..10.0) {
        let sys = reduced_system(&make_trig_poly_family::<f64>(seed, 3, 0.1).unwrap());
        let opts = PropagateOptions::new(1e-9);
        let fwd = propagate(&sys, s, s + dt, &opts).unwrap().phi;
        let back = propagate(&sys, s + dt, s, &opts).unwrap().phi;
        let err = (back * fwd - nalgebra::Matrix4::identity()).abs().max();
        prop_assert!(err <= 1e-7, "{}", err);
    }

    #[test]
    fn nonpositive_tolerances_are_rejected(tol in -1.0f64..=0.0, slack in -1.0f64..=0.0) {
        let raw = format!(
            r#"{{"schema": 1, "families": [{{"name": "laplacian"}}], "criteria": {{"tol": {tol}}}, "validate": {{"slack": {slack}}}}}"#
        );
        let err = validate_config(&raw).unwrap_err().to_string();
        prop_assert!(err.contains("criteria") && err.contains("validate"), "{}", err);
    }

    #[test]
    fn positive_tolerances_are_accepted(tol in 1e-8f64..0.5) {
        let raw = format!(r#"{{"schema": 1, "families": [{{"name": "laplacian"}}], "analyses": ["criteria"], "criteria": {{"tol": {tol}}}}}"#);
        let res = validate_config(&raw);
        prop_assert!(res.is_ok(), "{}", res.unwrap_err());
    }
}
