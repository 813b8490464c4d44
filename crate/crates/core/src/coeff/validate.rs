//! Numerical checks of the normalization bound, ellipticity and the
//! integrability class of the modulus.

use serde::Serialize;

use super::{CoefficientField, ModulusOfContinuity};
use crate::error::{Error, Result};
use crate::quadrature::{GAUSS_LEGENDRE_8, MIN_CIRCLE_NODES};
use crate::scalar::Real;
use crate::tail::{analyze_nonnegative, TailAnalysis, TailOptions, Verdict, WindowLayout};

/// Absolute slack of the normalization bound on top of the declared slack.
pub const NORMALIZATION_ABS_TOL: f64 = 1e-12;

/// Dyadic samples `2^{-k}` used for the modulus monotonicity and trend checks.
const MODULUS_CHECK_DEPTH: i32 = 60;
const TREND_SAMPLES: i32 = 10;

/// Radii `2^{-k}`, `k = 0..count`.
pub fn dyadic_radii(count: usize) -> Vec<f64> {
    (0..count).map(|k| 2f64.powi(-(k as i32))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusCheck {
    pub r: f64,
    pub omega: f64,
    /// `max_phi (|a - 1| + |b| + |c - 1|) - omega(r)`.
    pub max_excess: f64,
    pub min_discriminant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<RadiusCheck>,
    pub max_violation: f64,
    pub min_discriminant: f64,
    pub ellipticity_lower: f64,
    pub modulus_nondecreasing: bool,
    pub modulus_vanishes: bool,
    pub normalization_ok: bool,
    pub ellipticity_ok: bool,
    pub pass: bool,
}

/// Samples the field on `nodes_per_circle` uniform nodes of each circle.
pub fn validate_field<T: Real>(
    field: &CoefficientField<T>,
    radii: &[f64],
    nodes_per_circle: usize,
    slack: f64,
) -> Result<ValidationReport> {
    if nodes_per_circle < MIN_CIRCLE_NODES {
        return Err(Error::InvalidArgument(format!("nodes_per_circle must be >= {MIN_CIRCLE_NODES}")));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::InvalidArgument(format!("radius {r} outside (0, 1]")));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let rt = T::lit(r);
        let omega = field.modulus.eval(rt);
        check_value(r, omega, "modulus")?;
        let mut dev_max = T::neg_infinity();
        let mut disc_min = T::infinity();
        for k in 0..nodes_per_circle {
            let phi = T::TAU() * T::lit(k as f64) / T::lit(nodes_per_circle as f64);
            let co = field.at_polar(rt, phi);
            for v in [co.a, co.b, co.c] {
                check_value(r, v, "coefficient")?;
            }
            dev_max = dev_max.max(co.deviation());
            disc_min = disc_min.min(co.discriminant());
        }
        rows.push(RadiusCheck {
            r,
            omega: omega.as_f64(),
            max_excess: (dev_max - omega).as_f64(),
            min_discriminant: disc_min.as_f64(),
        });
    }
    let max_violation = rows.iter().map(|r| r.max_excess).fold(0.0f64, f64::max);
    let min_discriminant = rows.iter().map(|r| r.min_discriminant).fold(f64::INFINITY, f64::min);
    let lam = field.ellipticity_lower.as_f64();
    let (modulus_nondecreasing, modulus_vanishes) = modulus_shape(&field.modulus)?;
    let normalization_ok = max_violation <= NORMALIZATION_ABS_TOL + slack;
    let ellipticity_ok = lam > 0.0 && min_discriminant >= lam - NORMALIZATION_ABS_TOL;
    Ok(ValidationReport {
        rows,
        max_violation,
        min_discriminant,
        ellipticity_lower: lam,
        modulus_nondecreasing,
        modulus_vanishes,
        normalization_ok,
        ellipticity_ok,
        pass: normalization_ok && ellipticity_ok && modulus_nondecreasing && modulus_vanishes,
    })
}

fn check_value<T: Real>(r: f64, v: T, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Evaluator { radius: r, reason: format!("{what} is not finite") })
    }
}

/// Monotonicity on `2^{-k}` and a strictly decreasing (or zero) trend over the
/// deepest samples.
fn modulus_shape<T: Real>(m: &ModulusOfContinuity<T>) -> Result<(bool, bool)> {
    let vals: Vec<f64> = (0..=MODULUS_CHECK_DEPTH)
        .map(|k| {
            let r = 2f64.powi(-k);
            let v = m.eval(T::lit(r)).as_f64();
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(Error::Evaluator { radius: r, reason: format!("modulus value {v} is not a nonnegative real") })
            }
        })
        .collect::<Result<_>>()?;
    let rel = T::epsilon().as_f64() * 8.0;
    let nondecreasing = vals.windows(2).all(|p| p[1] <= p[0] * (1.0 + rel));
    let tail = &vals[vals.len() - TREND_SAMPLES as usize..];
    let vanishes = tail.iter().all(|v| *v == 0.0) || tail.windows(2).all(|p| p[1] < p[0]);
    Ok((nondecreasing, vanishes))
}

/// Dini and square-Dini classification of a modulus.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusClassification {
    pub dini: TailAnalysis,
    pub square_dini: TailAnalysis,
}

impl ModulusClassification {
    pub fn verdicts(&self) -> (Verdict, Verdict) {
        (self.dini.verdict, self.square_dini.verdict)
    }
}

/// Classifies `int_0^1 omega dr / r` and `int_0^1 omega^2 dr / r` by window
/// sums over the dyadic annuli `(2^{-k-1}, 2^{-k})`.
pub fn classify_modulus<T: Real>(m: &ModulusOfContinuity<T>, tol: f64) -> Result<ModulusClassification> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let layout = WindowLayout::for_precision::<T>();
    let mut w1 = Vec::with_capacity(layout.windows);
    let mut w2 = Vec::with_capacity(layout.windows);
    for k in 0..layout.windows {
        let (lo, hi) = WindowLayout::edges::<T>(k);
        let (mut s1, mut s2) = (T::zero(), T::zero());
        for (t, w) in GAUSS_LEGENDRE_8.panel(lo, hi) {
            let r = (-t).exp();
            let v = m.eval(r);
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::Evaluator { radius: r.as_f64(), reason: format!("modulus value {v}") });
            }
            s1 += w * v;
            s2 += w * v * v;
        }
        w1.push(s1);
        w2.push(s2);
    }
    let opts = TailOptions { tol, ..TailOptions::default() };
    Ok(ModulusClassification {
        dini: analyze_nonnegative(&w1, &layout, &opts),
        square_dini: analyze_nonnegative(&w2, &layout, &opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{make_harmonic_family, AnalyticTail, Profile, Target};

    #[test]
    fn laplacian_passes() {
        let f = CoefficientField::<f64>::laplacian();
        let rep = validate_field(&f, &dyadic_radii(20), 256, 0.0).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.max_violation, 0.0);
        assert_eq!(rep.min_discriminant, 4.0);
    }

    #[test]
    fn log_family_discriminant() {
        let p = Profile::LogInverse { gamma: 0.4, shift: 0.0 };
        let f = make_harmonic_family::<f64>(Target::A, p, 2, 0.0).unwrap();
        let rep = validate_field(&f, &dyadic_radii(20), 256, 0.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(f.ellipticity_lower <= 4.0 * (1.0 - 0.2));
        for row in &rep.rows {
            let g = 0.4 / (1.0 + (1.0 / row.r).ln());
            assert!((row.min_discriminant - 4.0 * (1.0 - g)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_b_violates_normalization_everywhere_small() {
        let m = ModulusOfContinuity::from_tail(AnalyticTail::Power { scale: 0.25, alpha: 0.5 });
        let f = CoefficientField::new("b03", |_, _| 1.0, |_, _| 0.3, |_, _| 1.0, m, 3.0);
        let rep = validate_field(&f, &dyadic_radii(20), 64, 0.0).unwrap();
        assert!(!rep.pass && !rep.normalization_ok);
        assert!(rep.rows.iter().all(|r| r.max_excess > 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = CoefficientField::<f64>::laplacian();
        assert!(validate_field(&f, &[0.5], 8, 0.0).is_err());
        assert!(validate_field(&f, &[1.5], 16, 0.0).is_err());
        assert!(classify_modulus(&f.modulus, 0.0).is_err());
    }

    #[test]
    fn power_and_log_classification() {
        for alpha in [0.25, 0.5, 1.0] {
            let m = ModulusOfContinuity::<f64>::new("pow", move |r: f64| r.powf(alpha));
            let c = classify_modulus(&m, 1e-2).unwrap();
            assert_eq!(c.verdicts(), (Verdict::Converged, Verdict::Converged));
            assert!((c.dini.total().unwrap() - 1.0 / alpha).abs() < 1e-8);
            assert!((c.square_dini.total().unwrap() - 0.5 / alpha).abs() < 1e-8);
        }
        let m = ModulusOfContinuity::<f64>::new("log", |r: f64| 1.0 / (1.0 + (1.0 / r).ln()));
        let c = classify_modulus(&m, 1e-2).unwrap();
        assert_eq!(c.verdicts(), (Verdict::Diverged, Verdict::Converged));
        let sq = c.square_dini.total().unwrap();
        assert!((sq - 1.0).abs() < 2e-4, "{sq}");
        let z = classify_modulus(&ModulusOfContinuity::<f64>::zero(), 1e-2).unwrap();
        assert_eq!(z.verdicts(), (Verdict::Converged, Verdict::Converged));
    }

    #[test]
    fn evaluator_failure_names_radius() {
        let m = ModulusOfContinuity::<f64>::new("bad", |r: f64| if r < 1e-3 { f64::NAN } else { r });
        match classify_modulus(&m, 1e-2) {
            Err(Error::Evaluator { radius, .. }) => assert!(radius < 1e-3 && radius > 1e-4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn f32_classification() {
        let m = ModulusOfContinuity::<f32>::new("pow", |r: f32| r.sqrt());
        let c = classify_modulus(&m, 1e-2).unwrap();
        assert_eq!(c.verdicts(), (Verdict::Converged, Verdict::Converged));
        assert!((c.dini.total().unwrap() - 2.0).abs() < 1e-4);
    }
}
