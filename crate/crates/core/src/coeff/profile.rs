//! Radial profiles `g(r)` and their closed-form moduli.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Radial profile. In the log-radius variable `t = ln(1/r)`:
///
/// | kind             | `g(e^{-t})`                          |
/// |------------------|--------------------------------------|
/// | `zero`           | `0`                                  |
/// | `power`          | `scale * e^{-alpha t}`               |
/// | `log_inverse`    | `gamma / (1 + shift + t)`            |
/// | `oscillatory_log`| `gamma cos(eta t) / (1 + shift + t)` |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Power {
        #[serde(default = "one")]
        scale: f64,
        alpha: f64,
    },
    LogInverse {
        gamma: f64,
        #[serde(default)]
        shift: f64,
    },
    OscillatoryLog {
        gamma: f64,
        eta: f64,
        #[serde(default)]
        shift: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    pub fn eval<T: Real>(&self, r: T) -> T {
        self.eval_t(-r.ln())
    }

    /// Profile as a function of `t = ln(1/r)`.
    pub fn eval_t<T: Real>(&self, t: T) -> T {
        match *self {
            Profile::Zero => T::zero(),
            Profile::Power { scale, alpha } => T::lit(scale) * (-T::lit(alpha) * t).exp(),
            Profile::LogInverse { gamma, shift } => T::lit(gamma) / (T::one() + T::lit(shift) + t),
            Profile::OscillatoryLog { gamma, eta, shift } => {
                T::lit(gamma) * (T::lit(eta) * t).cos() / (T::one() + T::lit(shift) + t)
            }
        }
    }

    /// Nondecreasing-in-`r` majorant of `|g|`, the declared modulus.
    pub fn envelope(&self) -> AnalyticTail {
        match *self {
            Profile::Zero => AnalyticTail::Zero,
            Profile::Power { scale, alpha } => AnalyticTail::Power { scale: scale.abs(), alpha },
            Profile::LogInverse { gamma, shift } | Profile::OscillatoryLog { gamma, shift, .. } => {
                AnalyticTail::LogInverse { gamma: gamma.abs(), shift }
            }
        }
    }

    /// Structural admissibility of the parameters (signs, finiteness).
    pub fn check(&self) -> Result<(), String> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("profile parameter {name} must be finite"))
            }
        };
        match *self {
            Profile::Zero => Ok(()),
            Profile::Power { scale, alpha } => {
                finite(scale, "scale")?;
                finite(alpha, "alpha")?;
                if alpha <= 0.0 {
                    return Err(format!("power profile needs alpha > 0, got {alpha}"));
                }
                Ok(())
            }
            Profile::LogInverse { gamma, shift } | Profile::OscillatoryLog { gamma, shift, .. } => {
                finite(gamma, "gamma")?;
                finite(shift, "shift")?;
                if shift < 0.0 {
                    return Err(format!("log profile needs shift >= 0, got {shift}"));
                }
                if let Profile::OscillatoryLog { eta, .. } = *self {
                    finite(eta, "eta")?;
                }
                Ok(())
            }
        }
    }
}

/// Closed form of `t -> omega(e^{-t})` for oracle comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticTail {
    Zero,
    /// `scale * r^alpha`
    Power { scale: f64, alpha: f64 },
    /// `gamma / (1 + shift + ln(1/r))`
    LogInverse { gamma: f64, shift: f64 },
}

impl AnalyticTail {
    pub fn eval_t<T: Real>(&self, t: T) -> T {
        match *self {
            AnalyticTail::Zero => T::zero(),
            AnalyticTail::Power { scale, alpha } => T::lit(scale) * (-T::lit(alpha) * t).exp(),
            AnalyticTail::LogInverse { gamma, shift } => T::lit(gamma) / (T::one() + T::lit(shift) + t),
        }
    }

    /// `int_0^1 omega(r) dr / r`, `None` when divergent.
    pub fn dini_integral(&self) -> Option<f64> {
        match *self {
            AnalyticTail::Zero => Some(0.0),
            AnalyticTail::Power { scale, alpha } => Some(scale / alpha),
            AnalyticTail::LogInverse { gamma, .. } => (gamma == 0.0).then_some(0.0),
        }
    }

    /// `int_0^1 omega(r)^2 dr / r`.
    pub fn square_dini_integral(&self) -> Option<f64> {
        match *self {
            AnalyticTail::Zero => Some(0.0),
            AnalyticTail::Power { scale, alpha } => Some(scale * scale / (2.0 * alpha)),
            AnalyticTail::LogInverse { gamma, shift } => Some(gamma * gamma / (1.0 + shift)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_inverse_matches_definition() {
        let p = Profile::LogInverse { gamma: 0.4, shift: 0.0 };
        let r: f64 = 0.01;
        assert!((p.eval(r) - 0.4 / (1.0 + (1.0 / r).ln())).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_envelope_dominates() {
        let p = Profile::OscillatoryLog { gamma: 1.0, eta: 1.0, shift: 1.0 };
        let env = p.envelope();
        for k in 0..200 {
            let t = 0.37 * k as f64;
            assert!(p.eval_t(t).abs() <= env.eval_t(t) + 1e-16);
        }
    }

    #[test]
    fn profile_json_shape() {
        let p: Profile = serde_json::from_str(r#"{"kind":"log_inverse","gamma":0.4}"#).unwrap();
        assert_eq!(p, Profile::LogInverse { gamma: 0.4, shift: 0.0 });
        assert!(serde_json::from_str::<Profile>(r#"{"kind":"power","alpha":0.5,"typo":1}"#).is_err());
    }

    #[test]
    fn closed_form_integrals() {
        assert_eq!(AnalyticTail::Power { scale: 1.0, alpha: 0.5 }.dini_integral(), Some(2.0));
        assert_eq!(AnalyticTail::Power { scale: 1.0, alpha: 0.5 }.square_dini_integral(), Some(1.0));
        let l = AnalyticTail::LogInverse { gamma: 1.0, shift: 0.0 };
        assert_eq!(l.dini_integral(), None);
        assert_eq!(l.square_dini_integral(), Some(1.0));
    }
}
