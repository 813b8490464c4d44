//! Analytic test families and their serializable descriptors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnalyticTail, CoefficientField, ModulusOfContinuity, Profile};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest admissible `|g(r)|` for a single perturbed coefficient.
pub const PROFILE_BOUND: f64 = 0.5;

/// Sample radii `2^{-k/4}`, `k = 0..=PROFILE_SAMPLES`, for the magnitude check.
const PROFILE_SAMPLES: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    A,
    B,
    C,
}

/// One term `amp_cos r^alpha cos(n phi) + amp_sin r^alpha sin(n phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigPolyTerm {
    pub target: Target,
    pub mode: u32,
    pub alpha: f64,
    pub amp_cos: f64,
    pub amp_sin: f64,
}

/// Serializable family description; the `family` key selects the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDescriptor {
    Laplacian {},
    Harmonic {
        target: Target,
        profile: Profile,
        mode: u32,
        #[serde(default)]
        phase: f64,
    },
    Radial {
        #[serde(default)]
        a: Option<Profile>,
        #[serde(default)]
        b: Option<Profile>,
        #[serde(default)]
        c: Option<Profile>,
    },
    TrigPoly {
        seed: u64,
        #[serde(default = "default_degree")]
        degree: u32,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_degree() -> u32 {
    6
}

fn default_amplitude() -> f64 {
    0.2
}

impl FamilyDescriptor {
    pub fn build<T: Real>(&self) -> Result<CoefficientField<T>> {
        match self {
            FamilyDescriptor::Laplacian {} => Ok(CoefficientField::laplacian()),
            FamilyDescriptor::Harmonic { target, profile, mode, phase } => {
                make_harmonic_family(*target, *profile, *mode, *phase)
            }
            FamilyDescriptor::Radial { a, b, c } => make_radial_family(*a, *b, *c),
            FamilyDescriptor::TrigPoly { seed, degree, amplitude } => make_trig_poly_family(*seed, *degree, *amplitude),
        }
    }
}

fn check_profile(p: &Profile) -> Result<f64> {
    p.check().map_err(Error::FamilyRejected)?;
    let mut sup = 0.0f64;
    for k in 0..=PROFILE_SAMPLES {
        let r = 2f64.powf(-(k as f64) / 4.0);
        let g: f64 = p.eval(r);
        if !g.is_finite() {
            return Err(Error::Evaluator { radius: r, reason: "profile is not finite".into() });
        }
        if g.abs() > PROFILE_BOUND {
            return Err(Error::FamilyRejected(format!(
                "|g(r)| = {} exceeds {PROFILE_BOUND} at r = {r}",
                g.abs()
            )));
        }
        sup = sup.max(g.abs());
    }
    let env = p.envelope().eval_t(0.0f64);
    Ok(sup.max(env))
}

/// Field with one coefficient replaced by `base + g(r) cos(n phi + phase)`.
///
/// The declared modulus is the envelope of `|g|` (see [`Profile::envelope`]),
/// which equals `|g|` for monotone profiles.
pub fn make_harmonic_family<T: Real>(target: Target, profile: Profile, mode: u32, phase: f64) -> Result<CoefficientField<T>> {
    if mode < 2 {
        return Err(Error::FamilyRejected(format!("angular mode must be >= 2, got {mode}")));
    }
    if !phase.is_finite() {
        return Err(Error::FamilyRejected("phase must be finite".into()));
    }
    let g_sup = check_profile(&profile)?;
    let n = T::lit(mode as f64);
    let ph = T::lit(phase);
    let pert = move |x: T, y: T| {
        let r = x.hypot(y);
        profile.eval(r) * (n * y.atan2(x) + ph).cos()
    };
    let zero = |_: T, _: T| T::zero();
    let lambda0 = match target {
        Target::A | Target::C => 4.0 * (1.0 - g_sup),
        Target::B => 4.0 - g_sup * g_sup,
    };
    let modulus = ModulusOfContinuity::from_tail(profile.envelope());
    let label = format!("harmonic_{target:?}_n{mode}").to_lowercase();
    let field = match target {
        Target::A => CoefficientField::from_deviation(label, pert, zero, zero, modulus, T::lit(lambda0)),
        Target::B => CoefficientField::from_deviation(label, zero, pert, zero, modulus, T::lit(lambda0)),
        Target::C => CoefficientField::from_deviation(label, zero, zero, pert, modulus, T::lit(lambda0)),
    };
    Ok(field.with_descriptor(FamilyDescriptor::Harmonic { target, profile, mode, phase }))
}

/// Field `a = 1 + g_a(r)`, `b = g_b(r)`, `c = 1 + g_c(r)`.
pub fn make_radial_family<T: Real>(a: Option<Profile>, b: Option<Profile>, c: Option<Profile>) -> Result<CoefficientField<T>> {
    let sup = |p: &Option<Profile>| p.as_ref().map(check_profile).transpose().map(|v| v.unwrap_or(0.0));
    let (ga, gb, gc) = (sup(&a)?, sup(&b)?, sup(&c)?);
    let lambda0 = 4.0 * (1.0 - ga) * (1.0 - gc) - gb * gb;
    if lambda0 <= 0.0 {
        return Err(Error::FamilyRejected(format!("radial profiles leave no ellipticity margin ({lambda0})")));
    }
    let tails: Vec<AnalyticTail> = [a, b, c]
        .iter()
        .flatten()
        .map(|p| p.envelope())
        .filter(|t| *t != AnalyticTail::Zero)
        .collect();
    let modulus = match tails.as_slice() {
        [] => ModulusOfContinuity::zero(),
        [single] => ModulusOfContinuity::from_tail(*single),
        many => {
            let many = many.to_vec();
            let label = many.iter().map(|t| ModulusOfContinuity::<T>::from_tail(*t).label).collect::<Vec<_>>().join("+");
            ModulusOfContinuity::new(label, move |r: T| {
                let t = -r.ln();
                many.iter().fold(T::zero(), |s, tail| s + tail.eval_t(t))
            })
        }
    };
    let prof = |p: Option<Profile>| move |x: T, y: T| p.map(|p| p.eval(x.hypot(y))).unwrap_or_else(T::zero);
    let field = CoefficientField::from_deviation("radial", prof(a), prof(b), prof(c), modulus, T::lit(lambda0));
    Ok(field.with_descriptor(FamilyDescriptor::Radial { a, b, c }))
}

/// Random trigonometric-polynomial perturbation of all three coefficients.
///
/// Each coefficient receives modes `2..=degree` with radial factors `r^alpha`,
/// `alpha` in `[1/4, 1]`, and total absolute amplitude `amplitude / 3`, so
/// `|a - 1| + |b| + |c - 1| <= amplitude * r^{alpha_min}`.
pub fn make_trig_poly_family<T: Real>(seed: u64, degree: u32, amplitude: f64) -> Result<CoefficientField<T>> {
    if degree < 2 {
        return Err(Error::FamilyRejected(format!("trig polynomial degree must be >= 2, got {degree}")));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::FamilyRejected(format!("amplitude must lie in (0, 1], got {amplitude}")));
    }
    let terms = trig_poly_terms(seed, degree, amplitude);
    let alpha_min = terms.iter().map(|t| t.alpha).fold(f64::INFINITY, f64::min);
    let share = amplitude / 3.0;
    let lambda0 = 4.0 * (1.0 - share) * (1.0 - share) - share * share;
    let eval = |target: Target| {
        let mine: Vec<TrigPolyTerm> = terms.iter().copied().filter(|t| t.target == target).collect();
        move |x: T, y: T| {
            let r = x.hypot(y);
            let phi = y.atan2(x);
            mine.iter().fold(T::zero(), |s, t| {
                let np = T::lit(t.mode as f64) * phi;
                s + r.powf(T::lit(t.alpha)) * (T::lit(t.amp_cos) * np.cos() + T::lit(t.amp_sin) * np.sin())
            })
        }
    };
    let modulus = ModulusOfContinuity::from_tail(AnalyticTail::Power { scale: amplitude, alpha: alpha_min });
    let field = CoefficientField::from_deviation(
        format!("trig_poly_{seed}"),
        eval(Target::A),
        eval(Target::B),
        eval(Target::C),
        modulus,
        T::lit(lambda0),
    );
    Ok(field.with_descriptor(FamilyDescriptor::TrigPoly { seed, degree, amplitude }))
}

/// Deterministic term list behind [`make_trig_poly_family`].
pub fn trig_poly_terms(seed: u64, degree: u32, amplitude: f64) -> Vec<TrigPolyTerm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let share = amplitude / 3.0;
    let mut out = Vec::new();
    for target in [Target::A, Target::B, Target::C] {
        let start = out.len();
        for mode in 2..=degree {
            out.push(TrigPolyTerm {
                target,
                mode,
                alpha: rng.random_range(0.25..=1.0),
                amp_cos: rng.random_range(-1.0..=1.0),
                amp_sin: rng.random_range(-1.0..=1.0),
            });
        }
        let total: f64 = out[start..].iter().map(|t| t.amp_cos.abs() + t.amp_sin.abs()).sum();
        for t in &mut out[start..] {
            t.amp_cos *= share / total;
            t.amp_sin *= share / total;
        }
    }
    out
}

/// Named built-in family.
#[derive(Debug, Clone, Serialize)]
pub struct BuiltinFamily {
    pub name: &'static str,
    pub summary: &'static str,
    pub descriptor: FamilyDescriptor,
}

pub fn builtin_families() -> Vec<BuiltinFamily> {
    let harmonic_a = |profile| FamilyDescriptor::Harmonic { target: Target::A, profile, mode: 2, phase: 0.0 };
    vec![
        BuiltinFamily {
            name: "laplacian",
            summary: "a = c = 1, b = 0",
            descriptor: FamilyDescriptor::Laplacian {},
        },
        BuiltinFamily {
            name: "radial",
            summary: "a, b, c depending on r only (power profiles, alpha = 1/2)",
            descriptor: FamilyDescriptor::Radial {
                a: Some(Profile::Power { scale: 0.25, alpha: 0.5 }),
                b: Some(Profile::Power { scale: 0.1, alpha: 0.5 }),
                c: Some(Profile::Power { scale: -0.15, alpha: 0.5 }),
            },
        },
        BuiltinFamily {
            name: "dini_power",
            summary: "a = 1 + 0.5 r^{1/2} cos 2phi (Dini continuous)",
            descriptor: harmonic_a(Profile::Power { scale: 0.5, alpha: 0.5 }),
        },
        BuiltinFamily {
            name: "log_mild",
            summary: "a = 1 + 0.4 cos 2phi / (1 + log(1/r)) (square-Dini, not Dini)",
            descriptor: harmonic_a(Profile::LogInverse { gamma: 0.4, shift: 0.0 }),
        },
        BuiltinFamily {
            name: "log_unstable",
            summary: "a = 1 + cos 2phi / (2 + log(1/r)) (unstable dynamical system)",
            descriptor: harmonic_a(Profile::LogInverse { gamma: 1.0, shift: 1.0 }),
        },
        BuiltinFamily {
            name: "oscillatory",
            summary: "a = 1 + cos(log(1/r)) cos 2phi / (2 + log(1/r)) (stable, asymptotically constant)",
            descriptor: harmonic_a(Profile::OscillatoryLog { gamma: 1.0, eta: 1.0, shift: 1.0 }),
        },
        BuiltinFamily {
            name: "trig_poly",
            summary: "random trigonometric polynomial in all three coefficients (seed 0, degree 6, amplitude 0.2)",
            descriptor: FamilyDescriptor::TrigPoly { seed: 0, degree: 6, amplitude: 0.2 },
        },
    ]
}

/// Looks up a built-in family by name.
pub fn builtin(name: &str) -> Option<FamilyDescriptor> {
    builtin_families().into_iter().find(|b| b.name == name).map(|b| b.descriptor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_gives_laplacian_values() {
        let f = make_harmonic_family::<f64>(Target::A, Profile::Zero, 3, 0.0).unwrap();
        let k = f.at(0.3, -0.2);
        assert_eq!((k.a, k.b, k.c), (1.0, 0.0, 1.0));
    }

    #[test]
    fn rejects_low_modes_and_large_profiles() {
        assert!(matches!(make_harmonic_family::<f64>(Target::A, Profile::Zero, 1, 0.0), Err(Error::FamilyRejected(_))));
        let big = Profile::LogInverse { gamma: 1.0, shift: 0.0 };
        assert!(matches!(make_harmonic_family::<f64>(Target::A, big, 2, 0.0), Err(Error::FamilyRejected(_))));
    }

    #[test]
    fn harmonic_definition() {
        let p = Profile::LogInverse { gamma: 0.4, shift: 0.0 };
        let f = make_harmonic_family::<f64>(Target::A, p, 2, 0.0).unwrap();
        let (r, phi) = (0.25f64, 0.3f64);
        let k = f.at_polar(r, phi);
        let g = 0.4 / (1.0 + (1.0 / r).ln());
        assert!((k.a - (1.0 + g * (2.0 * phi).cos())).abs() < 1e-14);
        assert!((f.modulus.eval(r) - g).abs() < 1e-15);
    }

    #[test]
    fn trig_poly_is_deterministic_and_bounded() {
        let a = trig_poly_terms(7, 6, 0.2);
        assert_eq!(a, trig_poly_terms(7, 6, 0.2));
        assert_eq!(a.len(), 15);
        let f = make_trig_poly_family::<f64>(7, 6, 0.2).unwrap();
        for k in 0..64 {
            let phi = k as f64 * 0.1;
            for r in [1.0, 0.5, 0.01] {
                assert!(f.at_polar(r, phi).deviation() <= f.modulus.eval(r) + 1e-14);
            }
        }
    }

    #[test]
    fn builtins_build() {
        for b in builtin_families() {
            b.descriptor.build::<f64>().unwrap_or_else(|e| panic!("{}: {e}", b.name));
            b.descriptor.build::<f32>().unwrap();
        }
        assert!(builtin("oscillatory").is_some());
    }

    #[test]
    fn descriptor_json() {
        let d: FamilyDescriptor = serde_json::from_str(
            r#"{"family":"harmonic","target":"a","profile":{"kind":"log_inverse","gamma":0.4},"mode":2,"phase":0.0}"#,
        )
        .unwrap();
        assert!(matches!(d, FamilyDescriptor::Harmonic { target: Target::A, mode: 2, .. }));
        assert!(serde_json::from_str::<FamilyDescriptor>(r#"{"family":"laplacian","x":1}"#).is_err());
    }
}
