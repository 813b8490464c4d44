//! Analytic sufficient conditions on `R`, evaluated in the log-radius
//! variable by dyadic-window quadrature.
//!
//! | id                      | condition                                         | conclusion    |
//! |-------------------------|---------------------------------------------------|---------------|
//! | `dini_R`                | `int ||R(r)|| dr / r < inf`                         | second order  |
//! | `eigenvalue_bound`      | `sup_{r1<r2} int_{r1}^{r2} mu(S) dr / r < inf`      | Lipschitz     |
//! | `iterated_L1`           | `r^{-1} R(r) int_0^r R(p) dp / p` integrable        | second order  |
//! | `special_a1_bounded`    | `|int_s^t a1|` bounded                              | with a2_lower |
//! | `special_a2_lower`      | `int_s^t a2` bounded below                          | Lipschitz     |
//! | `special_a1_converges`  | `int^inf a1` finite                                 | with the rest |
//! | `special_a2_extended`   | `int^inf a2` converges in `(-inf, +inf]`            | second order  |
//!
//! `S = -(R + R^T)/2` and `mu` is its largest eigenvalue. The matrix norm is
//! the max-absolute-entry norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::MomentSource;
use crate::error::{Error, Result};
use crate::linalg::{max_abs, symmetric_max_eigenvalue, Mat4};
use crate::moments::{assemble_r, MomentVector};
use crate::quadrature::{GAUSS_LEGENDRE_4, GAUSS_LEGENDRE_8};
use crate::tail::{
    analyze_nonnegative, analyze_signed, running_max_subarray, SignedBehavior, TailModel, TailOptions, Verdict,
    WindowLayout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CriterionId {
    #[serde(rename = "dini_R")]
    DiniR,
    #[serde(rename = "eigenvalue_bound")]
    EigenvalueBound,
    #[serde(rename = "iterated_L1")]
    IteratedL1,
    #[serde(rename = "special_a1_bounded")]
    SpecialA1Bounded,
    #[serde(rename = "special_a2_lower")]
    SpecialA2Lower,
    #[serde(rename = "special_a1_converges")]
    SpecialA1Converges,
    #[serde(rename = "special_a2_extended")]
    SpecialA2Extended,
}

impl CriterionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriterionId::DiniR => "dini_R",
            CriterionId::EigenvalueBound => "eigenvalue_bound",
            CriterionId::IteratedL1 => "iterated_L1",
            CriterionId::SpecialA1Bounded => "special_a1_bounded",
            CriterionId::SpecialA2Lower => "special_a2_lower",
            CriterionId::SpecialA1Converges => "special_a1_converges",
            CriterionId::SpecialA2Extended => "special_a2_extended",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVerdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Regularity conclusion, ordered by strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NoGuarantee,
    LipschitzGradient,
    SecondOrderDifferentiable,
}

/// One row per window: `t` range, window integral, cumulative value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WitnessRow {
    pub k: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub value: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: CriterionId,
    pub verdict: CriterionVerdict,
    pub implied_conclusion: Conclusion,
    /// Integral value, bound or limit backing the verdict, when finite.
    pub value: Option<f64>,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub witness: Vec<WitnessRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriteriaSettings {
    /// Converged iff the extrapolated tail is below this.
    pub tol: f64,
    pub divergence_threshold: f64,
    pub decay_ratio: f64,
    /// Special case applies iff every sampled `|b_i|, |c_i|` is below this.
    pub special_tol: f64,
}

impl Default for CriteriaSettings {
    fn default() -> Self {
        let t = TailOptions::default();
        Self { tol: t.tol, divergence_threshold: t.divergence_threshold, decay_ratio: t.decay_ratio, special_tol: 1e-10 }
    }
}

impl CriteriaSettings {
    fn tail(&self) -> TailOptions {
        TailOptions { tol: self.tol, divergence_threshold: self.divergence_threshold, decay_ratio: self.decay_ratio }
    }

    pub fn check(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (n, v) in [("tol", self.tol), ("divergence_threshold", self.divergence_threshold), ("special_tol", self.special_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("tolerances must be positive: criteria {n} = {v}"));
            }
        }
        if !(self.decay_ratio > 0.0 && self.decay_ratio < 1.0) {
            errs.push(format!("criteria decay_ratio must lie in (0, 1), got {}", self.decay_ratio));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// `R~`, its moments, and quadrature weights at the Gauss nodes of every
/// window, shared by all criteria.
pub struct WindowSamples {
    pub layout: WindowLayout,
    /// `nodes[k]` holds `(t, weight, moments)` for window `k`.
    pub nodes: Vec<Vec<(f64, f64, MomentVector<f64>)>>,
}

impl WindowSamples {
    pub fn collect(source: &dyn MomentSource<f64>, layout: WindowLayout) -> Result<Self> {
        let nodes = (0..layout.windows)
            .into_par_iter()
            .map(|k| {
                let (lo, hi) = WindowLayout::edges::<f64>(k);
                GAUSS_LEGENDRE_8.panel(lo, hi).map(|(t, w)| Ok((t, w, source.moments_t(t)?))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layout, nodes })
    }

    fn window_integrals(&self, f: impl Fn(&MomentVector<f64>) -> f64 + Sync) -> Vec<f64> {
        self.nodes.par_iter().map(|win| win.iter().map(|(_, w, m)| w * f(m)).sum()).collect()
    }

    fn window_matrix_integrals(&self) -> Vec<Mat4<f64>> {
        self.nodes
            .par_iter()
            .map(|win| win.iter().fold(Mat4::zeros(), |s, (_, w, m)| s + assemble_r(m).entries * *w))
            .collect()
    }
}

fn witness(values: &[f64]) -> Vec<WitnessRow> {
    let mut cum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            cum += v;
            let (t_lo, t_hi) = WindowLayout::edges::<f64>(k);
            WitnessRow { k, t_lo, t_hi, value: *v, cumulative: cum }
        })
        .collect()
}

fn tail_verdict(v: Verdict) -> CriterionVerdict {
    match v {
        Verdict::Converged => CriterionVerdict::Holds,
        Verdict::Diverged => CriterionVerdict::Fails,
        Verdict::Inconclusive => CriterionVerdict::Inconclusive,
    }
}

fn conclusion_if(v: CriterionVerdict, c: Conclusion) -> Conclusion {
    if v == CriterionVerdict::Holds {
        c
    } else {
        Conclusion::NoGuarantee
    }
}

fn model_flag(m: &TailModel) -> String {
    match m {
        TailModel::Vanishing => "tail:vanishing".into(),
        TailModel::Geometric { ratio } => format!("tail:geometric({ratio:.6})"),
        TailModel::BlockGeometric { ratio } => format!("tail:block({ratio:.6})"),
        TailModel::NonDecaying { ratio } => format!("tail:non_decaying({ratio:.6})"),
    }
}

/// `int ||R~(t)|| dt`.
pub fn check_dini_r(samples: &WindowSamples, settings: &CriteriaSettings) -> CriterionResult {
    let w = samples.window_integrals(|m| max_abs(&assemble_r(m).entries));
    let a = analyze_nonnegative(&w, &samples.layout, &settings.tail());
    let verdict = tail_verdict(a.verdict);
    CriterionResult {
        id: CriterionId::DiniR,
        verdict,
        implied_conclusion: conclusion_if(verdict, Conclusion::SecondOrderDifferentiable),
        value: a.total(),
        flags: vec![model_flag(&a.model)],
        witness: witness(&w),
    }
}

/// `mu(S(t))`, `S = -(R~ + R~^T)/2`.
pub fn mu_s(m: &MomentVector<f64>) -> f64 {
    let r = assemble_r(m).entries;
    symmetric_max_eigenvalue(&(-(r + r.transpose()) * 0.5))
}

/// Running supremum over window ranges of `int mu(S) dt`; holds iff its
/// increments are summable.
pub fn check_eigenvalue_bound(samples: &WindowSamples, settings: &CriteriaSettings) -> CriterionResult {
    let w = samples.window_integrals(mu_s);
    let sup = running_max_subarray(&w);
    let incr: Vec<f64> = sup.iter().scan(0.0, |prev, s| {
        let d = s - *prev;
        *prev = *s;
        Some(d)
    }).collect();
    let a = analyze_nonnegative(&incr, &samples.layout, &settings.tail());
    let verdict = tail_verdict(a.verdict);
    let mut wit = witness(&w);
    for (row, s) in wit.iter_mut().zip(&sup) {
        row.cumulative = *s;
    }
    CriterionResult {
        id: CriterionId::EigenvalueBound,
        verdict,
        implied_conclusion: conclusion_if(verdict, Conclusion::LipschitzGradient),
        value: a.total(),
        flags: vec![model_flag(&a.model)],
        witness: wit,
    }
}

/// `int ||R~(t) Q(t)|| dt` with `Q(t) = int_t^inf R~`. The inner limit is
/// taken entrywise from the signed tail analysis; the outer integral runs
/// over the first half of the windows so that `Q` stays well above the error
/// of the inner limit.
pub fn check_iterated_l1(
    source: &dyn MomentSource<f64>,
    samples: &WindowSamples,
    settings: &CriteriaSettings,
) -> Result<CriterionResult> {
    let opts = settings.tail();
    let wm = samples.window_matrix_integrals();
    let mut limit = Mat4::zeros();
    let mut cumulative: Vec<Mat4<f64>> = Vec::with_capacity(wm.len() + 1);
    cumulative.push(Mat4::zeros());
    for m in &wm {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + m);
    }
    let mut inner_divergent = false;
    let mut inner_undetermined = false;
    for i in 0..4 {
        for j in 0..4 {
            let entry: Vec<f64> = wm.iter().map(|m| m[(i, j)]).collect();
            match analyze_signed(&entry, &samples.layout, &opts).behavior {
                SignedBehavior::Convergent { limit: l } => limit[(i, j)] = l,
                SignedBehavior::DivergentPlus | SignedBehavior::DivergentMinus => inner_divergent = true,
                _ => inner_undetermined = true,
            }
        }
    }
    if inner_divergent || inner_undetermined {
        let mut flags = vec![];
        if inner_divergent {
            flags.push("inner_divergent".to_string());
        }
        if inner_undetermined {
            flags.push("inner_undetermined".to_string());
        }
        return Ok(CriterionResult {
            id: CriterionId::IteratedL1,
            verdict: CriterionVerdict::Inconclusive,
            implied_conclusion: Conclusion::NoGuarantee,
            value: None,
            flags,
            witness: Vec::new(),
        });
    }
    let outer = samples.layout.halved();
    let r_at = |t: f64| -> Result<Mat4<f64>> { Ok(assemble_r(&source.moments_t(t)?).entries) };
    let w: Vec<f64> = (0..outer.windows)
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = WindowLayout::edges::<f64>(k);
            let mid = 0.5 * (lo + hi);
            let q_lo = limit - cumulative[k];
            let q_hi = limit - cumulative[k + 1];
            let half = GAUSS_LEGENDRE_4.panel(lo, mid).try_fold(Mat4::zeros(), |s, (t, wt)| Ok::<_, Error>(s + r_at(t)? * wt))?;
            let q_mid = q_lo - half;
            let f = |t: f64, q: &Mat4<f64>| -> Result<f64> { Ok(max_abs(&(r_at(t)? * q))) };
            Ok((hi - lo) / 6.0 * (f(lo, &q_lo)? + 4.0 * f(mid, &q_mid)? + f(hi, &q_hi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let a = analyze_nonnegative(&w, &outer, &opts);
    let verdict = tail_verdict(a.verdict);
    Ok(CriterionResult {
        id: CriterionId::IteratedL1,
        verdict,
        implied_conclusion: conclusion_if(verdict, Conclusion::SecondOrderDifferentiable),
        value: a.total(),
        flags: vec![model_flag(&a.model)],
        witness: witness(&w),
    })
}

/// Largest sampled `|b_i|, |c_i|`.
pub fn special_case_residual(samples: &WindowSamples) -> f64 {
    samples
        .nodes
        .iter()
        .flatten()
        .map(|(_, _, m)| m.b1.abs().max(m.b2.abs()).max(m.c1.abs()).max(m.c2.abs()))
        .fold(0.0, f64::max)
}

/// Sub-criteria of the decoupled case; a single `not_applicable` result when
/// some `b_i` or `c_i` moment is nonzero.
pub fn check_special_case(samples: &WindowSamples, settings: &CriteriaSettings) -> Vec<CriterionResult> {
    let residual = special_case_residual(samples);
    if residual > settings.special_tol {
        return vec![CriterionResult {
            id: CriterionId::SpecialA1Bounded,
            verdict: CriterionVerdict::Inconclusive,
            implied_conclusion: Conclusion::NoGuarantee,
            value: Some(residual),
            flags: vec!["not_applicable".into()],
            witness: Vec::new(),
        }];
    }
    let opts = settings.tail();
    let w1 = samples.window_integrals(|m| m.a1);
    let w2 = samples.window_integrals(|m| m.a2);
    let s1 = analyze_signed(&w1, &samples.layout, &opts);
    let s2 = analyze_signed(&w2, &samples.layout, &opts);
    use CriterionVerdict::*;
    use SignedBehavior::*;
    let a1_bounded = match s1.behavior {
        Convergent { .. } | BoundedOscillation => Holds,
        DivergentPlus | DivergentMinus => Fails,
        Undetermined => Inconclusive,
    };
    let a2_lower = match s2.behavior {
        Convergent { .. } | BoundedOscillation | DivergentPlus => Holds,
        DivergentMinus => Fails,
        Undetermined => Inconclusive,
    };
    let a1_converges = match s1.behavior {
        Convergent { .. } => Holds,
        DivergentPlus | DivergentMinus => Fails,
        _ => Inconclusive,
    };
    let a2_extended = match s2.behavior {
        Convergent { .. } | DivergentPlus => Holds,
        DivergentMinus => Fails,
        _ => Inconclusive,
    };
    let stable = a1_bounded == Holds && a2_lower == Holds;
    let constant = stable && a1_converges == Holds && a2_extended == Holds;
    let lip = if stable { Conclusion::LipschitzGradient } else { Conclusion::NoGuarantee };
    let second = if constant { Conclusion::SecondOrderDifferentiable } else { Conclusion::NoGuarantee };
    let limit = |b: &SignedBehavior| match b {
        Convergent { limit } => Some(*limit),
        _ => None,
    };
    let flags = |b: &SignedBehavior| vec![format!("behavior:{}", serde_json::to_value(b).map(|v| v["kind"].to_string()).unwrap_or_default().trim_matches('"'))];
    vec![
        CriterionResult {
            id: CriterionId::SpecialA1Bounded,
            verdict: a1_bounded,
            implied_conclusion: lip,
            value: Some(s1.tail_range),
            flags: flags(&s1.behavior),
            witness: witness(&w1),
        },
        CriterionResult {
            id: CriterionId::SpecialA2Lower,
            verdict: a2_lower,
            implied_conclusion: lip,
            value: Some(s2.tail_min_increment),
            flags: flags(&s2.behavior),
            witness: witness(&w2),
        },
        CriterionResult {
            id: CriterionId::SpecialA1Converges,
            verdict: a1_converges,
            implied_conclusion: second,
            value: limit(&s1.behavior),
            flags: flags(&s1.behavior),
            witness: witness(&w1),
        },
        CriterionResult {
            id: CriterionId::SpecialA2Extended,
            verdict: a2_extended,
            implied_conclusion: second,
            value: limit(&s2.behavior),
            flags: flags(&s2.behavior),
            witness: witness(&w2),
        },
    ]
}

/// All criteria, in table order.
#[derive(Debug, Clone, Serialize)]
pub struct CriteriaReport {
    pub results: Vec<CriterionResult>,
    pub special_case_residual: f64,
    pub conclusion: Conclusion,
}

pub fn evaluate_criteria(source: &dyn MomentSource<f64>, settings: &CriteriaSettings) -> Result<CriteriaReport> {
    settings.check()?;
    let samples = WindowSamples::collect(source, WindowLayout::for_precision::<f64>())?;
    let mut results = vec![
        check_dini_r(&samples, settings),
        check_eigenvalue_bound(&samples, settings),
        check_iterated_l1(source, &samples, settings)?,
    ];
    results.extend(check_special_case(&samples, settings));
    let conclusion = strongest_conclusion(&results);
    Ok(CriteriaReport { special_case_residual: special_case_residual(&samples), results, conclusion })
}

/// Strongest conclusion implied by any holding criterion.
pub fn strongest_conclusion(results: &[CriterionResult]) -> Conclusion {
    results.iter().map(|r| r.implied_conclusion).max().unwrap_or(Conclusion::NoGuarantee)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::coeff::{builtin, make_radial_family, CoefficientField, Profile};
    use crate::dynsys::AnalyticMoments;

    fn run(src: &dyn MomentSource<f64>) -> CriteriaReport {
        evaluate_criteria(src, &CriteriaSettings::default()).unwrap()
    }

    fn verdict(rep: &CriteriaReport, id: CriterionId) -> CriterionVerdict {
        rep.results.iter().find(|r| r.id == id).unwrap().verdict
    }

    #[test]
    fn laplacian_all_hold() {
        let f = CoefficientField::<f64>::laplacian();
        let rep = run(&f);
        for r in &rep.results {
            assert_eq!(r.verdict, CriterionVerdict::Holds, "{:?}", r.id);
        }
        assert_eq!(rep.conclusion, Conclusion::SecondOrderDifferentiable);
        assert!(rep.results[0].value.unwrap() < 1e-14);
    }

    #[test]
    fn power_family_dini() {
        let f = builtin("dini_power").unwrap().build::<f64>().unwrap();
        let rep = run(&f);
        assert_eq!(verdict(&rep, CriterionId::DiniR), CriterionVerdict::Holds);
        // ||R|| = g/2 = 0.25 r^{1/2}, integral 0.5
        assert!((rep.results[0].value.unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn log_family_fails() {
        let f = builtin("log_unstable").unwrap().build::<f64>().unwrap();
        let rep = run(&f);
        assert_eq!(verdict(&rep, CriterionId::DiniR), CriterionVerdict::Fails);
        assert_eq!(verdict(&rep, CriterionId::EigenvalueBound), CriterionVerdict::Fails);
        let it = rep.results.iter().find(|r| r.id == CriterionId::IteratedL1).unwrap();
        assert_eq!(it.verdict, CriterionVerdict::Inconclusive);
        assert!(it.flags.contains(&"inner_divergent".to_string()));
        assert_eq!(verdict(&rep, CriterionId::SpecialA1Bounded), CriterionVerdict::Fails);
        assert_eq!(rep.conclusion, Conclusion::NoGuarantee);
    }

    #[test]
    fn oscillatory_family() {
        let f = builtin("oscillatory").unwrap().build::<f64>().unwrap();
        let rep = run(&f);
        assert_eq!(verdict(&rep, CriterionId::DiniR), CriterionVerdict::Fails);
        assert_eq!(verdict(&rep, CriterionId::EigenvalueBound), CriterionVerdict::Fails);
        assert_eq!(verdict(&rep, CriterionId::IteratedL1), CriterionVerdict::Holds);
        for id in [
            CriterionId::SpecialA1Bounded,
            CriterionId::SpecialA2Lower,
            CriterionId::SpecialA1Converges,
            CriterionId::SpecialA2Extended,
        ] {
            assert_eq!(verdict(&rep, id), CriterionVerdict::Holds, "{id:?}");
        }
        assert_eq!(rep.conclusion, Conclusion::SecondOrderDifferentiable);
    }

    #[test]
    fn analytic_oscillatory_limit() {
        let src = AnalyticMoments::a_cos2(Profile::OscillatoryLog { gamma: 1.0, eta: 1.0, shift: 0.0 });
        let rep = run(&src);
        let a1 = rep.results.iter().find(|r| r.id == CriterionId::SpecialA1Converges).unwrap();
        // int_0^inf -cos t / (2 (1 + t)) dt
        let ci1 = 0.337_403_922_900_968_1;
        let si1 = 0.946_083_070_367_183;
        let exact = -0.5 * (-ci1 * 1f64.cos() + (std::f64::consts::FRAC_PI_2 - si1) * 1f64.sin());
        assert!((a1.value.unwrap() - exact).abs() < 1e-5);
        let _ = Arc::new(src);
    }

    #[test]
    fn radial_special_case_applies() {
        let f = make_radial_family::<f64>(
            None,
            Some(Profile::Power { scale: 0.1, alpha: 0.5 }),
            Some(Profile::LogInverse { gamma: 0.2, shift: 0.0 }),
        )
        .unwrap();
        let rep = run(&f);
        assert!(rep.special_case_residual <= 1e-10);
        assert!(!rep.results.iter().any(|r| r.flags.contains(&"not_applicable".to_string())));
    }

    #[test]
    fn trig_poly_not_applicable() {
        let f = builtin("trig_poly").unwrap().build::<f64>().unwrap();
        let rep = run(&f);
        let sp: Vec<_> = rep.results.iter().filter(|r| r.flags.contains(&"not_applicable".to_string())).collect();
        assert_eq!(sp.len(), 1);
        assert_eq!(sp[0].verdict, CriterionVerdict::Inconclusive);
    }
}
