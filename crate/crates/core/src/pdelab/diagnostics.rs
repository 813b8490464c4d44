use serde::{Deserialize, Serialize};

use super::decompose::{DecompositionProfile, ProfileRow};
use crate::coeff::ModulusOfContinuity;
use crate::dynsys::{effective_blocks, propagate_from, FullSystem, PropagateOptions};
use crate::error::{Error, Result};
use crate::linalg::{Mat8, Vec4};

/// Number of smallest radii on which trends are judged.
pub const TREND_RADII: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticSettings {
    /// Relative growth over the trend radii that still counts as bounded.
    pub growth_threshold: f64,
    /// Floor-level violations of monotone decrease tolerated for `|r V'|`.
    pub allowed_violations: usize,
}

impl Default for DiagnosticSettings {
    fn default() -> Self {
        Self { growth_threshold: 0.5, allowed_violations: 1 }
    }
}

fn norm4(v: &[f64; 4]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max(omega(r), r) r`, the scale of the `W` and `U0` estimates.
fn normalization(m: &ModulusOfContinuity<f64>, r: f64) -> f64 {
    m.eval(r).max(r) * r
}

/// Per-radius indicator values, descending in `r`.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatorTables {
    pub radii: Vec<f64>,
    /// `|V| + |r V'|`
    pub lipschitz: Vec<f64>,
    /// `|r V'|`
    pub differentiability: Vec<f64>,
    /// `M_{1,p}(W, r) / (max(omega, r) r)`
    pub w_ratio: Vec<f64>,
    /// `|U0(r) - U0(r_min)| / (max(omega, r) r)`
    pub u0_ratio: Vec<f64>,
}

pub fn indicator_tables(prof: &DecompositionProfile, modulus: &ModulusOfContinuity<f64>) -> IndicatorTables {
    let rows = &prof.rows;
    let last: &ProfileRow = rows.last().expect("empty profile");
    IndicatorTables {
        radii: rows.iter().map(|r| r.r).collect(),
        lipschitz: rows.iter().map(|r| norm4(&r.v) + norm4(&r.r_vprime)).collect(),
        differentiability: rows.iter().map(|r| norm4(&r.r_vprime)).collect(),
        w_ratio: rows.iter().map(|r| r.m1p_w / normalization(modulus, r.r)).collect(),
        u0_ratio: rows
            .iter()
            .map(|r| (r.u0[0] - last.u0[0]).hypot(r.u0[1] - last.u0[1]) / normalization(modulus, r.r))
            .collect(),
    }
}

/// Discretization floors from a constant-coefficient control profile at the
/// same mesh, measured on the trend radii.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Floors {
    pub r_vprime: f64,
    pub w_ratio: f64,
    pub u0_ratio: f64,
    pub compare: f64,
}

fn tail_max(v: &[f64]) -> f64 {
    v[v.len().saturating_sub(TREND_RADII)..].iter().copied().fold(0.0, f64::max)
}

impl Floors {
    pub fn from_control(control: &DecompositionProfile, modulus: &ModulusOfContinuity<f64>) -> Self {
        let t = indicator_tables(control, modulus);
        Self {
            r_vprime: tail_max(&t.differentiability),
            w_ratio: tail_max(&t.w_ratio),
            u0_ratio: tail_max(&t.u0_ratio),
            compare: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorVerdict {
    Bounded,
    Growing,
    Decreasing,
    NotDecreasing,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityDiagnostics {
    pub tables: IndicatorTables,
    pub floors: Floors,
    pub lipschitz_indicator: f64,
    pub lipschitz: IndicatorVerdict,
    pub differentiability: IndicatorVerdict,
    /// Steps among the trend radii where `|r V'|` grows by more than the floor.
    pub monotonicity_violations: usize,
    pub w_indicator: f64,
    pub w: IndicatorVerdict,
    pub u0_indicator: f64,
    pub u0: IndicatorVerdict,
}

/// Bounded iff the trend-radii maximum is within `(1 + g)` of the maximum
/// over the larger radii, plus the floor.
fn bounded(v: &[f64], g: f64, floor: f64) -> IndicatorVerdict {
    let split = v.len().saturating_sub(TREND_RADII);
    let head = v[..split].iter().copied().fold(0.0, f64::max);
    if tail_max(v) <= (1.0 + g) * head + floor {
        IndicatorVerdict::Bounded
    } else {
        IndicatorVerdict::Growing
    }
}

pub fn regularity_diagnostics(
    prof: &DecompositionProfile,
    modulus: &ModulusOfContinuity<f64>,
    floors: &Floors,
    settings: &DiagnosticSettings,
) -> Result<RegularityDiagnostics> {
    if prof.rows.len() < 2 * TREND_RADII {
        return Err(Error::InvalidArgument(format!("profile needs at least {} radii, got {}", 2 * TREND_RADII, prof.rows.len())));
    }
    let t = indicator_tables(prof, modulus);
    let g = settings.growth_threshold;
    let n = t.lipschitz.len();
    let lip_tail = &t.lipschitz[n - TREND_RADII..];
    let lipschitz = if lip_tail[TREND_RADII - 1] <= (1.0 + g) * lip_tail[0] + floors.r_vprime {
        IndicatorVerdict::Bounded
    } else {
        IndicatorVerdict::Growing
    };
    let d_tail = &t.differentiability[n - TREND_RADII..];
    let violations = d_tail.windows(2).filter(|w| w[1] > w[0] + floors.r_vprime).count();
    let differentiability =
        if violations <= settings.allowed_violations { IndicatorVerdict::Decreasing } else { IndicatorVerdict::NotDecreasing };
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(RegularityDiagnostics {
        lipschitz_indicator: sup(&t.lipschitz),
        lipschitz,
        differentiability,
        monotonicity_violations: violations,
        w_indicator: sup(&t.w_ratio),
        w: bounded(&t.w_ratio, g, floors.w_ratio),
        u0_indicator: sup(&t.u0_ratio),
        u0: bounded(&t.u0_ratio, g, floors.u0_ratio),
        floors: *floors,
        tables: t,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub r: f64,
    pub t: f64,
    pub v_measured: [f64; 4],
    pub v_predicted: [f64; 4],
    /// `|V_pred - V_meas| / |V_meas|` (absolute when `V_meas = 0`).
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub max_deviation: f64,
}

/// Propagates `(V, U)` with `U = A_eff r V' + B_eff V` from the largest
/// profile radius through the homogeneous 8-dimensional system and compares
/// the predicted `V` with the measured one at every smaller radius.
pub fn compare_with_dynsys(prof: &DecompositionProfile, sys: &FullSystem<f64>, rtol: f64) -> Result<CompareTable> {
    let first = prof.rows.first().ok_or_else(|| Error::InvalidArgument("empty profile".into()))?;
    let t0 = -first.r.ln();
    let eff = effective_blocks(&sys.blocks_t(t0)?)?;
    let v0 = Vec4::from_column_slice(&first.v);
    let rvp = Vec4::from_column_slice(&first.r_vprime);
    let u0 = eff.a * rvp + eff.b * v0;
    let mut y0 = Mat8::zeros();
    for k in 0..4 {
        y0[(k, 0)] = v0[k];
        y0[(k + 4, 0)] = u0[k];
    }
    let times: Vec<f64> = prof.rows.iter().skip(1).map(|r| -r.r.ln()).collect();
    let t_end = times.last().copied().unwrap_or(t0);
    let opts = PropagateOptions::new(rtol).with_samples(times.clone());
    let tm = propagate_from(sys, t0, t_end, y0, &opts)?;
    let mut rows = vec![CompareRow { r: first.r, t: t0, v_measured: first.v, v_predicted: first.v, deviation: 0.0 }];
    for (row, (t, y)) in prof.rows.iter().skip(1).zip(tm.samples.iter()) {
        let pred: [f64; 4] = std::array::from_fn(|k| y[(k, 0)]);
        let diff: [f64; 4] = std::array::from_fn(|k| pred[k] - row.v[k]);
        let scale = norm4(&row.v);
        let deviation = if scale > 0.0 { norm4(&diff) / scale } else { norm4(&diff) };
        rows.push(CompareRow { r: row.r, t: *t, v_measured: row.v, v_predicted: pred, deviation });
    }
    let max_deviation = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
    Ok(CompareTable { rows, max_deviation })
}
