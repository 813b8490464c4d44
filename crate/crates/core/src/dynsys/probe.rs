//! Finite-horizon probes of uniform stability and asymptotic constancy.

use nalgebra::SVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{propagate, PropagateOptions};
use super::LinearSystem;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probe thresholds and horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    pub s_grid: Vec<f64>,
    pub t_max: f64,
    pub rtol: f64,
    /// Stable requires `sup ||Phi(t, s)|| <= threshold`.
    pub threshold: f64,
    /// Allowed slope of `log sup ||Phi||` per unit `t` over the last decade.
    pub slope_margin: f64,
    /// Start of the constancy probe.
    pub t0: f64,
    /// Constancy window length.
    pub window: f64,
    /// Allowed last-window deviation relative to `max(1, |phi|)`.
    pub deviation_tol: f64,
    /// Sampling step of the dense output grid.
    pub sample_dt: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            s_grid: vec![0.0, 2.0, 5.0, 10.0, 15.0],
            t_max: 30.0,
            rtol: 1e-9,
            threshold: 1e3,
            slope_margin: 0.01,
            t0: 0.0,
            window: 5.0,
            deviation_tol: 0.1,
            sample_dt: 0.05,
        }
    }
}

impl ProbeSettings {
    pub fn check(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.s_grid.is_empty() {
            errs.push("probe s_grid must be nonempty".to_string());
        }
        if self.s_grid.windows(2).any(|w| w[0] >= w[1]) {
            errs.push("probe s_grid must be strictly increasing".to_string());
        }
        if self.s_grid.iter().any(|s| *s < 0.0 || *s >= self.t_max) {
            errs.push("probe s_grid entries must lie in [0, t_max)".to_string());
        }
        if !(self.t0 >= 0.0 && self.t0 < self.t_max) {
            errs.push("probe t0 must lie in [0, t_max)".to_string());
        }
        for (name, v) in [
            ("t_max", self.t_max),
            ("rtol", self.rtol),
            ("threshold", self.threshold),
            ("slope_margin", self.slope_margin),
            ("window", self.window),
            ("deviation_tol", self.deviation_tol),
            ("sample_dt", self.sample_dt),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("tolerances must be positive: probe {name} = {v}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstancyVerdict {
    Constant,
    Divergent,
    Inconclusive,
}

/// `kappa(s, T) = sup_{s <= t <= T} ||Phi(t, s)||_inf`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaRow {
    pub s: f64,
    pub t: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityPart {
    pub kappa_samples: Vec<KappaRow>,
    pub kappa_max: f64,
    /// Largest over `s` of the late-time slope of `log kappa(s, .)`.
    pub tail_slope: f64,
    pub horizon: f64,
    pub threshold: f64,
    pub slope_margin: f64,
    pub verdict: StabilityVerdict,
}

/// Cauchy deviation of one basis trajectory over one window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstancyRow {
    pub basis: usize,
    pub window_start: f64,
    pub window_end: f64,
    /// `sup_{t, t'} |phi(t) - phi(t')|_inf` over the window.
    pub deviation: f64,
    pub norm_end: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyPart {
    pub rows: Vec<ConstancyRow>,
    pub per_basis: Vec<ConstancyVerdict>,
    pub per_basis_slope: Vec<f64>,
    pub t0: f64,
    pub horizon: f64,
    pub verdict: ConstancyVerdict,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StabilityReport {
    pub stability: Option<StabilityPart>,
    pub constancy: Option<ConstancyPart>,
}

const DECADE: f64 = 10.0;

/// Slope of `ln y` between the last point and the point one decade earlier,
/// on a series sampled at increasing `t`.
fn late_log_slope(series: &[(f64, f64)]) -> f64 {
    let Some(&(t_end, y_end)) = series.last() else { return 0.0 };
    let t_first = series[0].0;
    let span = DECADE.min((t_end - t_first) / 2.0);
    if span <= 0.0 {
        return 0.0;
    }
    let idx = series.partition_point(|(t, _)| *t < t_end - span);
    let (t_a, y_a) = series[idx.min(series.len() - 1)];
    if t_end <= t_a || y_a <= 0.0 || y_end <= 0.0 {
        return 0.0;
    }
    (y_end.ln() - y_a.ln()) / (t_end - t_a)
}

fn grid(from: f64, to: f64, dt: f64) -> Vec<f64> {
    let n = ((to - from) / dt).round() as usize;
    (0..=n).map(|k| (from + k as f64 * dt).min(to)).collect()
}

fn inf_norm_vec<T: Real, const N: usize>(v: &SVector<T, N>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.as_f64().abs()))
}

/// Running supremum of `||Phi(t, s)||_inf` for every `s` in the grid.
pub fn uniform_stability_probe<T: Real, const N: usize, S: LinearSystem<T, N>>(
    sys: &S,
    settings: &ProbeSettings,
) -> Result<StabilityPart> {
    settings.check()?;
    let per_s: Vec<Result<(Vec<KappaRow>, f64, f64)>> = settings
        .s_grid
        .par_iter()
        .map(|&s| {
            let samples = grid(s, settings.t_max, settings.sample_dt);
            let opts = PropagateOptions::new(T::lit(settings.rtol))
                .with_samples(samples.iter().map(|x| T::lit(*x)).collect())
                .recording_steps();
            let out = propagate(sys, T::lit(s), T::lit(settings.t_max), &opts)?;
            let mut pts: Vec<(f64, f64)> = out
                .samples
                .iter()
                .map(|(t, m)| (t.as_f64(), super::integrator_inf_norm(m)))
                .chain(out.step_log.iter().map(|(t, n)| (t.as_f64(), n.as_f64())))
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut sup = 0.0f64;
            let running: Vec<(f64, f64)> = pts
                .iter()
                .map(|&(t, n)| {
                    sup = sup.max(n);
                    (t, sup)
                })
                .collect();
            let slope = late_log_slope(&running);
            let report_every = 0.5;
            let mut rows = Vec::new();
            let mut next = s;
            for &(t, k) in &running {
                if t + 1e-12 >= next {
                    rows.push(KappaRow { s, t, kappa: k });
                    next = t + report_every;
                }
            }
            if let Some(&(t, k)) = running.last() {
                if rows.last().map(|r| r.t) != Some(t) {
                    rows.push(KappaRow { s, t, kappa: k });
                }
            }
            Ok((rows, sup, slope))
        })
        .collect();
    let mut kappa_samples = Vec::new();
    let mut kappa_max = 0.0f64;
    let mut tail_slope = f64::NEG_INFINITY;
    for r in per_s {
        let (rows, k, slope) = r?;
        kappa_samples.extend(rows);
        kappa_max = kappa_max.max(k);
        tail_slope = tail_slope.max(slope);
    }
    let verdict = if tail_slope > settings.slope_margin {
        StabilityVerdict::Unstable
    } else if kappa_max <= settings.threshold {
        StabilityVerdict::Stable
    } else {
        StabilityVerdict::Inconclusive
    };
    Ok(StabilityPart {
        kappa_samples,
        kappa_max,
        tail_slope,
        horizon: settings.t_max,
        threshold: settings.threshold,
        slope_margin: settings.slope_margin,
        verdict,
    })
}

/// Standard basis of `R^N`.
pub fn unit_basis<T: Real, const N: usize>() -> Vec<SVector<T, N>> {
    (0..N)
        .map(|i| SVector::<T, N>::from_fn(|j, _| if i == j { T::one() } else { T::zero() }))
        .collect()
}

/// Window-wise Cauchy deviations of the trajectories started at `t0` from
/// each basis vector.
pub fn asymptotic_constancy_probe<T: Real, const N: usize, S: LinearSystem<T, N>>(
    sys: &S,
    basis: &[SVector<T, N>],
    settings: &ProbeSettings,
) -> Result<ConstancyPart> {
    settings.check()?;
    let samples = grid(settings.t0, settings.t_max, settings.sample_dt);
    let opts = PropagateOptions::new(T::lit(settings.rtol)).with_samples(samples.iter().map(|x| T::lit(*x)).collect());
    let out = propagate(sys, T::lit(settings.t0), T::lit(settings.t_max), &opts)?;
    let n_windows = (((settings.t_max - settings.t0) / settings.window).floor() as usize).max(1);
    let width = (settings.t_max - settings.t0) / n_windows as f64;

    let mut rows = Vec::new();
    let mut per_basis = Vec::with_capacity(basis.len());
    let mut per_basis_slope = Vec::with_capacity(basis.len());
    for (bi, v) in basis.iter().enumerate() {
        let traj: Vec<(f64, SVector<T, N>)> = out.samples.iter().map(|(t, m)| (t.as_f64(), m * v)).collect();
        let mut sup = 0.0f64;
        let running: Vec<(f64, f64)> = traj
            .iter()
            .map(|(t, x)| {
                sup = sup.max(inf_norm_vec(x));
                (*t, sup)
            })
            .collect();
        let slope = late_log_slope(&running);
        let mut devs = Vec::with_capacity(n_windows);
        for k in 0..n_windows {
            let lo = settings.t0 + k as f64 * width;
            let hi = if k + 1 == n_windows { settings.t_max } else { lo + width };
            let pts: Vec<&SVector<T, N>> =
                traj.iter().filter(|(t, _)| *t >= lo - 1e-12 && *t <= hi + 1e-12).map(|(_, x)| x).collect();
            let mut dev = 0.0f64;
            for c in 0..N {
                let (mn, mx) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), x| {
                    let v = x[c].as_f64();
                    (mn.min(v), mx.max(v))
                });
                if pts.is_empty() {
                    continue;
                }
                dev = dev.max(mx - mn);
            }
            let norm_end = pts.last().map(|x| inf_norm_vec(*x)).unwrap_or(0.0);
            rows.push(ConstancyRow { basis: bi, window_start: lo, window_end: hi, deviation: dev, norm_end });
            devs.push((dev, norm_end));
        }
        let (first, _) = devs[0];
        let (last, norm_end) = devs[devs.len() - 1];
        let verdict = if slope > settings.slope_margin {
            ConstancyVerdict::Divergent
        } else if last / norm_end.max(1.0) <= settings.deviation_tol && last <= first * (1.0 + 1e-12) + 1e-300 {
            ConstancyVerdict::Constant
        } else {
            ConstancyVerdict::Inconclusive
        };
        per_basis.push(verdict);
        per_basis_slope.push(slope);
    }
    let verdict = if per_basis.contains(&ConstancyVerdict::Divergent) {
        ConstancyVerdict::Divergent
    } else if per_basis.iter().all(|v| *v == ConstancyVerdict::Constant) {
        ConstancyVerdict::Constant
    } else {
        ConstancyVerdict::Inconclusive
    };
    Ok(ConstancyPart { rows, per_basis, per_basis_slope, t0: settings.t0, horizon: settings.t_max, verdict })
}
