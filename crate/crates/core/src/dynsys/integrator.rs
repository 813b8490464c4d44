//! Dormand-Prince 5(4) for matrix ODEs `Phi' = -A(t) Phi`.

use nalgebra::SMatrix;

use super::LinearSystem;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Accepted `rtol` range.
pub const RTOL_RANGE: (f64, f64) = (1e-12, 1e-3);
/// Local tolerance is `LOCAL_TOL_FACTOR * rtol`; keeps the global error of
/// long propagations within `10 * rtol`.
pub const LOCAL_TOL_FACTOR: f64 = 0.05;
const MAX_STEPS: usize = 2_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct PropagateOptions<T> {
    pub rtol: T,
    /// Times (between `s` and `t`, in integration order) at which `Phi` is
    /// recorded exactly; steps are clipped to land on them.
    pub sample_times: Vec<T>,
    /// Record `(t, ||Phi||_inf)` after every accepted step.
    pub record_steps: bool,
}

impl<T: Real> PropagateOptions<T> {
    pub fn new(rtol: T) -> Self {
        Self { rtol, sample_times: Vec::new(), record_steps: false }
    }

    pub fn with_samples(mut self, samples: Vec<T>) -> Self {
        self.sample_times = samples;
        self
    }

    pub fn recording_steps(mut self) -> Self {
        self.record_steps = true;
        self
    }
}

/// Fundamental matrix `Phi(t, s)` with diagnostics.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<T: Real, const N: usize> {
    pub s: T,
    pub t: T,
    pub phi: SMatrix<T, N, N>,
    /// Sum of accepted local error estimates (max-abs-entry).
    pub est_error: T,
    pub steps: usize,
    pub rejected: usize,
    pub samples: Vec<(T, SMatrix<T, N, N>)>,
    pub step_log: Vec<(T, T)>,
}

fn inf_norm<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> T {
    (0..N).map(|i| (0..N).fold(T::zero(), |s, j| s + m[(i, j)].abs())).fold(T::zero(), T::max)
}

/// `Phi(t, s)` for `dPhi/dt + A(t) Phi = 0`, `Phi(s, s) = I`. Backward
/// propagation (`t < s`) is supported.
pub fn propagate<T: Real, const N: usize, S: LinearSystem<T, N> + ?Sized>(
    sys: &S,
    s: T,
    t: T,
    opts: &PropagateOptions<T>,
) -> Result<TransitionMatrix<T, N>> {
    propagate_from(sys, s, t, SMatrix::identity(), opts)
}

/// Same as [`propagate`] with an arbitrary initial matrix (or column block).
pub fn propagate_from<T: Real, const N: usize, S: LinearSystem<T, N> + ?Sized>(
    sys: &S,
    s: T,
    t: T,
    y0: SMatrix<T, N, N>,
    opts: &PropagateOptions<T>,
) -> Result<TransitionMatrix<T, N>> {
    let rtol = opts.rtol;
    if !(rtol >= T::lit(RTOL_RANGE.0) && rtol <= T::lit(RTOL_RANGE.1)) {
        return Err(Error::InvalidArgument(format!("rtol {rtol} outside [1e-12, 1e-3]")));
    }
    if !(s.is_finite() && t.is_finite()) {
        return Err(Error::InvalidArgument("propagation times must be finite".into()));
    }
    let tol = (rtol * T::lit(LOCAL_TOL_FACTOR)).max(T::tol_floor(0.0));
    let dir = if t >= s { T::one() } else { -T::one() };
    let span = (t - s).abs();
    let mut samples_left: Vec<T> = opts
        .sample_times
        .iter()
        .copied()
        .filter(|&x| (x - s) * dir >= T::zero() && (t - x) * dir >= T::zero())
        .collect();
    samples_left.sort_by(|a, b| (dir * *a).partial_cmp(&(dir * *b)).unwrap());
    let mut next_sample = 0usize;

    let mut out = TransitionMatrix {
        s,
        t,
        phi: y0,
        est_error: T::zero(),
        steps: 0,
        rejected: 0,
        samples: Vec::with_capacity(samples_left.len()),
        step_log: Vec::new(),
    };
    while next_sample < samples_left.len() && samples_left[next_sample] == s {
        out.samples.push((s, y0));
        next_sample += 1;
    }
    if span == T::zero() {
        return Ok(out);
    }

    let f = |tt: T, y: &SMatrix<T, N, N>| -> Result<SMatrix<T, N, N>> { Ok(-(sys.matrix(tt)? * y)) };
    let mut tc = s;
    let mut y = y0;
    let mut k1 = f(tc, &y)?;
    let mut h = {
        let d0 = inf_norm(&y).max(T::lit(1e-5));
        let d1 = inf_norm(&k1);
        let guess = if d1 > T::lit(1e-5) { T::lit(0.01) * d0 / d1 } else { T::lit(0.1) };
        guess.min(span).min(T::one())
    };
    let h_floor = T::epsilon() * T::lit(16.0);
    let lit = |x: f64| T::lit(x);

    loop {
        let remaining = (t - tc) * dir;
        if remaining <= T::zero() {
            break;
        }
        if out.steps + out.rejected > MAX_STEPS {
            return Err(Error::StepUnderflow { t: tc.as_f64(), h: h.as_f64(), err_ratio: f64::NAN });
        }
        let mut target = t;
        if next_sample < samples_left.len() {
            target = samples_left[next_sample];
        }
        let to_target = (target - tc) * dir;
        let mut hh = h.min(remaining);
        let mut hit = false;
        if to_target > T::zero() && hh >= to_target {
            hh = to_target;
            hit = true;
        }
        if hh <= h_floor * tc.abs().max(T::one()) {
            return Err(Error::StepUnderflow { t: tc.as_f64(), h: hh.as_f64(), err_ratio: f64::NAN });
        }
        let hs = hh * dir;

        let k2 = f(tc + lit(C[1]) * hs, &(y + k1 * (hs * lit(A2[0]))))?;
        let k3 = f(tc + lit(C[2]) * hs, &(y + (k1 * lit(A3[0]) + k2 * lit(A3[1])) * hs))?;
        let k4 = f(tc + lit(C[3]) * hs, &(y + (k1 * lit(A4[0]) + k2 * lit(A4[1]) + k3 * lit(A4[2])) * hs))?;
        let k5 = f(
            tc + lit(C[4]) * hs,
            &(y + (k1 * lit(A5[0]) + k2 * lit(A5[1]) + k3 * lit(A5[2]) + k4 * lit(A5[3])) * hs),
        )?;
        let t_new = if hit {
            target
        } else if hh >= remaining {
            t
        } else {
            tc + hs
        };
        let k6 = f(
            t_new,
            &(y + (k1 * lit(A6[0]) + k2 * lit(A6[1]) + k3 * lit(A6[2]) + k4 * lit(A6[3]) + k5 * lit(A6[4])) * hs),
        )?;
        let y_new = y + (k1 * lit(B[0]) + k3 * lit(B[2]) + k4 * lit(B[3]) + k5 * lit(B[4]) + k6 * lit(B[5])) * hs;
        let k7 = f(t_new, &y_new)?;
        let err = (k1 * lit(E[0]) + k3 * lit(E[2]) + k4 * lit(E[3]) + k5 * lit(E[4]) + k6 * lit(E[5]) + k7 * lit(E[6])) * hs;

        let mut ratio = T::zero();
        let mut err_abs = T::zero();
        for i in 0..N {
            for j in 0..N {
                let scale = tol + tol * y[(i, j)].abs().max(y_new[(i, j)].abs());
                ratio = ratio.max(err[(i, j)].abs() / scale);
                err_abs = err_abs.max(err[(i, j)].abs());
            }
        }
        if !ratio.is_finite() {
            return Err(Error::StepUnderflow { t: tc.as_f64(), h: hh.as_f64(), err_ratio: ratio.as_f64() });
        }
        let factor = if ratio == T::zero() {
            lit(5.0)
        } else {
            (lit(0.9) * ratio.powf(lit(-0.2))).max(lit(0.2)).min(lit(5.0))
        };
        if ratio <= T::one() {
            tc = t_new;
            y = y_new;
            k1 = k7;
            out.steps += 1;
            out.est_error += err_abs;
            if opts.record_steps {
                out.step_log.push((tc, inf_norm(&y)));
            }
            if hit {
                while next_sample < samples_left.len() && samples_left[next_sample] == target {
                    out.samples.push((target, y));
                    next_sample += 1;
                }
                // A clipped step says nothing about the natural step size.
                h = h.max(hh * factor);
            } else {
                h = hh * factor;
            }
        } else {
            out.rejected += 1;
            h = hh * factor.min(T::one());
        }
    }
    out.phi = y;
    Ok(out)
}
