use std::f64::consts::{LN_2, TAU};

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Grid, GradientField};
use crate::error::{Error, Result};
use crate::quadrature::GAUSS_LEGENDRE_8;

/// Log-radius half-step of the centered difference giving `r V'(r)`.
pub const LOG_STEP: f64 = LN_2 / 8.0;

/// Quarter-octave radii `2^{-k/4}` strictly inside `(4h, L/2)`, descending.
pub fn profile_radii(grid: &Grid) -> Vec<f64> {
    (0..400)
        .map(|k| 2f64.powf(-(k as f64) / 4.0))
        .filter(|r| *r > 4.0 * grid.h && *r < 0.5 * grid.l)
        .collect()
}

/// Decomposition `U = U0 + V1 x + V2 y + W` on one circle.
#[derive(Debug, Clone)]
pub struct CircleDecomposition {
    pub r: f64,
    pub u0: [f64; 2],
    /// `(V1_1, V1_2, V2_1, V2_2)`: `V1` multiplies `x`, `V2` multiplies `y`.
    pub v: [f64; 4],
    /// `W` at the circle nodes `phi_j = 2 pi j / N`.
    pub w: Vec<[f64; 2]>,
    /// `max(|mean W|, |mean W theta_1|, |mean W theta_2|) / max |U|`.
    pub moment_residual: f64,
    /// Max over nodes of `|U - (U0 + V1 x + V2 y + W)|`.
    pub reconstruction_error: f64,
    pub u_max: f64,
}

pub fn decompose_circle(gradient: &GradientField, r: f64, nodes: usize) -> CircleDecomposition {
    let inv = 1.0 / nodes as f64;
    let pts: Vec<(f64, f64, [f64; 2])> = (0..nodes)
        .map(|j| {
            let (s, c) = (TAU * j as f64 * inv).sin_cos();
            (c, s, gradient.at(r * c, r * s))
        })
        .collect();
    let mut u0 = [0.0; 2];
    let mut m1 = [0.0; 2];
    let mut m2 = [0.0; 2];
    for (c, s, u) in &pts {
        for k in 0..2 {
            u0[k] += u[k] * inv;
            m1[k] += u[k] * c * inv;
            m2[k] += u[k] * s * inv;
        }
    }
    let v = [2.0 * m1[0] / r, 2.0 * m1[1] / r, 2.0 * m2[0] / r, 2.0 * m2[1] / r];
    let mut w = Vec::with_capacity(nodes);
    let (mut wm, mut wc, mut ws) = ([0.0; 2], [0.0; 2], [0.0; 2]);
    let mut u_max = 0.0f64;
    let mut recon = 0.0f64;
    for (c, s, u) in &pts {
        let (x, y) = (r * c, r * s);
        let wk = [u[0] - u0[0] - v[0] * x - v[2] * y, u[1] - u0[1] - v[1] * x - v[3] * y];
        for k in 0..2 {
            wm[k] += wk[k] * inv;
            wc[k] += wk[k] * c * inv;
            ws[k] += wk[k] * s * inv;
            let back = u0[k] + v[k] * x + v[k + 2] * y + wk[k];
            recon = recon.max((back - u[k]).abs());
        }
        u_max = u_max.max(u[0].abs()).max(u[1].abs());
        w.push(wk);
    }
    let worst = [wm, wc, ws].iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    CircleDecomposition {
        r,
        u0,
        v,
        w,
        moment_residual: if u_max > 0.0 { worst / u_max } else { worst },
        reconstruction_error: recon,
        u_max,
    }
}

/// `M_p(W, r)` and `M_p(grad W, r)` over the annulus `r < |x| < 2r`: Gauss
/// nodes in the radius, the circle rule in the angle. The radial derivative
/// is a centered difference with step `h`, the angular one a fourth-order
/// periodic difference.
fn annulus_norms(gradient: &GradientField, r: f64, p: f64, nodes: usize) -> (f64, f64) {
    let h = gradient.grid.h;
    let dphi = TAU / nodes as f64;
    let (mut sw, mut sg) = (0.0, 0.0);
    for (rho, wt) in GAUSS_LEGENDRE_8.panel(r, 2.0 * r) {
        let mid = decompose_circle(gradient, rho, nodes);
        let outer = decompose_circle(gradient, rho + h, nodes);
        let inner = decompose_circle(gradient, rho - h, nodes);
        let (mut cw, mut cg) = (0.0, 0.0);
        for j in 0..nodes {
            let at = |k: isize| mid.w[(j as isize + k).rem_euclid(nodes as isize) as usize];
            let mut grad2 = 0.0;
            for m in 0..2 {
                let dr = (outer.w[j][m] - inner.w[j][m]) / (2.0 * h);
                let dp = (-at(2)[m] + 8.0 * at(1)[m] - 8.0 * at(-1)[m] + at(-2)[m]) / (12.0 * dphi);
                grad2 += dr * dr + (dp / rho) * (dp / rho);
            }
            let wn = mid.w[j][0].hypot(mid.w[j][1]);
            cw += wn.powf(p);
            cg += grad2.sqrt().powf(p);
        }
        sw += wt * rho * cw / nodes as f64;
        sg += wt * rho * cg / nodes as f64;
    }
    let area = 1.5 * r * r;
    ((sw / area).powf(1.0 / p), (sg / area).powf(1.0 / p))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub u0: [f64; 2],
    pub v: [f64; 4],
    /// `r V'(r) = dV / d log r`.
    pub r_vprime: [f64; 4],
    pub mp_w: f64,
    pub mp_grad_w: f64,
    /// `r M_p(grad W, r) + M_p(W, r)`.
    pub m1p_w: f64,
    pub moment_residual: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionProfile {
    pub p: f64,
    pub nodes_per_circle: usize,
    /// Descending in `r`.
    pub rows: Vec<ProfileRow>,
}

impl DecompositionProfile {
    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    pub fn max_moment_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.moment_residual).fold(0.0, f64::max)
    }
}

pub fn decompose(gradient: &GradientField, radii: &[f64], p: f64, nodes_per_circle: usize) -> Result<DecompositionProfile> {
    let g = gradient.grid;
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p must exceed 2, got {p}")));
    }
    if nodes_per_circle < 16 || !nodes_per_circle.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!("nodes per circle must be a multiple of 4 and >= 16, got {nodes_per_circle}")));
    }
    for &r in radii {
        if !(r > 4.0 * g.h) {
            return Err(Error::RadiusTooSmall { radius: r, h: g.h });
        }
        if !(r < 0.5 * g.l) {
            return Err(Error::InvalidArgument(format!("radius {r} must stay below L/2 = {}", 0.5 * g.l)));
        }
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let rows = sorted
        .par_iter()
        .map(|&r| {
            let mid = decompose_circle(gradient, r, nodes_per_circle);
            let up = decompose_circle(gradient, r * LOG_STEP.exp(), nodes_per_circle);
            let dn = decompose_circle(gradient, r * (-LOG_STEP).exp(), nodes_per_circle);
            let r_vprime = std::array::from_fn(|k| (up.v[k] - dn.v[k]) / (2.0 * LOG_STEP));
            let (mp_w, mp_grad_w) = annulus_norms(gradient, r, p, nodes_per_circle);
            ProfileRow {
                r,
                u0: mid.u0,
                v: mid.v,
                r_vprime,
                mp_w,
                mp_grad_w,
                m1p_w: r * mp_grad_w + mp_w,
                moment_residual: mid.moment_residual,
                reconstruction_error: mid.reconstruction_error,
            }
        })
        .collect();
    Ok(DecompositionProfile { p, nodes_per_circle, rows })
}
