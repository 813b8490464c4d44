//! Trapezoidal circle averages and fixed Gauss-Legendre panels.
//!
//! The uniform trapezoid rule on `[0, 2pi)` with `N` nodes integrates every
//! trigonometric polynomial of degree `< N` exactly, so coefficient fields
//! built from finitely many angular modes have exact moments once the node
//! count clears their angular degree.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest node count accepted by the adaptive circle mean.
pub const MIN_CIRCLE_NODES: usize = 16;
/// Node cap for the adaptive circle mean.
pub const MAX_CIRCLE_NODES: usize = 1 << 14;
/// Relative agreement between successive refinements.
pub const CIRCLE_REL_TOL: f64 = 1e-13;

/// Result of a (possibly vector-valued) circle mean.
#[derive(Debug, Clone)]
pub struct CircleMeans<T> {
    pub values: Vec<T>,
    /// Mean of `|f_i|` on the final node set, the scale used for the stop test.
    pub abs_means: Vec<T>,
    pub nodes: usize,
    pub converged: bool,
}

fn check_nodes(n_nodes: usize) -> Result<()> {
    if n_nodes < MIN_CIRCLE_NODES || !n_nodes.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "circle node count must be a power of two >= {MIN_CIRCLE_NODES}, got {n_nodes}"
        )));
    }
    Ok(())
}

fn accumulate<T: Real>(
    f: &mut impl FnMut(T, &mut [T]),
    phis: impl Iterator<Item = T>,
    sum: &mut [T],
    abs_sum: &mut [T],
    buf: &mut [T],
) -> Result<()> {
    for phi in phis {
        f(phi, buf);
        for (i, v) in buf.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { phi: phi.as_f64() });
            }
            sum[i] += *v;
            abs_sum[i] += v.abs();
        }
    }
    Ok(())
}

/// Vector circle mean `(1/2pi) * int_0^{2pi} f(phi) dphi` with node doubling.
///
/// `f(phi, out)` writes `dim` integrand components. Refinement starts at
/// `n_nodes` and doubles until every component agrees with the previous level
/// to [`CIRCLE_REL_TOL`] (relative to `max(|mean|, mean|f|)`) or the node cap
/// is reached.
pub fn circle_mean_vec<T: Real>(
    dim: usize,
    n_nodes: usize,
    mut f: impl FnMut(T, &mut [T]),
) -> Result<CircleMeans<T>> {
    check_nodes(n_nodes)?;
    let tol = T::tol_floor(CIRCLE_REL_TOL);
    let two_pi = T::TAU();
    let mut buf = vec![T::zero(); dim];
    let mut sum = vec![T::zero(); dim];
    let mut abs_sum = vec![T::zero(); dim];
    let mut n = n_nodes;
    let step = two_pi / T::lit(n as f64);
    accumulate(&mut f, (0..n).map(|k| step * T::lit(k as f64)), &mut sum, &mut abs_sum, &mut buf)?;
    let mut prev: Vec<T> = sum.iter().map(|s| *s / T::lit(n as f64)).collect();
    loop {
        if n >= MAX_CIRCLE_NODES {
            let abs_means = abs_sum.iter().map(|s| *s / T::lit(n as f64)).collect();
            return Ok(CircleMeans { values: prev, abs_means, nodes: n, converged: false });
        }
        let fine = n * 2;
        let h = two_pi / T::lit(fine as f64);
        accumulate(
            &mut f,
            (0..n).map(|k| h * T::lit((2 * k + 1) as f64)),
            &mut sum,
            &mut abs_sum,
            &mut buf,
        )?;
        n = fine;
        let nf = T::lit(n as f64);
        let cur: Vec<T> = sum.iter().map(|s| *s / nf).collect();
        let done = cur.iter().zip(&prev).zip(&abs_sum).all(|((c, p), a)| {
            let scale = c.abs().max(*a / nf);
            (*c - *p).abs() <= tol * scale
        });
        if done {
            let abs_means = abs_sum.iter().map(|s| *s / nf).collect();
            return Ok(CircleMeans { values: cur, abs_means, nodes: n, converged: true });
        }
        prev = cur;
    }
}

/// Scalar adaptive circle mean.
pub fn circle_mean<T: Real>(f: impl Fn(T) -> T, n_nodes: usize) -> Result<T> {
    let out = circle_mean_vec(1, n_nodes, |phi, o: &mut [T]| o[0] = f(phi))?;
    Ok(out.values[0])
}

/// Circle mean on exactly `n_nodes` uniform nodes, no refinement. Used for
/// integrands that are only piecewise smooth (interpolated grid data).
pub fn circle_mean_fixed<T: Real>(
    dim: usize,
    n_nodes: usize,
    mut f: impl FnMut(T, &mut [T]),
) -> Result<Vec<T>> {
    if n_nodes == 0 {
        return Err(Error::InvalidArgument("circle node count must be positive".into()));
    }
    let step = T::TAU() / T::lit(n_nodes as f64);
    let mut buf = vec![T::zero(); dim];
    let mut sum = vec![T::zero(); dim];
    let mut abs_sum = vec![T::zero(); dim];
    accumulate(&mut f, (0..n_nodes).map(|k| step * T::lit(k as f64)), &mut sum, &mut abs_sum, &mut buf)?;
    Ok(sum.into_iter().map(|s| s / T::lit(n_nodes as f64)).collect())
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct GaussLegendre {
    pub nodes: &'static [f64],
    pub weights: &'static [f64],
}

pub const GAUSS_LEGENDRE_4: GaussLegendre = GaussLegendre {
    nodes: &[-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
    weights: &[0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
};

pub const GAUSS_LEGENDRE_8: GaussLegendre = GaussLegendre {
    nodes: &[
        -0.960_289_856_497_536_3,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ],
    weights: &[
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ],
};

impl GaussLegendre {
    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn panel<T: Real>(&self, lo: T, hi: T) -> impl Iterator<Item = (T, T)> + '_ {
        let mid = (lo + hi) * T::half();
        let half = (hi - lo) * T::half();
        self.nodes
            .iter()
            .zip(self.weights)
            .map(move |(x, w)| (mid + half * T::lit(*x), half * T::lit(*w)))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T: Real>(&self, lo: T, hi: T, f: impl Fn(T) -> T) -> T {
        self.panel(lo, hi).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mean_is_exact() {
        assert_eq!(circle_mean(|_p: f64| 1.0, 16).unwrap(), 1.0);
    }

    #[test]
    fn cos_squared_two_phi() {
        let out = circle_mean_vec(1, 16, |p: f64, o: &mut [f64]| o[0] = (2.0 * p).cos().powi(2)).unwrap();
        assert!((out.values[0] - 0.5).abs() < 1e-14);
        assert_eq!(out.nodes, 32);
        assert!(out.converged);
    }

    #[test]
    fn orthogonal_mode_vanishes() {
        let v = circle_mean(|p: f64| (2.0 * p).cos(), 16).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_node_counts() {
        assert!(circle_mean(|_p: f64| 1.0, 12).is_err());
        assert!(circle_mean(|_p: f64| 1.0, 8).is_err());
    }

    #[test]
    fn non_finite_reports_phi() {
        let err = circle_mean(|p: f64| if p > 3.0 { f64::NAN } else { 0.0 }, 16).unwrap_err();
        match err {
            Error::NonFinite { phi } => assert!(phi > 3.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn smooth_non_polynomial_refines() {
        // (1/2pi) int exp(cos phi) = I_0(1)
        let out = circle_mean_vec(1, 16, |p: f64, o: &mut [f64]| o[0] = p.cos().exp()).unwrap();
        assert!((out.values[0] - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!(out.converged);
    }

    #[test]
    fn f32_precision_works() {
        let v = circle_mean(|p: f32| (3.0 * p).sin().powi(2), 16).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
    }

    #[test]
    fn gauss_legendre_exact_for_degree_15() {
        let v = GAUSS_LEGENDRE_8.integrate(0.0_f64, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let w = GAUSS_LEGENDRE_4.integrate(-1.0_f64, 1.0, |x| x.powi(6));
        assert!((w - 2.0 / 7.0).abs() < 1e-15);
    }
}
