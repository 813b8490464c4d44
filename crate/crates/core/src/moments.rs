//! Circle moments of the coefficient field: the six second spherical moments,
//! the matrix `R(r)`, and the 2x2 quadrature blocks of the radial and
//! first-moment equations.
//!
//! The divergence-form system is `d_i (A_ij d_j U) = 0` with
//!
//! ```text
//! A11 = diag(a, 1)   A12 = [[b, c - 1], [0, 0]]
//! A21 = [[0, 0], [a - 1, b]]   A22 = diag(1, c)
//! ```
//!
//! and `theta = (cos phi, sin phi)`.

use serde::Serialize;

use crate::coeff::{CoefficientField, Coefficients};
use crate::error::Result;
use crate::linalg::{max_abs, stack2x2, Mat2, Mat4, Vec2, Vec4};
use crate::quadrature::{circle_mean_vec, MIN_CIRCLE_NODES};
use crate::scalar::Real;

/// `(a1, a2, b1, b2, c1, c2)` at radius `r`, where
/// `f1 = mean f (theta2^2 - theta1^2)` and `f2 = -2 mean f theta1 theta2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MomentVector<T> {
    pub r: T,
    pub a1: T,
    pub a2: T,
    pub b1: T,
    pub b2: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Real> MomentVector<T> {
    pub fn zero(r: T) -> Self {
        Self { r, a1: T::zero(), a2: T::zero(), b1: T::zero(), b2: T::zero(), c1: T::zero(), c2: T::zero() }
    }

    pub fn as_array(&self) -> [T; 6] {
        [self.a1, self.a2, self.b1, self.b2, self.c1, self.c2]
    }

    pub fn from_array(r: T, m: [T; 6]) -> Self {
        Self { r, a1: m[0], a2: m[1], b1: m[2], b2: m[3], c1: m[4], c2: m[5] }
    }

    pub fn max_abs(&self) -> T {
        self.as_array().iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Six moments at radius `r` by adaptive trapezoidal circle means.
pub fn moment_vector<T: Real>(field: &CoefficientField<T>, r: T) -> Result<MomentVector<T>> {
    let means = circle_mean_vec(6, MIN_CIRCLE_NODES, |phi: T, out: &mut [T]| {
        let (s, c) = phi.sin_cos();
        let w1 = s * s - c * c;
        let w2 = -T::two() * c * s;
        let k = field.deviation_at_polar(r, phi);
        out[0] = k.a * w1;
        out[1] = k.a * w2;
        out[2] = k.b * w1;
        out[3] = k.b * w2;
        out[4] = k.c * w1;
        out[5] = k.c * w2;
    })
    .map_err(|e| radius_context(e, r))?;
    let v = &means.values;
    Ok(MomentVector::from_array(r, [v[0], v[1], v[2], v[3], v[4], v[5]]))
}

fn radius_context<T: Real>(e: crate::error::Error, r: T) -> crate::error::Error {
    match e {
        crate::error::Error::NonFinite { phi } => crate::error::Error::Evaluator {
            radius: r.as_f64(),
            reason: format!("non-finite integrand at phi = {phi}"),
        },
        other => other,
    }
}

/// 4x4 matrix `R` with the fixed sign and zero pattern
///
/// ```text
/// ( a1   0   b1  c1 )
/// ( a2  b2   0   c2 )
/// ( a2   0   b2  c2 )
/// (-a1 -b1   0  -c1 )
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RMatrix<T: Real> {
    pub r: T,
    pub entries: Mat4<T>,
}

pub fn assemble_r<T: Real>(m: &MomentVector<T>) -> RMatrix<T> {
    let z = T::zero();
    #[rustfmt::skip]
    let entries = Mat4::new(
        m.a1, z, m.b1, m.c1,
        m.a2, m.b2, z, m.c2,
        m.a2, z, m.b2, m.c2,
        -m.a1, -m.b1, z, -m.c1,
    );
    RMatrix { r: m.r, entries }
}

/// Pointwise blocks `[A11, A12; A21, A22]`, indexed `[i][j]`.
pub fn a_blocks<T: Real>(k: &Coefficients<T>) -> [[Mat2<T>; 2]; 2] {
    let (o, z) = (T::one(), T::zero());
    [
        [Mat2::new(k.a, z, z, o), Mat2::new(k.b, k.c - o, z, z)],
        [Mat2::new(z, z, k.a - o, k.b), Mat2::new(o, z, z, k.c)],
    ]
}

/// `Omega_ij = A_ij - delta_ij I`.
pub fn omega_blocks<T: Real>(k: &Coefficients<T>) -> [[Mat2<T>; 2]; 2] {
    let mut b = a_blocks(k);
    b[0][0] -= Mat2::identity();
    b[1][1] -= Mat2::identity();
    b
}

/// Circle-averaged 2x2 blocks at one radius. Index pairs `[k][l]` run over
/// `{0, 1}` for the mathematical indices `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockTable<T: Real> {
    pub r: T,
    /// `mean A_ij theta_i theta_j`
    pub cal_a: Mat2<T>,
    /// `mean A_ij theta_k theta_i theta_j`
    pub cal_b: [Mat2<T>; 2],
    /// `mean A_ik theta_i`
    pub gamma: [Mat2<T>; 2],
    /// `mean A_ij theta_i theta_j theta_k theta_l`
    pub cal_a_kl: [[Mat2<T>; 2]; 2],
    /// `mean A_il theta_i theta_k`
    pub cal_b_kl: [[Mat2<T>; 2]; 2],
    /// `mean A_ki theta_i theta_l`
    pub cal_bt_kl: [[Mat2<T>; 2]; 2],
    /// `mean A_kl`
    pub cal_c_kl: [[Mat2<T>; 2]; 2],
    /// `mean A_ki theta_i`
    pub gamma_t: [Mat2<T>; 2],
}

const BLOCK_DIM: usize = 4 * (1 + 2 + 2 + 4 * 4 + 2);

fn put<T: Real>(out: &mut [T], slot: usize, m: &Mat2<T>) {
    out[4 * slot] += m[(0, 0)];
    out[4 * slot + 1] += m[(0, 1)];
    out[4 * slot + 2] += m[(1, 0)];
    out[4 * slot + 3] += m[(1, 1)];
}

fn take<T: Real>(v: &[T], slot: usize) -> Mat2<T> {
    Mat2::new(v[4 * slot], v[4 * slot + 1], v[4 * slot + 2], v[4 * slot + 3])
}

/// Slot layout: cal_a 0, cal_b 1..3, gamma 3..5, cal_a_kl 5..9, cal_b_kl
/// 9..13, cal_bt_kl 13..17, cal_c_kl 17..21, gamma_t 21..23.
fn block_integrand<T: Real>(k: &Coefficients<T>, phi: T, out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    let (s, c) = phi.sin_cos();
    let th = [c, s];
    let a = a_blocks(k);
    for i in 0..2 {
        for j in 0..2 {
            let tij = th[i] * th[j];
            put(out, 0, &(a[i][j] * tij));
            for kk in 0..2 {
                put(out, 1 + kk, &(a[i][j] * (th[kk] * tij)));
                for l in 0..2 {
                    put(out, 5 + 2 * kk + l, &(a[i][j] * (tij * th[kk] * th[l])));
                }
            }
        }
    }
    for kk in 0..2 {
        for i in 0..2 {
            put(out, 3 + kk, &(a[i][kk] * th[i]));
            put(out, 21 + kk, &(a[kk][i] * th[i]));
            for l in 0..2 {
                put(out, 9 + 2 * kk + l, &(a[i][l] * (th[i] * th[kk])));
                put(out, 13 + 2 * kk + l, &(a[kk][i] * (th[i] * th[l])));
            }
        }
        for l in 0..2 {
            put(out, 17 + 2 * kk + l, &a[kk][l]);
        }
    }
}

pub fn block_table<T: Real>(field: &CoefficientField<T>, r: T) -> Result<BlockTable<T>> {
    let means = circle_mean_vec(BLOCK_DIM, MIN_CIRCLE_NODES, |phi: T, out: &mut [T]| {
        block_integrand(&field.at_polar(r, phi), phi, out)
    })
    .map_err(|e| radius_context(e, r))?;
    let v = &means.values;
    let pair = |base: usize| [[take(v, base), take(v, base + 1)], [take(v, base + 2), take(v, base + 3)]];
    Ok(BlockTable {
        r,
        cal_a: take(v, 0),
        cal_b: [take(v, 1), take(v, 2)],
        gamma: [take(v, 3), take(v, 4)],
        cal_a_kl: pair(5),
        cal_b_kl: pair(9),
        cal_bt_kl: pair(13),
        cal_c_kl: pair(17),
        gamma_t: [take(v, 21), take(v, 22)],
    })
}

/// 4x4 assemblies of the `[k][l]` blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockAssembly<T: Real> {
    pub a: Mat4<T>,
    pub b: Mat4<T>,
    pub bt: Mat4<T>,
    pub c: Mat4<T>,
}

impl<T: Real> BlockTable<T> {
    pub fn assemble(&self) -> BlockAssembly<T> {
        BlockAssembly {
            a: stack2x2(&self.cal_a_kl),
            b: stack2x2(&self.cal_b_kl),
            bt: stack2x2(&self.cal_bt_kl),
            c: stack2x2(&self.cal_c_kl),
        }
    }

    /// Largest deviation of every block from its constant-coefficient value,
    /// max-absolute-entry norm.
    pub fn max_deviation(&self) -> T {
        let half = Mat2::identity() * T::half();
        let mut d = max_abs(&(self.cal_a - Mat2::identity()));
        for k in 0..2 {
            d = d.max(max_abs(&self.cal_b[k])).max(max_abs(&self.gamma[k])).max(max_abs(&self.gamma_t[k]));
            for l in 0..2 {
                let (h, id) = if k == l { (half, Mat2::identity()) } else { (Mat2::zeros(), Mat2::zeros()) };
                d = d
                    .max(max_abs(&(self.cal_a_kl[k][l] - h)))
                    .max(max_abs(&(self.cal_b_kl[k][l] - h)))
                    .max(max_abs(&(self.cal_bt_kl[k][l] - h)))
                    .max(max_abs(&(self.cal_c_kl[k][l] - id)));
            }
        }
        d
    }
}

/// `max |R - (C - 2B)|` at radius `r`; both sides come from independent
/// quadratures, so the value is pure quadrature error.
pub fn verify_r_identity<T: Real>(field: &CoefficientField<T>, r: T) -> Result<T> {
    let rm = assemble_r(&moment_vector(field, r)?);
    let bl = block_table(field, r)?.assemble();
    Ok(max_abs(&(rm.entries - (bl.c - bl.b * T::two()))))
}

/// Value and gradient of a vector field `W = (W_1, W_2)`;
/// `grad[m][j] = d_j W_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorJet<T> {
    pub value: [T; 2],
    pub grad: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing<T: Real> {
    pub r: T,
    /// `mean A_ij theta_i d_j W`
    pub lambda: Vec2<T>,
    /// `mean A_ij theta_i theta_k d_j W`
    pub p: [Vec2<T>; 2],
    /// `mean A_kj d_j W`
    pub q: [Vec2<T>; 2],
    /// `mean |grad W|` (Frobenius)
    pub grad_mean: T,
    /// `max(|mean W|, |mean W theta_1|, |mean W theta_2|) / max |W|`
    pub moment_residual: T,
    /// The circle data satisfies the zero mean and first-moment conditions.
    pub w_conditions_ok: bool,
    /// `None` when the moment conditions fail on the sampled circle.
    pub bound_ok: Option<bool>,
}

/// Relative tolerance of the zero mean and first-moment conditions.
pub const W_CONDITION_TOL: f64 = 1e-10;
/// Absolute slack of the forcing bound.
pub const FORCING_BOUND_SLACK: f64 = 1e-10;

pub fn forcing_functionals<T: Real>(
    field: &CoefficientField<T>,
    r: T,
    w: impl Fn(T, T) -> VectorJet<T>,
) -> Result<Forcing<T>> {
    // Layout: lambda 0..2, p 2..6, q 6..10, |grad W| 10, W-moments 11..17, |W| 17.
    let mut w_max = T::zero();
    let means = circle_mean_vec(18, MIN_CIRCLE_NODES, |phi: T, out: &mut [T]| {
        out.iter_mut().for_each(|v| *v = T::zero());
        let (s, c) = phi.sin_cos();
        let th = [c, s];
        let jet = w(r * c, r * s);
        let a = a_blocks(&field.at_polar(r, phi));
        for i in 0..2 {
            for j in 0..2 {
                let dj = Vec2::new(jet.grad[0][j], jet.grad[1][j]);
                let v = a[i][j] * dj;
                for m in 0..2 {
                    out[m] += th[i] * v[m];
                    for k in 0..2 {
                        out[2 + 2 * k + m] += th[i] * th[k] * v[m];
                    }
                }
                let vq = a[i][j] * dj;
                for m in 0..2 {
                    out[6 + 2 * i + m] += vq[m];
                }
            }
        }
        let g = &jet.grad;
        out[10] = (g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]).sqrt();
        for m in 0..2 {
            out[11 + 3 * m] = jet.value[m];
            out[12 + 3 * m] = jet.value[m] * c;
            out[13 + 3 * m] = jet.value[m] * s;
        }
        out[17] = jet.value[0].abs().max(jet.value[1].abs());
        w_max = w_max.max(out[17]);
    })
    .map_err(|e| radius_context(e, r))?;
    let v = &means.values;
    let moment_abs = v[11..17].iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let moment_residual = if w_max > T::zero() { moment_abs / w_max } else { T::zero() };
    let w_conditions_ok = moment_residual <= T::tol_floor(W_CONDITION_TOL);
    let lambda = Vec2::new(v[0], v[1]);
    let p = [Vec2::new(v[2], v[3]), Vec2::new(v[4], v[5])];
    let q = [Vec2::new(v[6], v[7]), Vec2::new(v[8], v[9])];
    let grad_mean = v[10];
    let bound = field.modulus.eval(r) * grad_mean + T::lit(FORCING_BOUND_SLACK);
    let largest = [lambda, p[0], p[1], q[0], q[1]].iter().fold(T::zero(), |m, x| m.max(x[0].hypot(x[1])));
    Ok(Forcing {
        r,
        lambda,
        p,
        q,
        grad_mean,
        moment_residual,
        w_conditions_ok,
        bound_ok: w_conditions_ok.then_some(largest <= bound),
    })
}

/// Stacks `(V_1, V_2)` into a 4-vector.
pub fn stack_v<T: Real>(v1: Vec2<T>, v2: Vec2<T>) -> Vec4<T> {
    Vec4::new(v1[0], v1[1], v2[0], v2[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{make_harmonic_family, make_radial_family, make_trig_poly_family, Profile, Target};

    /// `a = 1 + g cos(2 phi + phase)` with constant `g`.
    fn a_family(g: f64, sin: bool) -> CoefficientField<f64> {
        let phase = if sin { -std::f64::consts::FRAC_PI_2 } else { 0.0 };
        let m = crate::coeff::ModulusOfContinuity::new("const", move |_| g.abs());
        CoefficientField::new(
            "const_a",
            move |x: f64, y: f64| 1.0 + g * (2.0 * y.atan2(x) + phase).cos(),
            |_, _| 0.0,
            |_, _| 1.0,
            m,
            4.0 * (1.0 - g.abs()),
        )
    }

    #[test]
    fn laplacian_moments_and_blocks() {
        let f = CoefficientField::<f64>::laplacian();
        let m = moment_vector(&f, 0.5).unwrap();
        assert!(m.max_abs() < 1e-16);
        let b = block_table(&f, 0.5).unwrap();
        assert!(b.max_deviation() < 1e-15);
        assert!((b.cal_a_kl[0][0][(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cos_and_sin_families() {
        let g = 0.3;
        let r = 0.5;
        let gr = g;
        let m = moment_vector(&a_family(g, false), r).unwrap();
        assert!((m.a1 + gr / 2.0).abs() < 1e-14 && m.a2.abs() < 1e-14);
        assert!(m.b1.abs() + m.b2.abs() + m.c1.abs() + m.c2.abs() < 1e-15);
        let m = moment_vector(&a_family(g, true), r).unwrap();
        assert!(m.a1.abs() < 1e-14 && (m.a2 + gr / 2.0).abs() < 1e-14);
    }

    #[test]
    fn r_pattern() {
        let m = MomentVector::from_array(1.0, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = assemble_r(&m).entries;
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| r[(i, j)]).collect()).collect();
        assert_eq!(rows[0], vec![1.0, 0.0, 3.0, 5.0]);
        assert_eq!(rows[1], vec![2.0, 4.0, 0.0, 6.0]);
        assert_eq!(rows[2], vec![2.0, 0.0, 4.0, 6.0]);
        assert_eq!(rows[3], vec![-1.0, -3.0, 0.0, -5.0]);
        let r = assemble_r(&MomentVector::from_array(1.0, [-0.1, 0.0, 0.0, 0.0, 0.0, 0.0])).entries;
        assert_eq!(r.column(0).iter().copied().collect::<Vec<_>>(), vec![-0.1, 0.0, 0.0, 0.1]);
    }

    #[test]
    fn identity_on_fixed_and_random_fields() {
        assert!(verify_r_identity(&a_family(0.3, false), 0.5).unwrap() <= 1e-12);
        for seed in 0..5 {
            let f = make_trig_poly_family::<f64>(seed, 6, 0.2).unwrap();
            for r in [1.0, 0.25, 1.0 / 64.0] {
                assert!(verify_r_identity(&f, r).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn c_blocks_are_coefficient_means() {
        let f = a_family(0.3, false);
        let b = block_table(&f, 0.5).unwrap();
        assert!(max_abs(&(b.cal_c_kl[0][0] - Mat2::identity())) < 1e-15);
    }

    #[test]
    fn radial_moments_vanish() {
        let f = make_radial_family::<f64>(
            Some(Profile::Power { scale: 0.3, alpha: 0.5 }),
            Some(Profile::LogInverse { gamma: 0.2, shift: 0.0 }),
            None,
        )
        .unwrap();
        for r in [1.0, 0.1, 1e-4] {
            assert!(moment_vector(&f, r).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn forcing_vanishes_for_zero_and_laplacian() {
        let zero = |_: f64, _: f64| VectorJet { value: [0.0; 2], grad: [[0.0; 2]; 2] };
        let f = CoefficientField::<f64>::laplacian();
        let out = forcing_functionals(&f, 0.5, zero).unwrap();
        assert_eq!(out.lambda.norm(), 0.0);
        assert_eq!(out.bound_ok, Some(true));
        let w = |x: f64, y: f64| VectorJet { value: [x * x - y * y, 0.0], grad: [[2.0 * x, -2.0 * y], [0.0, 0.0]] };
        let out = forcing_functionals(&f, 0.5, w).unwrap();
        for v in [out.lambda, out.p[0], out.p[1], out.q[0], out.q[1]] {
            assert!(v.norm() < 1e-15);
        }
        let g = a_family(0.2, false);
        let out = forcing_functionals(&g, 0.5, w).unwrap();
        assert_eq!(out.bound_ok, Some(true));
        assert!(out.lambda.norm() > 0.0);
    }

    #[test]
    fn forcing_flags_moment_violation() {
        let w = |x: f64, _: f64| VectorJet { value: [x, 0.0], grad: [[1.0, 0.0], [0.0, 0.0]] };
        let out = forcing_functionals(&CoefficientField::<f64>::laplacian(), 0.5, w).unwrap();
        assert!(!out.w_conditions_ok);
        assert_eq!(out.bound_ok, None);
    }

    #[test]
    fn f32_moments() {
        let f = make_harmonic_family::<f32>(Target::A, Profile::Power { scale: 0.3, alpha: 0.5 }, 2, 0.0).unwrap();
        let m = moment_vector(&f, 0.25f32).unwrap();
        assert!((m.a1 + 0.15 * 0.5).abs() < 1e-6);
        assert!(verify_r_identity(&f, 0.25f32).unwrap() < 1e-5);
    }
}
