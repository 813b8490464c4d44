//! Constant matrices of the 8-dimensional system: `M_inf`, `J`, `J^{-1}`.

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::linalg::{stack4x4, Mat4, Mat8};
use crate::scalar::Real;

/// `[[-I, 2I], [I/2, -I]]`.
pub fn m_inf<T: Real>() -> Mat8<T> {
    let i = Mat4::<T>::identity();
    stack4x4(&[[-i, i * T::two()], [i * T::half(), -i]])
}

/// `[[2I, 2I], [I, -I]]`.
pub fn j_matrix<T: Real>() -> Mat8<T> {
    let i = Mat4::<T>::identity();
    stack4x4(&[[i * T::two(), i * T::two()], [i, -i]])
}

/// `[[I/4, I/2], [I/4, -I/2]]`.
pub fn j_inverse<T: Real>() -> Mat8<T> {
    let i = Mat4::<T>::identity();
    let q = T::lit(0.25);
    stack4x4(&[[i * q, i * T::half()], [i * q, -i * T::half()]])
}

/// `diag(0, 0, 0, 0, -2, -2, -2, -2)`.
pub fn d_inf<T: Real>() -> Mat8<T> {
    Mat8::from_fn(|i, j| if i == j && i >= 4 { -T::two() } else { T::zero() })
}

type Q8 = [[Rational64; 8]; 8];

fn q_from(blocks: [[(i64, i64); 2]; 2]) -> Q8 {
    let mut out = [[Rational64::zero(); 8]; 8];
    for bi in 0..2 {
        for bj in 0..2 {
            let (n, d) = blocks[bi][bj];
            for k in 0..4 {
                out[4 * bi + k][4 * bj + k] = Rational64::new(n, d);
            }
        }
    }
    out
}

fn q_mul(a: &Q8, b: &Q8) -> Q8 {
    let mut out = [[Rational64::zero(); 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            out[i][j] = (0..8).fold(Rational64::zero(), |s, k| s + a[i][k] * b[k][j]);
        }
    }
    out
}

/// Exact rational checks: `J^{-1} J = I` and `J^{-1} M_inf J = diag(0, -2 I)`.
pub fn verify_j_rational() -> bool {
    let j = q_from([[(2, 1), (2, 1)], [(1, 1), (-1, 1)]]);
    let j_inv = q_from([[(1, 4), (1, 2)], [(1, 4), (-1, 2)]]);
    let m_inf = q_from([[(-1, 1), (2, 1)], [(1, 2), (-1, 1)]]);
    let id = q_mul(&j_inv, &j);
    let d = q_mul(&q_mul(&j_inv, &m_inf), &j);
    (0..8).all(|i| {
        (0..8).all(|k| {
            let want_id = if i == k { Rational64::one() } else { Rational64::zero() };
            let want_d = if i == k && i >= 4 { Rational64::from_integer(-2) } else { Rational64::zero() };
            id[i][k] == want_id && d[i][k] == want_d
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_conjugation_is_exact() {
        assert!(verify_j_rational());
    }

    #[test]
    fn float_conjugation_is_exact() {
        let d = j_inverse::<f64>() * m_inf::<f64>() * j_matrix::<f64>();
        assert_eq!(d, d_inf::<f64>());
        assert_eq!(j_inverse::<f64>() * j_matrix::<f64>(), Mat8::identity());
    }
}
