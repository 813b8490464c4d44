//! Small dense matrix helpers over [`Real`] scalars.

use nalgebra::SMatrix;

use crate::scalar::Real;

pub type Mat2<T> = SMatrix<T, 2, 2>;
pub type Mat4<T> = SMatrix<T, 4, 4>;
pub type Mat8<T> = SMatrix<T, 8, 8>;
pub type Vec2<T> = nalgebra::SVector<T, 2>;
pub type Vec4<T> = nalgebra::SVector<T, 4>;

/// Gauss-Jordan inverse with partial pivoting. Returns `None` for a
/// numerically singular matrix (pivot below `n * eps * max|a|`).
pub fn invert<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> Option<SMatrix<T, N, N>> {
    let mut a = *m;
    let mut inv = SMatrix::<T, N, N>::identity();
    let scale = max_abs(m);
    if scale == T::zero() {
        return None;
    }
    let cutoff = scale * T::epsilon() * T::lit(N as f64);
    for col in 0..N {
        let mut piv = col;
        let mut best = a[(col, col)].abs();
        for row in col + 1..N {
            let v = a[(row, col)].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best <= cutoff {
            return None;
        }
        if piv != col {
            a.swap_rows(col, piv);
            inv.swap_rows(col, piv);
        }
        let d = a[(col, col)];
        for k in 0..N {
            a[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for row in 0..N {
            if row == col {
                continue;
            }
            let f = a[(row, col)];
            if f == T::zero() {
                continue;
            }
            for k in 0..N {
                let ak = a[(col, k)];
                let ik = inv[(col, k)];
                a[(row, k)] -= f * ak;
                inv[(row, k)] -= f * ik;
            }
        }
    }
    Some(inv)
}

/// Max-absolute-entry norm.
pub fn max_abs<T: Real, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm<T: Real, const R: usize, const C: usize>(m: &SMatrix<T, R, C>) -> T {
    (0..R).fold(T::zero(), |acc, i| {
        let row = (0..C).fold(T::zero(), |s, j| s + m[(i, j)].abs());
        acc.max(row)
    })
}

/// Vector infinity norm.
pub fn vec_inf<T: Real, const N: usize>(v: &nalgebra::SVector<T, N>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Stacks four 2x2 blocks `[[b11, b12], [b21, b22]]` into a 4x4 matrix.
pub fn stack2x2<T: Real>(blocks: &[[Mat2<T>; 2]; 2]) -> Mat4<T> {
    Mat4::from_fn(|i, j| blocks[i / 2][j / 2][(i % 2, j % 2)])
}

/// Stacks four 4x4 blocks into an 8x8 matrix.
pub fn stack4x4<T: Real>(blocks: &[[Mat4<T>; 2]; 2]) -> Mat8<T> {
    Mat8::from_fn(|i, j| blocks[i / 4][j / 4][(i % 4, j % 4)])
}

/// Extracts block `(bi, bj)` of size 4 from an 8x8 matrix.
pub fn block4<T: Real>(m: &Mat8<T>, bi: usize, bj: usize) -> Mat4<T> {
    Mat4::from_fn(|i, j| m[(4 * bi + i, 4 * bj + j)])
}

/// Largest eigenvalue of a real symmetric matrix (cyclic Jacobi).
pub fn symmetric_max_eigenvalue<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> T {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(T::neg_infinity(), |acc, v| acc.max(v))
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> Vec<T> {
    let mut a = (m + m.transpose()) * T::half();
    let scale = max_abs(&a);
    if scale == T::zero() {
        return vec![T::zero(); N];
    }
    for _sweep in 0..64 {
        let mut off = T::zero();
        for p in 0..N {
            for q in p + 1..N {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= T::epsilon() * scale {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::two() * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..N).map(|i| a[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_random_like_matrix() {
        let m = Mat4::<f64>::from_fn(|i, j| if i == j { 3.0 } else { 0.1 * (i as f64 - j as f64) + 0.05 });
        let inv = invert(&m).unwrap();
        let prod = m * inv;
        assert!(max_abs(&(prod - Mat4::identity())) < 1e-14);
    }

    #[test]
    fn singular_matrix_detected() {
        let mut m = Mat4::<f64>::identity();
        m[(3, 3)] = 0.0;
        assert!(invert(&m).is_none());
        assert!(invert(&Mat4::<f64>::zeros()).is_none());
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let m = Mat2::<f64>::new(0.0, 1.0, 1.0, 0.0);
        let inv = invert(&m).unwrap();
        assert_eq!(inv, m);
    }

    #[test]
    fn jacobi_eigenvalues_match_characteristic_polynomial() {
        // [[g/2, -g/4], [-g/4, 0]] has eigenvalues g/4 +- |g|/(2 sqrt 2).
        let g = 0.3_f64;
        let m = Mat2::new(g / 2.0, -g / 4.0, -g / 4.0, 0.0);
        let mut ev = symmetric_eigenvalues(&m);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = g / (2.0 * 2f64.sqrt());
        assert!((ev[0] - (g / 4.0 - r)).abs() < 1e-15);
        assert!((ev[1] - (g / 4.0 + r)).abs() < 1e-15);
    }

    #[test]
    fn stacking_round_trip() {
        let b = [[Mat2::<f64>::new(1.0, 2.0, 3.0, 4.0), Mat2::zeros()], [Mat2::identity(), Mat2::from_element(7.0)]];
        let m = stack2x2(&b);
        assert_eq!(m[(0, 1)], 2.0);
        assert_eq!(m[(2, 0)], 1.0);
        assert_eq!(m[(2, 1)], 0.0);
        assert_eq!(m[(2, 2)], 7.0);
        assert_eq!(m[(3, 3)], 7.0);
        assert_eq!(m[(1, 3)], 0.0);
    }
}
