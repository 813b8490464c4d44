//! Dynamical systems in the log-radius variable `t = ln(1/r)`.
//!
//! Every system is written `dx/dt + A(t) x = 0`; [`LinearSystem::matrix`]
//! returns `A(t)`.

mod basis;
mod integrator;
mod probe;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::SMatrix;
use serde::Serialize;

pub use basis::{d_inf, j_inverse, j_matrix, m_inf, verify_j_rational};
pub use integrator::{propagate, propagate_from, PropagateOptions, TransitionMatrix, LOCAL_TOL_FACTOR, RTOL_RANGE};
pub use probe::{
    asymptotic_constancy_probe, uniform_stability_probe, ConstancyPart, ConstancyRow, ConstancyVerdict, KappaRow,
    unit_basis, ProbeSettings, StabilityPart, StabilityReport, StabilityVerdict,
};

pub(crate) fn integrator_inf_norm<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> f64 {
    crate::linalg::inf_norm(m).as_f64()
}

use crate::coeff::{CoefficientField, Profile};
use crate::error::{Error, Result};
use crate::linalg::{block4, invert, max_abs, stack2x2, stack4x4, Mat2, Mat4, Mat8};
use crate::moments::{assemble_r, block_table, moment_vector, BlockAssembly, BlockTable, MomentVector};
use crate::scalar::Real;

/// Linear system `dx/dt + A(t) x = 0` on `R^N`.
pub trait LinearSystem<T: Real, const N: usize>: Send + Sync {
    fn matrix(&self, t: T) -> Result<SMatrix<T, N, N>>;

    /// Size of the perturbation, `epsilon(t) = omega(e^{-t})`.
    fn epsilon(&self, _t: T) -> T {
        T::zero()
    }

    fn label(&self) -> String;
}

/// `A(t) = A` for all `t`.
#[derive(Debug, Clone)]
pub struct ConstantSystem<T: Real, const N: usize>(pub SMatrix<T, N, N>);

impl<T: Real, const N: usize> LinearSystem<T, N> for ConstantSystem<T, N> {
    fn matrix(&self, _t: T) -> Result<SMatrix<T, N, N>> {
        Ok(self.0)
    }

    fn label(&self) -> String {
        "constant".into()
    }
}

/// Memoized `t -> matrix`; keys are the exact bit patterns of `t`.
struct Cache<T: Real, const N: usize> {
    map: Mutex<HashMap<u64, SMatrix<T, N, N>>>,
}

const CACHE_CAP: usize = 1 << 16;

impl<T: Real, const N: usize> Cache<T, N> {
    fn new() -> Self {
        Self { map: Mutex::new(HashMap::new()) }
    }

    fn get_or(&self, t: T, f: impl FnOnce() -> Result<SMatrix<T, N, N>>) -> Result<SMatrix<T, N, N>> {
        let key = t.as_f64().to_bits();
        if let Some(m) = self.map.lock().expect("cache poisoned").get(&key) {
            return Ok(*m);
        }
        let m = f()?;
        let mut map = self.map.lock().expect("cache poisoned");
        if map.len() >= CACHE_CAP {
            map.clear();
        }
        map.insert(key, m);
        Ok(m)
    }
}

/// Source of the six second moments in the log-radius variable.
pub trait MomentSource<T: Real>: Send + Sync {
    fn moments_t(&self, t: T) -> Result<MomentVector<T>>;
    fn epsilon(&self, t: T) -> T;
    fn label(&self) -> String;
}

impl<T: Real> MomentSource<T> for CoefficientField<T> {
    fn moments_t(&self, t: T) -> Result<MomentVector<T>> {
        moment_vector(self, (-t).exp())
    }

    fn epsilon(&self, t: T) -> T {
        self.modulus.eval_t(t)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

type MomentFn<T> = Arc<dyn Fn(T) -> [T; 6] + Send + Sync>;
type EpsFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Moments given in closed form as functions of `t`.
#[derive(Clone)]
pub struct AnalyticMoments<T> {
    label: String,
    moments: MomentFn<T>,
    eps: EpsFn<T>,
}

impl<T: Real> AnalyticMoments<T> {
    pub fn new(
        label: impl Into<String>,
        moments: impl Fn(T) -> [T; 6] + Send + Sync + 'static,
        eps: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), moments: Arc::new(moments), eps: Arc::new(eps) }
    }

    /// Moments of `a = 1 + g cos 2phi`: `a1 = -g/2`, all others zero.
    pub fn a_cos2(profile: Profile) -> Self {
        let env = profile.envelope();
        Self::new(
            format!("a_cos2[{profile:?}]"),
            move |t: T| {
                let z = T::zero();
                [-profile.eval_t(t) * T::half(), z, z, z, z, z]
            },
            move |t: T| env.eval_t(t),
        )
    }
}

impl<T: Real> MomentSource<T> for AnalyticMoments<T> {
    fn moments_t(&self, t: T) -> Result<MomentVector<T>> {
        let m = (self.moments)(t);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluator { radius: (-t.as_f64()).exp(), reason: "non-finite analytic moment".into() });
        }
        Ok(MomentVector::from_array((-t).exp(), m))
    }

    fn epsilon(&self, t: T) -> T {
        (self.eps)(t)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `dphi/dt + R~(t) phi = 0` with `R~(t) = R(e^{-t})`.
pub struct ReducedSystem<T: Real> {
    source: Arc<dyn MomentSource<T>>,
    cache: Cache<T, 4>,
}

impl<T: Real> ReducedSystem<T> {
    pub fn new(source: Arc<dyn MomentSource<T>>) -> Self {
        Self { source, cache: Cache::new() }
    }

    pub fn moments_t(&self, t: T) -> Result<MomentVector<T>> {
        self.source.moments_t(t)
    }
}

pub fn reduced_system<T: Real>(field: &CoefficientField<T>) -> ReducedSystem<T> {
    ReducedSystem::new(Arc::new(field.clone()))
}

impl<T: Real> LinearSystem<T, 4> for ReducedSystem<T> {
    fn matrix(&self, t: T) -> Result<Mat4<T>> {
        self.cache.get_or(t, || Ok(assemble_r(&self.source.moments_t(t)?).entries))
    }

    fn epsilon(&self, t: T) -> T {
        self.source.epsilon(t)
    }

    fn label(&self) -> String {
        format!("reduced[{}]", self.source.label())
    }
}

/// Effective 4x4 matrices after eliminating `U0'`, e.g.
/// `A_eff = A - [B_i calA^{-1} B_j]`.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveBlocks<T: Real> {
    pub raw: BlockAssembly<T>,
    pub a: Mat4<T>,
    pub b: Mat4<T>,
    pub bt: Mat4<T>,
    pub c: Mat4<T>,
}

fn correction<T: Real>(left: &[Mat2<T>; 2], inv: &Mat2<T>, right: &[Mat2<T>; 2]) -> Mat4<T> {
    let blk = |i: usize, j: usize| left[i] * inv * right[j];
    stack2x2(&[[blk(0, 0), blk(0, 1)], [blk(1, 0), blk(1, 1)]])
}

pub fn effective_blocks<T: Real>(table: &BlockTable<T>) -> Result<EffectiveBlocks<T>> {
    let inv = invert(&table.cal_a).ok_or(Error::Singular { which: "calA", radius: table.r.as_f64() })?;
    let raw = table.assemble();
    Ok(EffectiveBlocks {
        raw,
        a: raw.a - correction(&table.cal_b, &inv, &table.cal_b),
        b: raw.b - correction(&table.cal_b, &inv, &table.gamma),
        bt: raw.bt - correction(&table.gamma_t, &inv, &table.cal_b),
        c: raw.c - correction(&table.gamma_t, &inv, &table.gamma),
    })
}

/// `[[-A^{-1} B, A^{-1}], [C - Bt A^{-1} B, Bt A^{-1} - 2I]]`.
fn system_matrix<T: Real>(a: &Mat4<T>, b: &Mat4<T>, bt: &Mat4<T>, c: &Mat4<T>, r: T) -> Result<Mat8<T>> {
    let ai = invert(a).ok_or(Error::Singular { which: "A_eff", radius: r.as_f64() })?;
    let aib = ai * b;
    let two_i = Mat4::identity() * T::two();
    Ok(stack4x4(&[[-aib, ai], [c - bt * aib, bt * ai - two_i]]))
}

/// Exact homogeneous 8-dimensional system for `(V, U)` with
/// `U = -A_eff V_t + B_eff V`.
#[derive(Clone)]
pub struct FullSystem<T: Real> {
    field: CoefficientField<T>,
    cache: Arc<Cache<T, 8>>,
}

pub fn full_system<T: Real>(field: &CoefficientField<T>) -> FullSystem<T> {
    FullSystem { field: field.clone(), cache: Arc::new(Cache::new()) }
}

/// Decomposition `M = M_inf + S1 + S2` at one time.
#[derive(Debug, Clone, Copy)]
pub struct SplitMatrices<T: Real> {
    pub m: Mat8<T>,
    pub s1: Mat8<T>,
    pub s2: Mat8<T>,
}

impl<T: Real> FullSystem<T> {
    pub fn field(&self) -> &CoefficientField<T> {
        &self.field
    }

    pub fn blocks_t(&self, t: T) -> Result<BlockTable<T>> {
        block_table(&self.field, (-t).exp())
    }

    /// `S1` uses the raw block assemblies, `S2 = M - M_inf - S1`.
    pub fn split(&self, t: T) -> Result<SplitMatrices<T>> {
        let table = self.blocks_t(t)?;
        let eff = effective_blocks(&table)?;
        let m = system_matrix(&eff.a, &eff.b, &eff.bt, &eff.c, table.r)?;
        let raw = system_matrix(&eff.raw.a, &eff.raw.b, &eff.raw.bt, &eff.raw.c, table.r)?;
        let s1 = raw - m_inf::<T>();
        Ok(SplitMatrices { m, s1, s2: m - m_inf::<T>() - s1 })
    }

    /// `J^{-1} M J - diag(0, -2I)`.
    pub fn bold_r(&self, t: T) -> Result<Mat8<T>> {
        Ok(j_inverse::<T>() * self.matrix(t)? * j_matrix::<T>() - d_inf::<T>())
    }

    /// Upper-left 4x4 block of [`FullSystem::bold_r`].
    pub fn r1(&self, t: T) -> Result<Mat4<T>> {
        Ok(block4(&self.bold_r(t)?, 0, 0))
    }

    pub fn r1_block(&self) -> R1Block<T> {
        R1Block(self.clone())
    }
}

impl<T: Real> LinearSystem<T, 8> for FullSystem<T> {
    fn matrix(&self, t: T) -> Result<Mat8<T>> {
        self.cache.get_or(t, || {
            let table = self.blocks_t(t)?;
            let eff = effective_blocks(&table)?;
            system_matrix(&eff.a, &eff.b, &eff.bt, &eff.c, table.r)
        })
    }

    fn epsilon(&self, t: T) -> T {
        self.field.modulus.eval_t(t)
    }

    fn label(&self) -> String {
        format!("full[{}]", self.field.label)
    }
}

/// The `phi`-block `R1(t)` of the conjugated full system, as a 4x4 system.
#[derive(Clone)]
pub struct R1Block<T: Real>(pub FullSystem<T>);

impl<T: Real> LinearSystem<T, 4> for R1Block<T> {
    fn matrix(&self, t: T) -> Result<Mat4<T>> {
        self.0.r1(t)
    }

    fn epsilon(&self, t: T) -> T {
        self.0.epsilon(t)
    }

    fn label(&self) -> String {
        format!("r1[{}]", self.0.field.label)
    }
}

/// Rows `(t, eps, |R1 - R~|, ratio)` of the reduction check.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionRow {
    pub t: f64,
    pub eps: f64,
    pub diff: f64,
    /// `diff / eps^2`; `None` when `eps^2` is below [`REDUCTION_EPS2_FLOOR`].
    pub ratio: Option<f64>,
}

/// `eps^2` below this is at the rounding level of the block quadrature.
pub const REDUCTION_EPS2_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTable {
    pub label: String,
    pub rows: Vec<ReductionRow>,
    /// Largest measured `|R1 - R~| / eps^2`.
    pub bound: f64,
    pub bounded: bool,
}

/// `|R1(t) - R~(t)|` against `eps(t)^2` over `t_grid`. Bounded iff the
/// largest ratio on the second half of the grid is at most twice the largest
/// on the first half.
pub fn reduction_check<T: Real>(full: &FullSystem<T>, reduced: &ReducedSystem<T>, t_grid: &[T]) -> Result<ReductionTable> {
    let rows = t_grid
        .iter()
        .map(|&t| {
            let diff = max_abs(&(full.r1(t)? - reduced.matrix(t)?)).as_f64();
            let eps = full.epsilon(t).as_f64();
            let e2 = eps * eps;
            Ok(ReductionRow { t: t.as_f64(), eps, diff, ratio: (e2 > REDUCTION_EPS2_FLOOR).then(|| diff / e2) })
        })
        .collect::<Result<Vec<_>>>()?;
    let half = rows.len() / 2;
    let max_of = |rs: &[ReductionRow]| rs.iter().filter_map(|r| r.ratio).fold(0.0f64, f64::max);
    let first = max_of(&rows[..half]);
    let second = max_of(&rows[half..]);
    Ok(ReductionTable {
        label: full.label(),
        bound: first.max(second),
        bounded: second <= 2.0 * first || second == 0.0,
        rows,
    })
}

#[cfg(test)]
mod tests;
