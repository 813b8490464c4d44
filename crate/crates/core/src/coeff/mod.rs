//! Coefficient fields `a, b, c` of `a u_xx + b u_xy + c u_yy = 0` on the
//! punctured unit disk, with their declared modulus of continuity.

mod families;
mod profile;
mod validate;

use std::fmt;
use std::sync::Arc;

pub use families::{
    builtin, builtin_families, make_harmonic_family, make_radial_family, make_trig_poly_family, trig_poly_terms,
    BuiltinFamily, FamilyDescriptor, Target, TrigPolyTerm, PROFILE_BOUND,
};
pub use profile::{AnalyticTail, Profile};
pub use validate::{
    classify_modulus, dyadic_radii, validate_field, ModulusClassification, RadiusCheck, ValidationReport,
    NORMALIZATION_ABS_TOL,
};

use crate::scalar::Real;

pub type RadialFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type PointFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Nonnegative, nondecreasing `omega: (0, 1] -> R` with `omega(0+) = 0`.
#[derive(Clone)]
pub struct ModulusOfContinuity<T> {
    eval: RadialFn<T>,
    pub label: String,
    pub analytic_tail: Option<AnalyticTail>,
}

impl<T: Real> ModulusOfContinuity<T> {
    pub fn new(label: impl Into<String>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), label: label.into(), analytic_tail: None }
    }

    pub fn from_tail(tail: AnalyticTail) -> Self {
        let label = match tail {
            AnalyticTail::Zero => "zero".to_string(),
            AnalyticTail::Power { scale, alpha } => format!("{scale}*r^{alpha}"),
            AnalyticTail::LogInverse { gamma, shift } => format!("{gamma}/(1+{shift}+log(1/r))"),
        };
        Self { eval: Arc::new(move |r: T| tail.eval_t(-r.ln())), label, analytic_tail: Some(tail) }
    }

    pub fn zero() -> Self {
        Self::from_tail(AnalyticTail::Zero)
    }

    #[inline]
    pub fn eval(&self, r: T) -> T {
        (self.eval)(r)
    }

    /// `epsilon(t) = omega(e^{-t})`.
    #[inline]
    pub fn eval_t(&self, t: T) -> T {
        match self.analytic_tail {
            Some(tail) => tail.eval_t(t),
            None => (self.eval)((-t).exp()),
        }
    }
}

impl<T> fmt::Debug for ModulusOfContinuity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulusOfContinuity")
            .field("label", &self.label)
            .field("analytic_tail", &self.analytic_tail)
            .finish()
    }
}

/// Coefficients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> Coefficients<T> {
    pub const fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    pub fn identity() -> Self {
        Self { a: T::one(), b: T::zero(), c: T::one() }
    }

    /// `4ac - b^2`.
    pub fn discriminant(&self) -> T {
        T::lit(4.0) * self.a * self.c - self.b * self.b
    }

    /// `|a - 1| + |b| + |c - 1|`.
    pub fn deviation(&self) -> T {
        (self.a - T::one()).abs() + self.b.abs() + (self.c - T::one()).abs()
    }
}

/// Immutable coefficient field. Points outside the unit disk are evaluated at
/// their radial projection onto the unit circle. Stored as the perturbation
/// `(a - 1, b, c - 1)` so that small deviations keep full relative precision.
#[derive(Clone)]
pub struct CoefficientField<T> {
    da: PointFn<T>,
    b: PointFn<T>,
    dc: PointFn<T>,
    pub modulus: ModulusOfContinuity<T>,
    pub ellipticity_lower: T,
    pub label: String,
    /// `Some` for fields built from a descriptor.
    pub descriptor: Option<FamilyDescriptor>,
}

impl<T: Real> CoefficientField<T> {
    pub fn new(
        label: impl Into<String>,
        a: impl Fn(T, T) -> T + Send + Sync + 'static,
        b: impl Fn(T, T) -> T + Send + Sync + 'static,
        c: impl Fn(T, T) -> T + Send + Sync + 'static,
        modulus: ModulusOfContinuity<T>,
        ellipticity_lower: T,
    ) -> Self {
        Self::from_deviation(label, move |x, y| a(x, y) - T::one(), b, move |x, y| c(x, y) - T::one(), modulus, ellipticity_lower)
    }

    /// Field given by `a = 1 + da`, `b`, `c = 1 + dc`.
    pub fn from_deviation(
        label: impl Into<String>,
        da: impl Fn(T, T) -> T + Send + Sync + 'static,
        b: impl Fn(T, T) -> T + Send + Sync + 'static,
        dc: impl Fn(T, T) -> T + Send + Sync + 'static,
        modulus: ModulusOfContinuity<T>,
        ellipticity_lower: T,
    ) -> Self {
        Self {
            da: Arc::new(da),
            b: Arc::new(b),
            dc: Arc::new(dc),
            modulus,
            ellipticity_lower,
            label: label.into(),
            descriptor: None,
        }
    }

    /// `a = c = 1, b = 0`.
    pub fn laplacian() -> Self {
        let mut f = Self::from_deviation(
            "laplacian",
            |_, _| T::zero(),
            |_, _| T::zero(),
            |_, _| T::zero(),
            ModulusOfContinuity::zero(),
            T::lit(4.0),
        );
        f.descriptor = Some(FamilyDescriptor::Laplacian {});
        f
    }

    pub fn with_descriptor(mut self, d: FamilyDescriptor) -> Self {
        self.descriptor = Some(d);
        self
    }

    #[inline]
    fn project(x: T, y: T) -> (T, T) {
        let rr = x * x + y * y;
        if rr > T::one() {
            let r = rr.sqrt();
            (x / r, y / r)
        } else {
            (x, y)
        }
    }

    /// Coefficients at `(x, y)`; the origin returns the normalized values.
    pub fn at(&self, x: T, y: T) -> Coefficients<T> {
        let d = self.deviation_at(x, y);
        Coefficients { a: T::one() + d.a, b: d.b, c: T::one() + d.c }
    }

    pub fn at_polar(&self, r: T, phi: T) -> Coefficients<T> {
        self.at(r * phi.cos(), r * phi.sin())
    }

    /// `(a - 1, b, c - 1)` at `(x, y)`, zero at the origin.
    pub fn deviation_at(&self, x: T, y: T) -> Coefficients<T> {
        if x == T::zero() && y == T::zero() {
            return Coefficients { a: T::zero(), b: T::zero(), c: T::zero() };
        }
        let (x, y) = Self::project(x, y);
        Coefficients { a: (self.da)(x, y), b: (self.b)(x, y), c: (self.dc)(x, y) }
    }

    pub fn deviation_at_polar(&self, r: T, phi: T) -> Coefficients<T> {
        self.deviation_at(r * phi.cos(), r * phi.sin())
    }

    /// Field rotated by a quarter turn, for which `u(R^{-1} x)` solves the
    /// rotated equation when `u` solves the original one. With
    /// `R^{-1}(x, y) = (y, -x)`: `a' = c o R^{-1}`, `b' = -b o R^{-1}`,
    /// `c' = a o R^{-1}`.
    pub fn rotated_quarter(&self) -> Self {
        let (da, b, dc) = (self.da.clone(), self.b.clone(), self.dc.clone());
        Self {
            da: Arc::new(move |x, y| dc(y, -x)),
            b: Arc::new(move |x, y| -b(y, -x)),
            dc: Arc::new(move |x, y| da(y, -x)),
            modulus: self.modulus.clone(),
            ellipticity_lower: self.ellipticity_lower,
            label: format!("{}+rot90", self.label),
            descriptor: None,
        }
    }
}

impl<T> fmt::Debug for CoefficientField<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("label", &self.label)
            .field("modulus", &self.modulus)
            .field("ellipticity_lower", &self.ellipticity_lower)
            .finish()
    }
}
