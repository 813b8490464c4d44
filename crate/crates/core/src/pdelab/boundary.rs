use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Named Dirichlet data. All entries except `ExpCos` are polynomials; all are
/// harmonic, so with `a = c = 1, b = 0` the boundary function is also the
/// exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryData {
    /// `x^2 - y^2`
    Quadratic,
    /// `xy`
    Xy,
    /// `x^3 - 3 x y^2`
    HarmonicCubic,
    /// `x^4 - 6 x^2 y^2 + y^4`
    HarmonicQuartic,
    /// `e^x cos y`
    ExpCos,
    /// `x^2 - y^2 + xy + x/2 - y/4`
    FirstHarmonic,
    /// `(x^3 - 3 x y^2) + (3 x^2 y - y^3) / 2`
    SecondHarmonic,
}

impl BoundaryData {
    pub const ALL: [BoundaryData; 7] = [
        BoundaryData::Quadratic,
        BoundaryData::Xy,
        BoundaryData::HarmonicCubic,
        BoundaryData::HarmonicQuartic,
        BoundaryData::ExpCos,
        BoundaryData::FirstHarmonic,
        BoundaryData::SecondHarmonic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundaryData::Quadratic => "quadratic",
            BoundaryData::Xy => "xy",
            BoundaryData::HarmonicCubic => "harmonic_cubic",
            BoundaryData::HarmonicQuartic => "harmonic_quartic",
            BoundaryData::ExpCos => "exp_cos",
            BoundaryData::FirstHarmonic => "first_harmonic",
            BoundaryData::SecondHarmonic => "second_harmonic",
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            BoundaryData::Quadratic => x * x - y * y,
            BoundaryData::Xy => x * y,
            BoundaryData::HarmonicCubic => x * x * x - 3.0 * x * y * y,
            BoundaryData::HarmonicQuartic => {
                let (x2, y2) = (x * x, y * y);
                x2 * x2 - 6.0 * x2 * y2 + y2 * y2
            }
            BoundaryData::ExpCos => x.exp() * y.cos(),
            BoundaryData::FirstHarmonic => x * x - y * y + x * y + 0.5 * x - 0.25 * y,
            BoundaryData::SecondHarmonic => x * x * x - 3.0 * x * y * y + 0.5 * (3.0 * x * x * y - y * y * y),
        }
    }

    /// Exact gradient of the harmonic extension.
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        match self {
            BoundaryData::Quadratic => [2.0 * x, -2.0 * y],
            BoundaryData::Xy => [y, x],
            BoundaryData::HarmonicCubic => [3.0 * (x * x - y * y), -6.0 * x * y],
            BoundaryData::HarmonicQuartic => [4.0 * x * x * x - 12.0 * x * y * y, 4.0 * y * y * y - 12.0 * x * x * y],
            BoundaryData::ExpCos => [x.exp() * y.cos(), -x.exp() * y.sin()],
            BoundaryData::FirstHarmonic => [2.0 * x + y + 0.5, -2.0 * y + x - 0.25],
            BoundaryData::SecondHarmonic => [
                3.0 * (x * x - y * y) + 3.0 * x * y,
                -6.0 * x * y + 1.5 * (x * x - y * y),
            ],
        }
    }

    pub fn spec(&self) -> BoundarySpec {
        let d = *self;
        BoundarySpec::new(self.name(), move |x, y| d.eval(x, y))
    }
}

/// Dirichlet data as an evaluator with a label.
#[derive(Clone)]
pub struct BoundarySpec {
    pub label: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl BoundarySpec {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    /// `g o R^{-1}` with `R^{-1}(x, y) = (y, -x)`.
    pub fn rotated_quarter(&self) -> Self {
        let f = self.f.clone();
        Self { label: format!("{}+rot90", self.label), f: Arc::new(move |x, y| f(y, -x)) }
    }
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundarySpec").field("label", &self.label).finish()
    }
}
