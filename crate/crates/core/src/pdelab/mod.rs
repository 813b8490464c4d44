//! Finite-difference laboratory: Dirichlet solves of
//! `a u_xx + b u_xy + c u_yy = 0` on `[-L, L]^2`, gradient extraction, the
//! circle decomposition `U = U0 + V1 x + V2 y + W`, and regularity
//! indicators at the origin.

mod boundary;
mod decompose;
mod diagnostics;
mod export;
mod grid;

use serde::{Deserialize, Serialize};

pub use boundary::{BoundaryData, BoundarySpec};
pub use decompose::{decompose, decompose_circle, profile_radii, CircleDecomposition, DecompositionProfile, ProfileRow, LOG_STEP};
pub use diagnostics::{
    compare_with_dynsys, indicator_tables, regularity_diagnostics, CompareRow, CompareTable, DiagnosticSettings, Floors,
    IndicatorTables, IndicatorVerdict, RegularityDiagnostics, TREND_RADII,
};
pub use export::{write_profile_csv, write_solution_csv, PROFILE_COLUMNS};
pub use grid::{gradient_field, hessian_quotients, solve_dirichlet, GradientField, Grid, GridSolution, HessianRow};

use crate::coeff::CoefficientField;
use crate::dynsys::full_system;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeSettings {
    pub h: f64,
    pub l: f64,
    pub boundary: BoundaryData,
    pub p: f64,
    pub nodes_per_circle: usize,
    /// Relative residual required of the linear solve.
    pub tol: f64,
    pub hessian_multiples: Vec<usize>,
    /// Integrator tolerance of the cross-check propagation.
    pub rtol: f64,
    pub diagnostics: DiagnosticSettings,
}

impl Default for PdeSettings {
    fn default() -> Self {
        Self {
            h: 1.0 / 128.0,
            l: 0.6875,
            boundary: BoundaryData::FirstHarmonic,
            p: 4.0,
            nodes_per_circle: 256,
            tol: 1e-10,
            hessian_multiples: vec![2, 4, 8, 16],
            rtol: 1e-9,
            diagnostics: DiagnosticSettings::default(),
        }
    }
}

impl PdeSettings {
    /// Every violation, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (n, v) in [("pde.tol", self.tol), ("pde.rtol", self.rtol), ("pde.h", self.h), ("pde.l", self.l)] {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("tolerances must be positive: {n} = {v}"));
            }
        }
        if out.is_empty() {
            if let Err(e) = Grid::new(self.l, self.h) {
                out.push(e.to_string());
            }
        }
        if !(self.p > 2.0) {
            out.push(format!("pde.p must exceed 2, got {}", self.p));
        }
        if self.nodes_per_circle < 16 || !self.nodes_per_circle.is_multiple_of(4) {
            out.push(format!("pde.nodes_per_circle must be a multiple of 4 and >= 16, got {}", self.nodes_per_circle));
        }
        if !(self.diagnostics.growth_threshold >= 0.0) {
            out.push("pde.diagnostics.growth_threshold must be nonnegative".into());
        }
        if self.hessian_multiples.iter().any(|k| *k < 2) {
            out.push("pde.hessian_multiples must all be >= 2".into());
        }
        if !self.hessian_multiples.windows(2).all(|w| w[0] < w[1]) {
            out.push("pde.hessian_multiples must be strictly increasing".into());
        }
        out
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.l, self.h)
    }
}

/// Solution, decomposition and diagnostics of one field together with its
/// constant-coefficient control at the same mesh and data.
#[derive(Debug, Clone, Serialize)]
pub struct PdeRun {
    pub solution: GridSolution,
    pub control_solution: GridSolution,
    pub profile: DecompositionProfile,
    pub control_profile: DecompositionProfile,
    pub diagnostics: RegularityDiagnostics,
    pub hessian: Vec<HessianRow>,
    pub compare: Option<CompareTable>,
    pub control_compare: Option<CompareTable>,
}

pub fn run_pde_lab(field: &CoefficientField<f64>, settings: &PdeSettings, compare: bool) -> Result<PdeRun> {
    let v = settings.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let grid = settings.grid()?;
    let radii = profile_radii(&grid);
    if radii.len() < 2 * TREND_RADII {
        return Err(Error::InvalidArgument(format!("mesh h = {} leaves only {} profile radii", grid.h, radii.len())));
    }
    let bc = settings.boundary.spec();
    let control_field = CoefficientField::<f64>::laplacian();
    let run_one = |f: &CoefficientField<f64>| -> Result<(GridSolution, DecompositionProfile)> {
        let sol = solve_dirichlet(f, grid, &bc, settings.tol)?;
        let prof = decompose(&gradient_field(&sol), &radii, settings.p, settings.nodes_per_circle)?;
        Ok((sol, prof))
    };
    let (solution, profile) = run_one(field)?;
    let (control_solution, control_profile) = run_one(&control_field)?;
    let (compare, control_compare) = if compare {
        let c = compare_with_dynsys(&profile, &full_system(field), settings.rtol)?;
        let cc = compare_with_dynsys(&control_profile, &full_system(&control_field), settings.rtol)?;
        (Some(c), Some(cc))
    } else {
        (None, None)
    };
    let mut floors = Floors::from_control(&control_profile, &field.modulus);
    floors.compare = control_compare.as_ref().map(|c| c.max_deviation).unwrap_or(0.0);
    let diagnostics = regularity_diagnostics(&profile, &field.modulus, &floors, &settings.diagnostics)?;
    let hessian = hessian_quotients(&solution, &settings.hessian_multiples)?;
    Ok(PdeRun { solution, control_solution, profile, control_profile, diagnostics, hessian, compare, control_compare })
}
