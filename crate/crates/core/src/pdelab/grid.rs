use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};
use rayon::prelude::*;
use serde::Serialize;

use super::boundary::BoundarySpec;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};

/// Uniform node grid on `[-L, L]^2` with `n` intervals per side. Node
/// `(i, j)` sits at `(-L + i h, -L + j h)` and has flat index `j (n + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub l: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    /// Fails unless `h` divides `2L` and the origin is a node.
    pub fn new(l: f64, h: f64) -> Result<Self> {
        if !(l > 0.0 && l <= std::f64::consts::FRAC_1_SQRT_2 && h > 0.0 && h < l) {
            return Err(Error::InvalidArgument(format!("need 0 < h < L <= 1/sqrt 2, got L = {l}, h = {h}")));
        }
        let q = 2.0 * l / h;
        let n = q.round() as usize;
        if (q - n as f64).abs() > 1e-9 * q || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("h = {h} must divide L = {l} evenly")));
        }
        Ok(Self { l, h, n })
    }

    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.side() + i
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.l + k as f64 * self.h
    }

    pub fn center(&self) -> usize {
        self.n / 2
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Bilinear interpolation of nodal values at `(x, y)` inside the square.
    pub fn interpolate(&self, values: &[f64], x: f64, y: f64) -> f64 {
        let fx = ((x + self.l) / self.h).clamp(0.0, self.n as f64);
        let fy = ((y + self.l) / self.h).clamp(0.0, self.n as f64);
        let i = (fx.floor() as usize).min(self.n - 1);
        let j = (fy.floor() as usize).min(self.n - 1);
        let (sx, sy) = (fx - i as f64, fy - j as f64);
        let v = |di: usize, dj: usize| values[self.index(i + di, j + dj)];
        (1.0 - sy) * ((1.0 - sx) * v(0, 0) + sx * v(1, 0)) + sy * ((1.0 - sx) * v(0, 1) + sx * v(1, 1))
    }
}

/// Stencil weights `[C, E, W, N, S, NE, NW, SE, SW]` of `h^2 (a u_xx + b u_xy + c u_yy)`.
fn stencil(a: f64, b: f64, c: f64) -> [f64; 9] {
    let q = 0.25 * b;
    [-2.0 * (a + c), a, a, c, c, q, -q, -q, q]
}

const OFFSETS: [(isize, isize); 9] = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];

#[derive(Debug, Clone, Serialize)]
pub struct GridSolution {
    pub grid: Grid,
    /// Nodal values, boundary included, in grid order.
    #[serde(skip)]
    pub u: Vec<f64>,
    pub boundary_label: String,
    pub field_label: String,
    /// Max interior residual of the `h^2`-scaled equations relative to the
    /// max-norm of the right-hand side.
    pub residual_norm: f64,
    /// Residual after the direct solve and after each refinement sweep.
    pub residual_history: Vec<f64>,
    /// Interior extrema lie within the boundary extrema (up to `1e-12`).
    pub max_principle_ok: bool,
}

impl GridSolution {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[self.grid.index(i, j)]
    }
}

/// Solves `a u_xx + b u_xy + c u_yy = 0` with Dirichlet data on the square
/// grid by sparse LU plus iterative refinement.
pub fn solve_dirichlet(field: &CoefficientField<f64>, grid: Grid, boundary: &BoundarySpec, tol: f64) -> Result<GridSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {tol}")));
    }
    let n = grid.n;
    let m = n - 1;
    let unknown = |i: usize, j: usize| (j - 1) * m + (i - 1);
    let weights: Vec<[f64; 9]> = (0..m * m)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % m + 1, k / m + 1);
            let co = field.at(grid.coord(i), grid.coord(j));
            if !(co.discriminant() > 0.0) || !(co.a > 0.0) {
                return Err(Error::Ellipticity { i, j, discriminant: co.discriminant() });
            }
            Ok(stencil(co.a, co.b, co.c))
        })
        .collect::<Result<_>>()?;

    let mut u = vec![0.0; grid.len()];
    for j in 0..=n {
        for i in 0..=n {
            if grid.is_boundary(i, j) {
                u[grid.index(i, j)] = boundary.eval(grid.coord(i), grid.coord(j));
            }
        }
    }
    let mut rhs = vec![0.0; m * m];
    let mut triplets = Vec::with_capacity(9 * m * m);
    for j in 1..n {
        for i in 1..n {
            let row = unknown(i, j);
            for (w, (di, dj)) in weights[row].iter().zip(OFFSETS) {
                if *w == 0.0 {
                    continue;
                }
                let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                if grid.is_boundary(ii, jj) {
                    rhs[row] -= w * u[grid.index(ii, jj)];
                } else {
                    triplets.push(Triplet::new(row, unknown(ii, jj), *w));
                }
            }
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(m * m, m * m, &triplets)
        .map_err(|e| Error::InvalidArgument(format!("sparse assembly failed: {e:?}")))?;
    faer::set_global_parallelism(Par::Seq);
    let lu = a.sp_lu().map_err(|_| Error::SolverDiverged { history: vec![f64::INFINITY] })?;

    let b_norm = rhs.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let residual = |x: &[f64]| -> Vec<f64> {
        (0..m * m)
            .map(|row| {
                let (i, j) = (row % m + 1, row / m + 1);
                let mut s = rhs[row];
                for (w, (di, dj)) in weights[row].iter().zip(OFFSETS) {
                    let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    if !grid.is_boundary(ii, jj) {
                        s -= w * x[unknown(ii, jj)];
                    }
                }
                s
            })
            .collect()
    };
    let solve = |v: &[f64]| -> Vec<f64> {
        let mut col = Mat::<f64>::from_fn(v.len(), 1, |i, _| v[i]);
        lu.solve_in_place(col.as_mut());
        (0..v.len()).map(|i| col[(i, 0)]).collect()
    };
    let mut x = solve(&rhs);
    let mut history = Vec::new();
    for sweep in 0..=4 {
        let r = residual(&x);
        let rel = r.iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale;
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::SolverDiverged { history });
        }
        if rel <= tol.min(1e-13) || sweep == 4 {
            break;
        }
        let dx = solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }
    let residual_norm = *history.last().unwrap();
    if residual_norm > tol {
        return Err(Error::SolverDiverged { history });
    }
    for j in 1..n {
        for i in 1..n {
            u[grid.index(i, j)] = x[unknown(i, j)];
        }
    }
    let (mut bmin, mut bmax, mut imin, mut imax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..=n {
        for i in 0..=n {
            let v = u[grid.index(i, j)];
            if grid.is_boundary(i, j) {
                bmin = bmin.min(v);
                bmax = bmax.max(v);
            } else {
                imin = imin.min(v);
                imax = imax.max(v);
            }
        }
    }
    let slack = 1e-12 * bmax.abs().max(bmin.abs()).max(1.0);
    Ok(GridSolution {
        grid,
        u,
        boundary_label: boundary.label.clone(),
        field_label: field.label.clone(),
        residual_norm,
        residual_history: history,
        max_principle_ok: imax <= bmax + slack && imin >= bmin - slack,
    })
}

/// Nodal gradient `U = (u_x, u_y)`.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub grid: Grid,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl GradientField {
    /// Bilinear interpolant of `U` at `(x, y)`.
    pub fn at(&self, x: f64, y: f64) -> [f64; 2] {
        [self.grid.interpolate(&self.ux, x, y), self.grid.interpolate(&self.uy, x, y)]
    }

    /// Sampled from an exact gradient, for oracle tests of the decomposition.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut ux = vec![0.0; grid.len()];
        let mut uy = vec![0.0; grid.len()];
        for j in 0..grid.side() {
            for i in 0..grid.side() {
                let g = f(grid.coord(i), grid.coord(j));
                ux[grid.index(i, j)] = g[0];
                uy[grid.index(i, j)] = g[1];
            }
        }
        Self { grid, ux, uy }
    }
}

/// Second-order difference along one grid line: centered inside, one-sided
/// `(-3 f0 + 4 f1 - f2) / 2h` at the ends.
fn diff_line(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == n {
        (3.0 * f(n) - 4.0 * f(n - 1) + f(n - 2)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

pub fn gradient_field(sol: &GridSolution) -> GradientField {
    let g = sol.grid;
    let (n, h) = (g.n, g.h);
    let u = &sol.u;
    let mut ux = vec![0.0; g.len()];
    let mut uy = vec![0.0; g.len()];
    for j in 0..=n {
        for i in 0..=n {
            ux[g.index(i, j)] = diff_line(|k| u[g.index(k, j)], i, n, h);
            uy[g.index(i, j)] = diff_line(|k| u[g.index(i, k)], j, n, h);
        }
    }
    GradientField { grid: g, ux, uy }
}

/// Second differences of `u` at the origin with step `k h`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HessianRow {
    pub multiple: usize,
    pub step: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
    /// Max-abs change from the previous row; `None` on the first row.
    pub cauchy: Option<f64>,
}

pub fn hessian_quotients(sol: &GridSolution, multiples: &[usize]) -> Result<Vec<HessianRow>> {
    let g = sol.grid;
    let c = g.center();
    let mut rows: Vec<HessianRow> = Vec::with_capacity(multiples.len());
    for &k in multiples {
        if k < 2 || k > c {
            return Err(Error::InvalidArgument(format!("hessian step multiple {k} outside [2, {c}]")));
        }
        let v = |di: isize, dj: isize| sol.value((c as isize + di * k as isize) as usize, (c as isize + dj * k as isize) as usize);
        let s = k as f64 * g.h;
        let s2 = s * s;
        let dxx = (v(1, 0) - 2.0 * v(0, 0) + v(-1, 0)) / s2;
        let dyy = (v(0, 1) - 2.0 * v(0, 0) + v(0, -1)) / s2;
        let dxy = (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4.0 * s2);
        let cauchy = rows.last().map(|p| (dxx - p.dxx).abs().max((dxy - p.dxy).abs()).max((dyy - p.dyy).abs()));
        rows.push(HessianRow { multiple: k, step: s, dxx, dxy, dyy, cauchy });
    }
    Ok(rows)
}
