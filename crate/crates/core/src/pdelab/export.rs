use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::decompose::DecompositionProfile;
use super::grid::GridSolution;
use crate::error::Result;

pub const PROFILE_COLUMNS: [&str; 15] = [
    "r", "U0_1", "U0_2", "V1_1", "V1_2", "V2_1", "V2_2", "rVp_1", "rVp_2", "rVp_3", "rVp_4", "Mp_W", "M1p_W", "Mp_gradW",
    "moment_residual",
];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Nodal values as `i,j,x,y,u` after a `#` header line giving `L`, `h` and
/// the ordering.
pub fn write_solution_csv(sol: &GridSolution, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let g = sol.grid;
    writeln!(f, "# L={},h={},n={},ordering=row-major-y-then-x", num(g.l), num(g.h), g.n)?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["i", "j", "x", "y", "u"])?;
    for j in 0..g.side() {
        for i in 0..g.side() {
            w.write_record([i.to_string(), j.to_string(), num(g.coord(i)), num(g.coord(j)), num(sol.value(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile_csv(prof: &DecompositionProfile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PROFILE_COLUMNS)?;
    for r in &prof.rows {
        let mut rec = vec![num(r.r), num(r.u0[0]), num(r.u0[1])];
        rec.extend(r.v.iter().map(|v| num(*v)));
        rec.extend(r.r_vprime.iter().map(|v| num(*v)));
        rec.extend([num(r.mp_w), num(r.m1p_w), num(r.mp_grad_w), num(r.moment_residual)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
