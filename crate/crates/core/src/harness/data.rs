//! Synthetic measurements: forward data on a finer nested grid and
//! calibrated white noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::{Backend, EllipticSolver};
use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, Grid};

use super::shape::Region;

/// Ratio of fine to coarse spacing, if the fine grid nests the coarse one.
pub fn nesting_ratio(fine: &Grid, coarse: &Grid) -> Result<usize> {
    let (nf, nc) = (fine.n() - 1, coarse.n() - 1);
    if nf <= nc || nf % nc != 0 {
        return Err(Error::invalid(format!(
            "forward grid with {} nodes per side does not nest the inversion grid with {}",
            fine.n(),
            coarse.n()
        )));
    }
    Ok(nf / nc)
}

/// Samples a fine-grid trace at the boundary nodes shared with `coarse`.
pub fn restrict_trace(fine: &BoundaryTrace, coarse: Grid) -> Result<BoundaryTrace> {
    let fg = *fine.grid();
    let m = nesting_ratio(&fg, &coarse)?;
    let values = coarse
        .boundary_nodes()
        .map(|(i, j)| fine.values()[fg.boundary_index(i * m, j * m).expect("boundary maps to boundary")])
        .collect();
    BoundaryTrace::from_values(coarse, values)
}

/// Solves the forward problem for the sharp indicator of `target` on
/// `forward_grid` and restricts the trace to `inversion_grid`.
pub fn generate_data(target: &Region, forward_grid: Grid, inversion_grid: Grid) -> Result<BoundaryTrace> {
    target.validate()?;
    nesting_ratio(&forward_grid, &inversion_grid)?;
    let solver = EllipticSolver::dirichlet_only(forward_grid, Backend::Cholesky)?;
    let fine = solver.forward(&target.rasterize(forward_grid))?;
    restrict_trace(&fine, inversion_grid)
}

/// Adds uniform white noise rescaled so that `‖y^δ − y‖_∞ = level · ‖y‖_∞`.
pub fn add_noise(trace: &BoundaryTrace, level: f64, seed: u64) -> Result<BoundaryTrace> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::invalid(format!("noise level must be non-negative, got {level}")));
    }
    let target = level * trace.linf_norm();
    if target == 0.0 {
        return Ok(trace.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..trace.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let peak = raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { target / peak } else { 0.0 };
    let values = trace.values().iter().zip(&raw).map(|(y, u)| y + scale * u).collect();
    BoundaryTrace::from_values(*trace.grid(), values)
}
