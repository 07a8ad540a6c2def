//! Total variation of material fields and the regularized curvature that
//! drives the perimeter penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::projection::{project_smooth, ProjectionParams};

/// Weights of the perimeter penalty.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvatureParams {
    /// BV weight in the functional.
    pub beta: f64,
    /// Product `beta * alpha`, the coefficient of the curvature term in the velocity equation.
    pub beta_alpha: f64,
    /// Debug switch: negate the curvature contribution.
    #[serde(default)]
    pub flip_sign: bool,
}

impl CurvatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta_alpha >= 0.0) {
            return Err(Error::invalid("beta and beta*alpha must be non-negative"));
        }
        Ok(())
    }
}

/// Discrete total variation summed over cells. Inside each cell the
/// gradient is the mean of the forward differences along its two edges in
/// each direction, so the estimate treats both diagonal orientations alike.
pub fn bv_seminorm(z: &ScalarField) -> f64 {
    let g = z.grid();
    let n = g.n();
    let mut sum = 0.0;
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let (z00, z10, z01, z11) = (z.at(i, j), z.at(i + 1, j), z.at(i, j + 1), z.at(i + 1, j + 1));
            let dx = 0.5 * ((z10 - z00) + (z11 - z01));
            let dy = 0.5 * ((z01 - z00) + (z11 - z10));
            sum += (dx * dx + dy * dy).sqrt();
        }
    }
    // Each term is |∇z| h², with the differences still unscaled by 1/h.
    sum * g.spacing()
}

/// Centered difference along one axis, one-sided on the boundary.
fn diff(f: &ScalarField, i: usize, j: usize, along_x: bool) -> f64 {
    let g = f.grid();
    let n = g.n();
    let h = g.spacing();
    let k = if along_x { i } else { j };
    let at = |p: usize| if along_x { f.at(p, j) } else { f.at(i, p) };
    if k == 0 {
        (at(1) - at(0)) / h
    } else if k == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(k + 1) - at(k - 1)) / (2.0 * h)
    }
}

/// `∇·(∇P_ε(φ) / √(|∇P_ε(φ)|² + h²))` with centered differences.
///
/// For `φ` positive inside a disk of radius `r` the normalized gradient
/// points inward and the result is close to `-1/r` inside the ramp band.
pub fn curvature_term(phi: &ScalarField, proj: &ProjectionParams) -> Result<ScalarField> {
    proj.validate()?;
    if proj.h <= 0.0 {
        return Err(Error::invalid("curvature term needs a positive gradient floor h"));
    }
    let z = project_smooth(phi, proj);
    let g = *z.grid();
    let n = g.n();
    let mut nx = ScalarField::zeros(g);
    let mut ny = ScalarField::zeros(g);
    let h2 = proj.h * proj.h;
    for j in 0..n {
        for i in 0..n {
            let (gx, gy) = (diff(&z, i, j, true), diff(&z, i, j, false));
            let norm = (gx * gx + gy * gy + h2).sqrt();
            nx.set(i, j, gx / norm);
            ny.set(i, j, gy / norm);
        }
    }
    let mut out = ScalarField::zeros(g);
    for j in 0..n {
        for i in 0..n {
            out.set(i, j, diff(&nx, i, j, true) + diff(&ny, i, j, false));
        }
    }
    Ok(out)
}

/// Right-hand side of the velocity equation:
/// `-P′_ε(φ) v + βα P′_ε(φ) curvature_term(φ)`.
pub fn velocity_rhs(phi: &ScalarField, v: &ScalarField, proj: &ProjectionParams, cur: &CurvatureParams) -> Result<ScalarField> {
    phi.ensure_same_grid(v)?;
    cur.validate()?;
    let mut rhs = phi.zip_map(v, |t, v| -proj.ramp_derivative(t) * v)?;
    if cur.beta_alpha > 0.0 {
        let kappa = curvature_term(phi, proj)?;
        let sign = if cur.flip_sign { -1.0 } else { 1.0 };
        for ((r, &t), &k) in rhs.values_mut().iter_mut().zip(phi.values()).zip(kappa.values()) {
            *r += sign * cur.beta_alpha * proj.ramp_derivative(t) * k;
        }
    }
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ProjectionParams {
        ProjectionParams::new(0.125, 1e-3).unwrap()
    }

    #[test]
    fn tv_of_constant_is_zero() {
        let g = Grid::new(17).unwrap();
        assert_eq!(bv_seminorm(&ScalarField::constant(g, 0.6)), 0.0);
    }

    #[test]
    fn tv_of_square_is_perimeter() {
        let g = Grid::new(65).unwrap();
        // Half-open sampling keeps 32 nodes per side, matching the side length.
        let z = ScalarField::from_fn(g, |x, y| ((0.25..0.75).contains(&x) && (0.25..0.75).contains(&y)) as u8 as f64);
        let tv = bv_seminorm(&z);
        assert!((tv - 2.0).abs() <= 2.0 * g.spacing(), "{tv}");
        let closed = ScalarField::from_fn(g, |x, y| ((0.25..=0.75).contains(&x) && (0.25..=0.75).contains(&y)) as u8 as f64);
        let tv = bv_seminorm(&closed);
        assert!((tv - 2.0).abs() <= 4.0 * g.spacing(), "{tv}");
    }

    #[test]
    fn tv_of_disk_is_close_to_circumference() {
        let g = Grid::new(129).unwrap();
        let z = ScalarField::from_fn(g, |x, y| ((x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.0625) as u8 as f64);
        let exact = 2.0 * std::f64::consts::PI * 0.25;
        let tv = bv_seminorm(&z);
        assert!(((tv - exact) / exact).abs() < 0.15, "{tv}");
    }

    #[test]
    fn curvature_requires_positive_floor() {
        let g = Grid::new(9).unwrap();
        let p = ProjectionParams { epsilon: 0.125, h: 0.0 };
        assert!(matches!(curvature_term(&ScalarField::zeros(g), &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn curvature_of_flat_projection_is_zero() {
        let g = Grid::new(17).unwrap();
        let k = curvature_term(&ScalarField::constant(g, 0.7), &params()).unwrap();
        assert!(k.values().iter().all(|&v| v == 0.0));
    }

    /// Nodes whose two-step stencil lies strictly inside the ramp.
    fn deep_band(phi: &ScalarField, eps: f64) -> Vec<(usize, usize)> {
        let n = phi.grid().n();
        let inside = |i: usize, j: usize| {
            let t = phi.at(i, j);
            t > -eps && t < 0.0
        };
        let mut out = Vec::new();
        for j in 2..n - 2 {
            for i in 2..n - 2 {
                let all = (i - 2..=i + 2).all(|a| (j - 2..=j + 2).all(|b| inside(a, b)));
                if all {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn straight_interface_has_no_curvature() {
        let g = Grid::new(65).unwrap();
        let phi = ScalarField::from_fn(g, |x, _| x - 0.5);
        let k = curvature_term(&phi, &params()).unwrap();
        let band = deep_band(&phi, 0.125);
        assert!(!band.is_empty());
        for (i, j) in band {
            assert!(k.at(i, j).abs() < 10.0 * g.spacing());
        }
    }

    #[test]
    fn circle_curvature_matches_inverse_radius() {
        let g = Grid::new(65).unwrap();
        let r = 0.3;
        let dist = |x: f64, y: f64| ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
        let phi = ScalarField::from_fn(g, |x, y| r - dist(x, y));
        let k = curvature_term(&phi, &params()).unwrap();
        let band = deep_band(&phi, 0.125);
        assert!(!band.is_empty());
        let mean = band.iter().map(|&(i, j)| k.at(i, j)).sum::<f64>() / band.len() as f64;
        assert!(((mean + 1.0 / r) * r).abs() < 0.2, "mean {mean}");
        // Pointwise the term tracks the local radius of the level line.
        for &(i, j) in &band {
            let (x, y) = g.position(i, j);
            let local = -1.0 / dist(x, y);
            assert!(((k.at(i, j) - local) / local).abs() < 0.05);
        }
    }

    #[test]
    fn velocity_rhs_without_curvature() {
        let g = Grid::new(33).unwrap();
        let p = params();
        let phi = ScalarField::from_fn(g, |x, y| 0.25 - ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt());
        let v = ScalarField::from_fn(g, |x, y| 1.0 + x * y);
        let rhs = velocity_rhs(&phi, &v, &p, &CurvatureParams::default()).unwrap();
        for k in 0..g.node_count() {
            let t = phi.values()[k];
            assert_eq!(rhs.values()[k], -p.ramp_derivative(t) * v.values()[k]);
            if p.ramp_derivative(t) > 0.0 {
                assert!(rhs.values()[k] < 0.0);
            }
        }
    }

    #[test]
    fn velocity_rhs_vanishes_far_from_interface() {
        let g = Grid::new(17).unwrap();
        let p = params();
        let v = ScalarField::constant(g, 3.0);
        let cur = CurvatureParams { beta: 1.0, beta_alpha: 2.0, flip_sign: false };
        for c in [-1.0, 1.0] {
            let rhs = velocity_rhs(&ScalarField::constant(g, c), &v, &p, &cur).unwrap();
            assert!(rhs.values().iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn velocity_rhs_support_is_confined_to_band() {
        let g = Grid::new(33).unwrap();
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cur = CurvatureParams { beta: 0.1, beta_alpha: 0.5, flip_sign: false };
        for _ in 0..5 {
            let phi = ScalarField::from_values(g, (0..g.node_count()).map(|_| rng.gen_range(-0.4..0.3)).collect()).unwrap();
            let v = ScalarField::from_values(g, (0..g.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let rhs = velocity_rhs(&phi, &v, &p, &cur).unwrap();
            let kappa = curvature_term(&phi, &p).unwrap();
            assert!(kappa.is_finite());
            // Each component of the normalized gradient is bounded by one.
            assert!(kappa.max_abs() <= 4.0 / g.spacing() + 1e-9);
            for k in 0..g.node_count() {
                let t = phi.values()[k];
                if !(-0.125..=0.0).contains(&t) {
                    assert_eq!(rhs.values()[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn velocity_rhs_rejects_grid_mismatch() {
        let a = ScalarField::zeros(Grid::new(9).unwrap());
        let b = ScalarField::zeros(Grid::new(11).unwrap());
        assert!(velocity_rhs(&a, &b, &params(), &CurvatureParams::default()).is_err());
    }

    #[test]
    fn flip_sign_negates_curvature_part() {
        let g = Grid::new(33).unwrap();
        let p = params();
        let phi = ScalarField::from_fn(g, |x, y| 0.25 - ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt());
        let v = ScalarField::zeros(g);
        let cur = CurvatureParams { beta: 1.0, beta_alpha: 0.3, flip_sign: false };
        let a = velocity_rhs(&phi, &v, &p, &cur).unwrap();
        let b = velocity_rhs(&phi, &v, &p, &CurvatureParams { flip_sign: true, ..cur }).unwrap();
        for k in 0..g.node_count() {
            assert_eq!(a.values()[k], -b.values()[k]);
        }
    }
}
