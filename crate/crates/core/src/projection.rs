//! Maps from level set functions to material fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Largest argument accepted by [`project_exp`].
pub const EXP_ARGUMENT_LIMIT: f64 = 700.0;

/// Ramp width `epsilon` of the smoothed projection and gradient floor `h`
/// of the regularized curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    pub epsilon: f64,
    pub h: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams { epsilon: 0.125, h: 1e-3 }
    }
}

impl ProjectionParams {
    pub fn new(epsilon: f64, h: f64) -> Result<Self> {
        let p = ProjectionParams { epsilon, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.h >= 0.0 && self.h.is_finite()) {
            return Err(Error::invalid(format!("h must be non-negative, got {}", self.h)));
        }
        Ok(())
    }

    /// Scalar ramp: 0 below `-epsilon`, linear on `[-epsilon, 0]`, 1 above.
    #[inline]
    pub fn ramp(&self, t: f64) -> f64 {
        if t < -self.epsilon {
            0.0
        } else if t > 0.0 {
            1.0
        } else {
            1.0 + t / self.epsilon
        }
    }

    /// Derivative of the ramp; both kinks take the ramp value `1/epsilon`.
    #[inline]
    pub fn ramp_derivative(&self, t: f64) -> f64 {
        if (-self.epsilon..=0.0).contains(&t) {
            1.0 / self.epsilon
        } else {
            0.0
        }
    }
}

/// Heaviside projection, with `0` mapped to `1`.
pub fn project_sharp(phi: &ScalarField) -> ScalarField {
    phi.map(|t| if t >= 0.0 { 1.0 } else { 0.0 })
}

pub fn project_smooth(phi: &ScalarField, params: &ProjectionParams) -> ScalarField {
    phi.map(|t| params.ramp(t))
}

pub fn project_smooth_derivative(phi: &ScalarField, params: &ProjectionParams) -> ScalarField {
    phi.map(|t| params.ramp_derivative(t))
}

/// Clamp to `[-a, a]`.
pub fn project_clamp(phi: &ScalarField, a: f64) -> Result<ScalarField> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("clamp bound must be positive, got {a}")));
    }
    Ok(phi.map(|t| t.clamp(-a, a)))
}

/// Exponential projection onto positive fields.
pub fn project_exp(phi: &ScalarField) -> Result<ScalarField> {
    if let Some(t) = phi.values().iter().find(|&&t| !(t <= EXP_ARGUMENT_LIMIT)) {
        return Err(Error::invalid(format!("exp projection argument {t} would overflow")));
    }
    Ok(phi.map(f64::exp))
}

/// Level set function `-dist(x, A) + dist(x, complement of A)` built by
/// exhaustive search over grid nodes.
///
/// Nodes inside `A` get the distance to the nearest node outside it and
/// vice versa, so the function is positive exactly on the sampled region.
/// If `A` covers no node or every node, the constant `∓√2` is returned.
pub fn signed_distance_init(grid: Grid, inside: impl Fn(f64, f64) -> bool) -> ScalarField {
    let n = grid.n();
    let mut points_in = Vec::new();
    let mut points_out = Vec::new();
    let mut mask = Vec::with_capacity(grid.node_count());
    for j in 0..n {
        for i in 0..n {
            let (x, y) = grid.position(i, j);
            let hit = inside(x, y);
            mask.push(hit);
            if hit {
                points_in.push((x, y));
            } else {
                points_out.push((x, y));
            }
        }
    }
    let diameter = std::f64::consts::SQRT_2;
    if points_in.is_empty() {
        return ScalarField::constant(grid, -diameter);
    }
    if points_out.is_empty() {
        return ScalarField::constant(grid, diameter);
    }
    let nearest = |x: f64, y: f64, set: &[(f64, f64)]| {
        set.iter().map(|&(a, b)| (a - x) * (a - x) + (b - y) * (b - y)).fold(f64::INFINITY, f64::min).sqrt()
    };
    let values = (0..grid.node_count())
        .map(|k| {
            let (i, j) = grid.coords(k);
            let (x, y) = grid.position(i, j);
            if mask[k] {
                nearest(x, y, &points_out)
            } else {
                -nearest(x, y, &points_in)
            }
        })
        .collect();
    ScalarField::from_values(grid, values).expect("one value per node")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(17).unwrap()
    }

    #[test]
    fn sharp_projection() {
        let g = grid();
        assert!(project_sharp(&ScalarField::constant(g, -1.0)).values().iter().all(|&v| v == 0.0));
        assert!(project_sharp(&ScalarField::constant(g, 0.0)).values().iter().all(|&v| v == 1.0));
        let z = project_sharp(&ScalarField::from_fn(g, |x, _| x - 0.5));
        for j in 0..17 {
            for i in 0..17 {
                assert_eq!(z.at(i, j), if i >= 8 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn smooth_projection_endpoints() {
        let p = ProjectionParams::new(0.125, 1e-3).unwrap();
        assert_eq!(p.ramp(-0.125), 0.0);
        assert_eq!(p.ramp(0.0), 1.0);
        assert_eq!(p.ramp(-0.0625), 0.5);
        assert_eq!(p.ramp(-3.0), 0.0);
        assert_eq!(p.ramp(3.0), 1.0);
    }

    #[test]
    fn smooth_derivative_values() {
        let g = grid();
        let p = ProjectionParams::new(0.2, 1e-3).unwrap();
        let d = project_smooth_derivative(&ScalarField::constant(g, -0.1), &p);
        assert!(d.values().iter().all(|&v| (v - 5.0).abs() < 1e-12));
        let d = project_smooth_derivative(&ScalarField::constant(g, 1.0), &p);
        assert!(d.values().iter().all(|&v| v == 0.0));
        assert_eq!(p.ramp_derivative(0.0), 5.0);
        assert_eq!(p.ramp_derivative(-0.2), 5.0);
    }

    #[test]
    fn derivative_has_unit_mass_across_interface() {
        // Trapezoid line integral of P′_ε along x for φ = x − 0.5.
        let p = ProjectionParams::new(0.125, 0.0).unwrap();
        let m = 4096;
        let dx = 1.0 / m as f64;
        let mass: f64 = (0..=m)
            .map(|k| {
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                w * p.ramp_derivative(k as f64 * dx - 0.5)
            })
            .sum::<f64>()
            * dx;
        assert!((mass - 1.0).abs() < 2e-3, "{mass}");
    }

    #[test]
    fn params_validation() {
        assert!(ProjectionParams::new(0.0, 1e-3).is_err());
        assert!(ProjectionParams::new(0.1, -1.0).is_err());
        assert!(ProjectionParams::new(0.1, 0.0).is_ok());
    }

    #[test]
    fn clamp_projection() {
        let g = grid();
        let z = project_clamp(&ScalarField::constant(g, 2.0), 1.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 1.0));
        let z = project_clamp(&ScalarField::constant(g, 0.0), 1.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let phi = ScalarField::from_fn(g, |x, y| 5.0 * (x - y));
        let once = project_clamp(&phi, 0.7).unwrap();
        assert_eq!(project_clamp(&once, 0.7).unwrap(), once);
        assert!(matches!(project_clamp(&phi, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn exp_projection() {
        let g = grid();
        assert!(project_exp(&ScalarField::zeros(g)).unwrap().values().iter().all(|&v| v == 1.0));
        let tiny = project_exp(&ScalarField::constant(g, -100.0)).unwrap();
        assert!(tiny.values().iter().all(|&v| v > 0.0 && v < 1e-40));
        assert!(project_exp(&ScalarField::constant(g, 701.0)).is_err());
    }

    #[test]
    fn signed_distance_of_disk() {
        let g = Grid::new(65).unwrap();
        let phi = signed_distance_init(g, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.04);
        let h = g.spacing();
        assert!((phi.at(32, 32) - 0.2).abs() <= h, "{}", phi.at(32, 32));
        let corner = -(0.5f64.sqrt() - 0.2);
        assert!((phi.at(0, 0) - corner).abs() <= h, "{}", phi.at(0, 0));
        assert!(phi.max_abs() <= std::f64::consts::SQRT_2);
    }

    #[test]
    fn signed_distance_degenerate_regions() {
        let g = grid();
        let all = signed_distance_init(g, |_, _| true);
        assert!(all.values().iter().all(|&v| v == std::f64::consts::SQRT_2));
        let none = signed_distance_init(g, |_, _| false);
        assert!(none.values().iter().all(|&v| v == -std::f64::consts::SQRT_2));
    }

    #[test]
    fn signed_distance_sign_recovers_region() {
        let g = Grid::new(33).unwrap();
        let region = |x: f64, y: f64| (x - 0.3).abs() < 0.15 && (y - 0.6).abs() < 0.2 || (x - 0.7).powi(2) + (y - 0.3).powi(2) < 0.02;
        let z = project_sharp(&signed_distance_init(g, region));
        let truth = ScalarField::from_fn(g, |x, y| region(x, y) as u8 as f64);
        assert_eq!(z, truth);
    }

    fn field_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, n * n)
    }

    proptest! {
        #[test]
        fn smooth_projection_range_and_monotonicity(a in field_strategy(9), shift in 0.0f64..0.5, eps in 0.01f64..0.5) {
            let g = Grid::new(9).unwrap();
            let p = ProjectionParams::new(eps, 1e-3).unwrap();
            let phi = ScalarField::from_values(g, a).unwrap();
            let z = project_smooth(&phi, &p);
            let z_up = project_smooth(&phi.map(|t| t + shift), &p);
            let sharp = project_sharp(&phi);
            let dz = project_smooth_derivative(&phi, &p);
            for k in 0..g.node_count() {
                prop_assert!((0.0..=1.0).contains(&z.values()[k]));
                prop_assert!(z_up.values()[k] >= z.values()[k]);
                prop_assert!(sharp.values()[k] == 0.0 || sharp.values()[k] == 1.0);
                let t = phi.values()[k];
                let strictly_inside = t > -eps && t < 0.0;
                if strictly_inside {
                    prop_assert!(dz.values()[k] > 0.0);
                    prop_assert!(z.values()[k] > 0.0 && z.values()[k] < 1.0);
                }
                if t < -eps || t > 0.0 {
                    prop_assert_eq!(dz.values()[k], 0.0);
                }
            }
        }

        #[test]
        fn smooth_projection_l1_lipschitz(a in field_strategy(11), b in field_strategy(11), eps in 0.05f64..0.5) {
            let g = Grid::new(11).unwrap();
            let p = ProjectionParams::new(eps, 1e-3).unwrap();
            let (p1, p2) = (ScalarField::from_values(g, a).unwrap(), ScalarField::from_values(g, b).unwrap());
            let lhs = project_smooth(&p1, &p).zip_map(&project_smooth(&p2, &p), |x, y| x - y).unwrap().l1_norm();
            let rhs = p1.zip_map(&p2, |x, y| x - y).unwrap().l2_norm() / eps;
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn exp_projection_is_monotone(a in field_strategy(5), d in prop::collection::vec(0.0f64..2.0, 25)) {
            let g = Grid::new(5).unwrap();
            let lo = ScalarField::from_values(g, a.clone()).unwrap();
            let hi = ScalarField::from_values(g, a.iter().zip(&d).map(|(x, y)| x + y).collect()).unwrap();
            let (elo, ehi) = (project_exp(&lo).unwrap(), project_exp(&hi).unwrap());
            for k in 0..25 {
                prop_assert!(elo.values()[k] > 0.0);
                prop_assert!(elo.values()[k] <= ehi.values()[k]);
            }
        }
    }

    #[test]
    fn smoothing_error_shrinks_with_epsilon() {
        let g = Grid::new(65).unwrap();
        let phi = ScalarField::from_fn(g, |x, y| 0.3 - ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt());
        let sharp = project_sharp(&phi);
        let errs: Vec<f64> = [0.25, 0.125, 0.0625]
            .iter()
            .map(|&e| {
                let p = ProjectionParams::new(e, 1e-3).unwrap();
                project_smooth(&phi, &p).zip_map(&sharp, |a, b| a - b).unwrap().l1_norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }
}
