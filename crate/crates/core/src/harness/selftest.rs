//! Quick numerical self-checks of the building blocks, shared by the CLI
//! `selftest` command and the acceptance suite.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::EllipticSolver;
use crate::error::{Error, Result};
use crate::geometry::{bv_seminorm, velocity_rhs, CurvatureParams};
use crate::grid::{BoundaryTrace, Grid, ScalarField};
use crate::inversion::{Reconstruction, ReconstructionConfig};
use crate::projection::{project_smooth, signed_distance_init, ProjectionParams};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceReport {
    pub error_coarse: f64,
    pub error_fine: f64,
    pub order: f64,
    /// Slowest single solve, factorization included.
    pub slowest_solve: Duration,
}

/// Max-norm error of the Dirichlet Poisson solver for
/// `u = sin(πx) sin(πy)` on two grids, and the observed order.
pub fn poisson_convergence(n_coarse: usize, n_fine: usize) -> Result<ConvergenceReport> {
    let mut slowest = Duration::ZERO;
    let mut err = |n: usize| -> Result<(f64, f64)> {
        let g = Grid::new(n)?;
        let src = ScalarField::from_fn(g, |x, y| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        let t0 = Instant::now();
        let u = EllipticSolver::dirichlet_only(g, Default::default())?.solve_poisson_dirichlet(&src)?;
        slowest = slowest.max(t0.elapsed());
        let e = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin())
            .values()
            .iter()
            .zip(u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((e, g.spacing()))
    };
    let (ec, hc) = err(n_coarse)?;
    let (ef, hf) = err(n_fine)?;
    Ok(ConvergenceReport { error_coarse: ec, error_fine: ef, order: (ec / ef).ln() / (hc / hf).ln(), slowest_solve: slowest })
}

/// Worst relative defect of `⟨F′s, r⟩_∂Ω = ⟨s, v(r)⟩_Ω` over random pairs.
/// `s` vanishes on the two outermost rings of nodes.
pub fn adjoint_defect(n: usize, pairs: usize, seed: u64) -> Result<f64> {
    let g = Grid::new(n)?;
    let solver = EllipticSolver::dirichlet_only(g, Default::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let mut s = ScalarField::zeros(g);
        for j in 2..n - 2 {
            for i in 2..n - 2 {
                s.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let r = BoundaryTrace::from_values(g, (0..g.boundary_count()).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let lhs = solver.forward_linearization(&s)?.inner(&r);
        let rhs = s.inner(&solver.solve_laplace_dirichlet(&r)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    Ok(worst)
}

/// Worst relative mismatch between the misfit part of the velocity
/// right-hand side, `−P′_ε(φ) v`, and the central difference quotient of
/// `½‖F(P_ε(φ)) − y‖²` divided by the node's area weight, over `nodes`
/// random nodes strictly inside the ramp and away from the boundary.
pub fn gradient_defect(n: usize, nodes: usize, step: f64, seed: u64) -> Result<f64> {
    let g = Grid::new(n)?;
    let solver = EllipticSolver::new(g)?;
    let cfg = ReconstructionConfig { alpha: 1.0, max_iterations: 0, ..Default::default() };
    let proj = cfg.projection();
    let truth = ScalarField::from_fn(g, |x, y| {
        (((0.15..=0.4).contains(&x) || (0.6..=0.85).contains(&x)) && (0.2..=0.45).contains(&y)) as u8 as f64
    });
    let data = solver.forward(&truth)?;
    let phi = signed_distance_init(g, |x, y| (x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.3f64.powi(2));
    let rec = Reconstruction::new(&solver, &data, cfg.clone())?;

    let r = rec.residual(&phi)?;
    let v = solver.solve_laplace_dirichlet(&r)?;
    let analytic = velocity_rhs(&phi, &v, &proj, &CurvatureParams::default())?;

    let margin = 2.0 * step;
    let mut candidates: Vec<(usize, usize)> = (2..n - 2)
        .flat_map(|j| (2..n - 2).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let t = phi.at(i, j);
            t > -proj.epsilon + margin && t < -margin
        })
        .collect();
    if candidates.len() < nodes {
        return Err(Error::invalid(format!("only {} in-band nodes available", candidates.len())));
    }
    candidates.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut worst = 0.0_f64;
    for &(i, j) in candidates.iter().take(nodes) {
        let mut p = phi.clone();
        p.set(i, j, phi.at(i, j) + step);
        let plus = rec.misfit(&p)?;
        p.set(i, j, phi.at(i, j) - step);
        let minus = rec.misfit(&p)?;
        let fd = -(plus - minus) / (2.0 * step) / g.area_weight(i, j);
        let a = analytic.at(i, j);
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionReport {
    pub range_ok: bool,
    /// Largest `‖P_ε(φ₁)−P_ε(φ₂)‖₁ / ((1/ε)·|Ω|·‖φ₁−φ₂‖₂)`; at most 1.
    pub worst_lipschitz_ratio: f64,
}

pub fn projection_contracts(n: usize, epsilon: f64, pairs: usize, seed: u64) -> Result<ProjectionReport> {
    let g = Grid::new(n)?;
    let proj = ProjectionParams::new(epsilon, ProjectionParams::default().h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_field = |rng: &mut ChaCha8Rng| {
        let scale = rng.gen_range(0.01..1.0);
        let (a, b) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let vals = (0..g.node_count()).map(|k| {
            let (x, y) = g.position(k % n, k / n);
            scale * ((3.0 * x + a).sin() * (2.0 * y + b).cos() + rng.gen_range(-0.5..0.5))
        });
        ScalarField::from_values(g, vals.collect())
    };
    let mut report = ProjectionReport { range_ok: true, worst_lipschitz_ratio: 0.0 };
    for _ in 0..pairs {
        let p1 = random_field(&mut rng)?;
        let p2 = random_field(&mut rng)?;
        let (z1, z2) = (project_smooth(&p1, &proj), project_smooth(&p2, &proj));
        report.range_ok &= z1.values().iter().chain(z2.values()).all(|v| (0.0..=1.0).contains(v));
        let lhs = z1.zip_map(&z2, |a, b| a - b)?.l1_norm();
        let rhs = p1.zip_map(&p2, |a, b| a - b)?.l2_norm() / epsilon;
        if rhs > 0.0 {
            report.worst_lipschitz_ratio = report.worst_lipschitz_ratio.max(lhs / rhs);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
pub struct TvReport {
    pub spacing: f64,
    pub square_tv: f64,
    pub square_perimeter: f64,
    pub disk_tv: f64,
    pub disk_perimeter: f64,
}

/// TV of the indicator of `[0.25, 0.75)²` (half-open so that it covers
/// exactly half the nodes per side) and of the disk of radius 0.3.
pub fn tv_accuracy(n: usize) -> Result<TvReport> {
    let g = Grid::new(n)?;
    let square = ScalarField::from_fn(g, |x, y| ((0.25..0.75).contains(&x) && (0.25..0.75).contains(&y)) as u8 as f64);
    let disk = ScalarField::from_fn(g, |x, y| ((x - 0.5).powi(2) + (y - 0.5).powi(2) <= 0.09) as u8 as f64);
    Ok(TvReport {
        spacing: g.spacing(),
        square_tv: bv_seminorm(&square),
        square_perimeter: 2.0,
        disk_tv: bv_seminorm(&disk),
        disk_perimeter: 2.0 * PI * 0.3,
    })
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

/// All checks at their acceptance tolerances.
pub fn run_all() -> Vec<Check> {
    vec![
        check(
            "poisson convergence order",
            poisson_convergence(33, 65).map(|r| {
                let ok = (1.8..=2.2).contains(&r.order) && r.slowest_solve < Duration::from_secs(5);
                (ok, format!("order {:.3}, slowest solve {:.3}s", r.order, r.slowest_solve.as_secs_f64()))
            }),
        ),
        check(
            "adjoint identity",
            adjoint_defect(33, 100, 7).map(|d| (d < 1e-6, format!("worst relative defect {d:.2e} over 100 pairs"))),
        ),
        check(
            "gradient check",
            gradient_defect(33, 20, 1e-4, 3).map(|d| (d < 1e-3, format!("worst relative error {d:.2e} at 20 nodes"))),
        ),
        check(
            "projection contracts",
            projection_contracts(33, 0.125, 100, 5).map(|r| {
                (r.range_ok && r.worst_lipschitz_ratio <= 1.0, format!("range ok: {}, worst Lipschitz ratio {:.3}", r.range_ok, r.worst_lipschitz_ratio))
            }),
        ),
        check(
            "bv accuracy",
            tv_accuracy(65).map(|r| {
                let sq = (r.square_tv - r.square_perimeter).abs();
                let disk = (r.disk_tv - r.disk_perimeter).abs() / r.disk_perimeter;
                (sq <= 2.0 * r.spacing && disk < 0.15, format!("square off by {sq:.4} (limit {:.4}), disk off by {:.1}%", 2.0 * r.spacing, 100.0 * disk))
            }),
        ),
    ]
}
