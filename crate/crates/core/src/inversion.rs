//! The level set evolution: functional evaluation, the explicit update
//! built from three elliptic solves, and the outer iteration.
//!
//! One step from `φ_k`:
//!
//! 1. `u = Δ_h⁻¹ P_ε(φ_k)` with zero boundary values and residual `r = ∂u/∂ν − y^δ`;
//! 2. `v` = harmonic extension of `r`;
//! 3. `w = (I − Δ_h)⁻¹ (−P′_ε(φ_k) v + βα P′_ε(φ_k) κ_h(φ_k))` with zero Neumann data;
//! 4. `φ_{k+1} = φ_k + w / α`.
//!
//! With more than one inner sweep, steps 1–3 are re-evaluated at the last
//! inner iterate while the update stays anchored at the start of the step.

use serde::{Deserialize, Serialize};

use crate::components::count_components;
use crate::elliptic::EllipticSolver;
use crate::error::{Error, Result};
use crate::geometry::{bv_seminorm, velocity_rhs, CurvatureParams};
use crate::grid::{BoundaryTrace, ScalarField};
use crate::projection::{project_smooth, ProjectionParams};

/// Iterates with `max |φ|` above this are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e3;

/// Threshold on `P_ε(φ)` that defines the reconstructed support.
pub const SUPPORT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    /// Regularization weight, the inverse time step.
    pub alpha: f64,
    /// BV weight.
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    pub max_iterations: usize,
    #[serde(default = "default_inner_steps")]
    pub inner_fixed_point_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_residual: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Keep the initial level set as the anchor of every step instead of
    /// the previous iterate.
    #[serde(default)]
    pub fixed_anchor: bool,
    #[serde(default)]
    pub flip_curvature_sign: bool,
}

fn default_epsilon() -> f64 {
    0.125
}

fn default_h() -> f64 {
    1e-3
}

fn default_inner_steps() -> usize {
    1
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            alpha: 100.0,
            beta: 0.0,
            epsilon: default_epsilon(),
            h: default_h(),
            max_iterations: 1000,
            inner_fixed_point_steps: 1,
            stop_residual: None,
            seed: 0,
            fixed_anchor: false,
            flip_curvature_sign: false,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be non-negative, got {}", self.beta)));
        }
        if !(self.h > 0.0) {
            return Err(Error::invalid(format!("h must be positive, got {}", self.h)));
        }
        if self.inner_fixed_point_steps == 0 {
            return Err(Error::invalid("inner_fixed_point_steps must be at least 1"));
        }
        if let Some(s) = self.stop_residual {
            if !(s >= 0.0) {
                return Err(Error::invalid("stop_residual must be non-negative"));
            }
        }
        self.projection().validate()
    }

    pub fn projection(&self) -> ProjectionParams {
        ProjectionParams { epsilon: self.epsilon, h: self.h }
    }

    pub fn curvature(&self) -> CurvatureParams {
        CurvatureParams { beta: self.beta, beta_alpha: self.beta * self.alpha, flip_sign: self.flip_curvature_sign }
    }

    pub fn beta_alpha(&self) -> f64 {
        self.beta * self.alpha
    }

    /// Sets `beta` so that `beta * alpha` equals `beta_alpha`.
    pub fn set_beta_alpha(&mut self, beta_alpha: f64) {
        self.beta = beta_alpha / self.alpha;
    }
}

/// Telemetry for one iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub residual_sq: f64,
    pub bv_value: f64,
    pub penalty: f64,
    pub functional: f64,
    pub component_count: usize,
}

/// Squared discrete H¹ norm: trapezoid L² of the value plus that of the
/// centered-difference gradient.
pub fn h1_norm_sq(f: &ScalarField) -> f64 {
    let g = f.grid();
    let n = g.n();
    let h = g.spacing();
    let d = |k: usize, lo: f64, mid_lo: f64, mid_hi: f64, hi: f64| {
        if k == 0 {
            (mid_hi - lo) / h
        } else if k == n - 1 {
            (hi - mid_lo) / h
        } else {
            (mid_hi - mid_lo) / (2.0 * h)
        }
    };
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            let c = f.at(i, j);
            let gx = d(i, c, if i > 0 { f.at(i - 1, j) } else { c }, if i + 1 < n { f.at(i + 1, j) } else { c }, c);
            let gy = d(j, c, if j > 0 { f.at(i, j - 1) } else { c }, if j + 1 < n { f.at(i, j + 1) } else { c }, c);
            sum += g.area_weight(i, j) * (c * c + gx * gx + gy * gy);
        }
    }
    sum
}

/// Result of one outer step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub phi: ScalarField,
    /// Boundary residual at the start of the step.
    pub residual: BoundaryTrace,
    /// `‖φ^{(j+1)} − φ^{(j)}‖` for each inner sweep, `φ^{(0)} = φ_k`.
    pub inner_update_norms: Vec<f64>,
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Termination {
    MaxIterations,
    StopResidual,
    Failed(Error),
}

#[derive(Debug)]
pub struct RunOutput {
    pub phi: ScalarField,
    pub records: Vec<IterationRecord>,
    /// `(k, P_ε(φ_k))` for every scheduled `k` that was reached.
    pub snapshots: Vec<(usize, ScalarField)>,
    pub termination: Termination,
}

impl RunOutput {
    pub fn is_success(&self) -> bool {
        !matches!(self.termination, Termination::Failed(_))
    }
}

/// Level set reconstruction against one boundary data set.
#[derive(Debug)]
pub struct Reconstruction<'a> {
    solver: &'a EllipticSolver,
    data: &'a BoundaryTrace,
    cfg: ReconstructionConfig,
}

impl<'a> Reconstruction<'a> {
    pub fn new(solver: &'a EllipticSolver, data: &'a BoundaryTrace, cfg: ReconstructionConfig) -> Result<Self> {
        cfg.validate()?;
        if data.grid() != solver.grid() {
            return Err(Error::invalid("data and solver live on different grids"));
        }
        Ok(Reconstruction { solver, data, cfg })
    }

    pub fn config(&self) -> &ReconstructionConfig {
        &self.cfg
    }

    fn check(&self, phi: &ScalarField) -> Result<()> {
        if phi.grid() != self.solver.grid() {
            return Err(Error::invalid("level set lives on a different grid than the solver"));
        }
        Ok(())
    }

    /// `F(P_ε(φ)) − y^δ`.
    pub fn residual(&self, phi: &ScalarField) -> Result<BoundaryTrace> {
        self.check(phi)?;
        let z = project_smooth(phi, &self.cfg.projection());
        self.solver.forward(&z)?.sub(self.data)
    }

    /// `½ ‖F(P_ε(φ)) − y^δ‖²`.
    pub fn misfit(&self, phi: &ScalarField) -> Result<f64> {
        Ok(0.5 * self.residual(phi)?.l2_norm_sq())
    }

    pub fn evaluate_functional(&self, phi: &ScalarField, anchor: &ScalarField) -> Result<IterationRecord> {
        self.check(phi)?;
        phi.ensure_same_grid(anchor)?;
        let z = project_smooth(phi, &self.cfg.projection());
        let residual_sq = self.solver.forward(&z)?.sub(self.data)?.l2_norm_sq();
        let bv_value = bv_seminorm(&z);
        let penalty = h1_norm_sq(&phi.zip_map(anchor, |a, b| a - b)?);
        let alpha = self.cfg.alpha;
        let functional = residual_sq + 2.0 * self.cfg.beta * alpha * bv_value + alpha * penalty;
        Ok(IterationRecord {
            index: 0,
            residual_sq,
            bv_value,
            penalty,
            functional,
            component_count: count_components(&z, SUPPORT_THRESHOLD),
        })
    }

    /// Steps 1–3: the velocity `w` at `phi`, plus the boundary residual.
    pub fn velocity(&self, phi: &ScalarField) -> Result<(ScalarField, BoundaryTrace)> {
        let r = self.residual(phi)?;
        let v = self.solver.solve_laplace_dirichlet(&r)?;
        let rhs = velocity_rhs(phi, &v, &self.cfg.projection(), &self.cfg.curvature())?;
        Ok((self.solver.solve_helmholtz_neumann(&rhs)?, r))
    }

    /// One outer step from `phi` with the given anchor.
    pub fn step(&self, phi: &ScalarField, anchor: &ScalarField) -> Result<StepOutcome> {
        self.check(phi)?;
        phi.ensure_same_grid(anchor)?;
        let inv_alpha = 1.0 / self.cfg.alpha;
        let mut current = phi.clone();
        let mut residual = None;
        let mut norms = Vec::with_capacity(self.cfg.inner_fixed_point_steps);
        for _ in 0..self.cfg.inner_fixed_point_steps {
            let (w, r) = self.velocity(&current)?;
            residual.get_or_insert(r);
            let next = anchor.zip_map(&w, |a, w| a + inv_alpha * w)?;
            norms.push(next.zip_map(&current, |a, b| a - b)?.l2_norm());
            current = next;
        }
        Ok(StepOutcome { phi: current, residual: residual.expect("at least one inner step"), inner_update_norms: norms })
    }

    /// Runs the evolution from `initial`. Failures after the start are
    /// reported in [`RunOutput::termination`] together with the history so far.
    pub fn run(&self, initial: &ScalarField, snapshot_schedule: &[usize]) -> Result<RunOutput> {
        self.check(initial)?;
        if snapshot_schedule.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("snapshot schedule must be sorted ascending"));
        }
        let proj = self.cfg.projection();
        let mut snapshots = Vec::new();
        let mut wanted = snapshot_schedule.iter().copied().peekable();
        let mut take_snapshot = |k: usize, phi: &ScalarField, snaps: &mut Vec<(usize, ScalarField)>| {
            while wanted.peek() == Some(&k) {
                wanted.next();
                if snaps.last().map(|(s, _)| *s) != Some(k) {
                    snaps.push((k, project_smooth(phi, &proj)));
                }
            }
            while wanted.peek().is_some_and(|&s| s < k) {
                wanted.next();
            }
        };

        let mut phi = initial.clone();
        let mut records = Vec::new();
        take_snapshot(0, &phi, &mut snapshots);
        let mut termination = Termination::MaxIterations;
        for k in 1..=self.cfg.max_iterations {
            let anchor = if self.cfg.fixed_anchor { initial } else { &phi };
            let next = match self.step(&phi, anchor) {
                Ok(out) => out.phi,
                Err(e) => {
                    termination = Termination::Failed(e);
                    break;
                }
            };
            let max_abs = if next.is_finite() { next.max_abs() } else { f64::INFINITY };
            if !(max_abs <= DIVERGENCE_BOUND) {
                termination = Termination::Failed(Error::Diverged { iteration: k, max_abs });
                break;
            }
            let anchor = if self.cfg.fixed_anchor { initial } else { &phi };
            let record = match self.evaluate_functional(&next, anchor) {
                Ok(r) => IterationRecord { index: k, ..r },
                Err(e) => {
                    termination = Termination::Failed(e);
                    break;
                }
            };
            phi = next;
            records.push(record);
            take_snapshot(k, &phi, &mut snapshots);
            if self.cfg.stop_residual.is_some_and(|s| record.residual_sq <= s) {
                termination = Termination::StopResidual;
                break;
            }
        }
        Ok(RunOutput { phi, records, snapshots, termination })
    }
}

/// Chooses `βα` so that `2 βα |z|_BV` matches the squared data error
/// scale `(noise_level · ‖y^δ‖)²`.
pub fn fit_to_data_beta_alpha(noise_level: f64, data: &BoundaryTrace, probe: &IterationRecord) -> Result<f64> {
    if !(noise_level >= 0.0) {
        return Err(Error::invalid(format!("noise level must be non-negative, got {noise_level}")));
    }
    if noise_level == 0.0 {
        return Ok(0.0);
    }
    if !(probe.bv_value > 0.0) {
        return Err(Error::invalid("fit-to-data needs a probe with positive total variation"));
    }
    let scale = noise_level * data.l2_norm();
    Ok(scale * scale / (2.0 * probe.bv_value))
}
