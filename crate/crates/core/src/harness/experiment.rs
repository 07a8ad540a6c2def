//! End-to-end runs: data generation, reconstruction, artifacts, sweeps.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::components::count_components;
use crate::elliptic::EllipticSolver;
use crate::error::{Error, Result};
use crate::grid::{BoundaryTrace, ScalarField};
use crate::inversion::{fit_to_data_beta_alpha, Reconstruction, RunOutput, Termination, SUPPORT_THRESHOLD};
use crate::projection::{project_smooth, signed_distance_init};

use super::data::{add_noise, generate_data};
use super::output::{
    snapshot_file_name, write_pgm, write_records, write_trace, DATA_FILE, NOISY_DATA_FILE, RECORDS_FILE,
    RESOLVED_SPEC_FILE,
};
use super::shape::Region;
use super::spec::{BetaAlphaRule, ExperimentSpec, SweepSpec};

/// Exact and noisy measurements for a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub clean: BoundaryTrace,
    pub noisy: BoundaryTrace,
}

pub fn measure(spec: &ExperimentSpec) -> Result<Measurements> {
    spec.validate()?;
    let clean = generate_data(&spec.target_shape, spec.forward_grid()?, spec.inversion_grid()?)?;
    let noisy = add_noise(&clean, spec.noise_level, spec.seed())?;
    Ok(Measurements { clean, noisy })
}

pub fn initial_level_set(spec: &ExperimentSpec) -> Result<ScalarField> {
    let region = &spec.initial_shape;
    Ok(signed_distance_init(spec.inversion_grid()?, |x, y| region.contains(x, y)))
}

/// Replaces any `β·α` rule by its numeric value, so the returned spec
/// reproduces the run without re-probing.
pub fn resolve(spec: &ExperimentSpec, solver: &EllipticSolver, data: &BoundaryTrace) -> Result<ExperimentSpec> {
    let mut out = spec.clone();
    let Some(rule) = spec.beta_alpha else {
        return Ok(out);
    };
    let beta_alpha = match rule {
        BetaAlphaRule::Fixed { value } => value,
        BetaAlphaRule::FitToData { factor } => {
            let phi0 = initial_level_set(spec)?;
            let probe = Reconstruction::new(solver, data, spec.reconstruction.clone())?.evaluate_functional(&phi0, &phi0)?;
            factor * fit_to_data_beta_alpha(spec.noise_level, data, &probe)?
        }
    };
    out.beta_alpha = Some(BetaAlphaRule::Fixed { value: beta_alpha });
    out.reconstruction.set_beta_alpha(beta_alpha);
    Ok(out)
}

/// Symmetric difference of `{z ≥ 1/2}` and `{reference ≥ 1/2}`, as a
/// fraction of the reference area. `None` when the reference is empty.
pub fn shape_error(z: &ScalarField, reference: &ScalarField) -> Result<Option<f64>> {
    let inside = |v: f64| v >= SUPPORT_THRESHOLD;
    let area = reference.map(|v| inside(v) as u8 as f64).integral();
    let diff = z.zip_map(reference, |a, b| (inside(a) != inside(b)) as u8 as f64)?.integral();
    Ok((area > 0.0).then(|| diff / area))
}

/// Symmetric difference between the supports of two material fields,
/// relative to the area of `region` sampled on the same grid.
pub fn shape_difference(a: &ScalarField, b: &ScalarField, region: &Region) -> Result<Option<f64>> {
    let area = region.rasterize(*a.grid()).integral();
    let inside = |v: f64| v >= SUPPORT_THRESHOLD;
    let diff = a.zip_map(b, |p, q| (inside(p) != inside(q)) as u8 as f64)?.integral();
    Ok((area > 0.0).then(|| diff / area))
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// The spec with `β·α` resolved to a number.
    pub spec: ExperimentSpec,
    pub run: RunOutput,
    /// `P_ε(φ)` of the last iterate.
    pub material: ScalarField,
    /// Against the target rasterized on the inversion grid.
    pub shape_error: Option<f64>,
    pub initial_component_count: usize,
}

impl ExperimentOutcome {
    pub fn is_success(&self) -> bool {
        self.run.is_success()
    }

    pub fn final_component_count(&self) -> usize {
        self.run.records.last().map_or(self.initial_component_count, |r| r.component_count)
    }

    /// Whether the component count went from one to two at some step.
    pub fn split_one_to_two(&self) -> bool {
        let counts = std::iter::once(self.initial_component_count).chain(self.run.records.iter().map(|r| r.component_count));
        counts.clone().zip(counts.skip(1)).any(|(a, b)| a == 1 && b == 2)
    }
}

/// Runs the reconstruction on given measurements without touching the
/// file system.
pub fn reconstruct(spec: &ExperimentSpec, noisy: &BoundaryTrace) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let grid = spec.inversion_grid()?;
    if *noisy.grid() != grid {
        return Err(Error::invalid("measurement grid does not match inversion_grid_n"));
    }
    let solver = EllipticSolver::new(grid)?;
    let resolved = resolve(spec, &solver, noisy)?;
    let phi0 = initial_level_set(&resolved)?;
    let rec = Reconstruction::new(&solver, noisy, resolved.reconstruction.clone())?;
    let run = rec.run(&phi0, &resolved.snapshot_schedule)?;
    let material = project_smooth(&run.phi, &resolved.reconstruction.projection());
    let shape_error = shape_error(&material, &resolved.target_shape.rasterize(grid))?;
    let initial_component_count = count_components(&project_smooth(&phi0, &resolved.reconstruction.projection()), SUPPORT_THRESHOLD);
    Ok(ExperimentOutcome { spec: resolved, run, material, shape_error, initial_component_count })
}

/// Writes `data.csv`, `data_noisy.csv` and the resolved spec.
pub fn write_measurements(dir: &Path, spec: &ExperimentSpec, m: &Measurements) -> Result<ExperimentSpec> {
    fs::create_dir_all(dir)?;
    let solver = EllipticSolver::dirichlet_only(spec.inversion_grid()?, Default::default())?;
    let resolved = resolve(spec, &solver, &m.noisy)?;
    write_trace(&dir.join(DATA_FILE), &m.clean)?;
    write_trace(&dir.join(NOISY_DATA_FILE), &m.noisy)?;
    write_resolved(dir, &resolved)?;
    Ok(resolved)
}

fn write_resolved(dir: &Path, spec: &ExperimentSpec) -> Result<()> {
    let mut spec = spec.clone();
    spec.output_dir = dir.to_path_buf();
    fs::write(dir.join(RESOLVED_SPEC_FILE), spec.to_toml_string()?)?;
    Ok(())
}

/// Records, snapshots and the resolved spec of a finished run.
pub fn write_outcome(dir: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records(&dir.join(RECORDS_FILE), &outcome.run.records)?;
    for (k, z) in &outcome.run.snapshots {
        write_pgm(&dir.join(snapshot_file_name(*k)), z)?;
    }
    write_resolved(dir, &outcome.spec)
}

/// Generates data, reconstructs, and writes every artifact into
/// `spec.output_dir`. A diverged run still writes its partial history; the
/// caller checks [`ExperimentOutcome::is_success`].
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let m = measure(spec)?;
    run_with_measurements(spec, &m)
}

pub fn run_with_measurements(spec: &ExperimentSpec, m: &Measurements) -> Result<ExperimentOutcome> {
    let dir = spec.output_dir.clone();
    fs::create_dir_all(&dir)?;
    write_trace(&dir.join(DATA_FILE), &m.clean)?;
    write_trace(&dir.join(NOISY_DATA_FILE), &m.noisy)?;
    let outcome = reconstruct(spec, &m.noisy)?;
    write_outcome(&dir, &outcome)?;
    Ok(outcome)
}

/// Inverts previously written measurements (`data_noisy.csv`, plus
/// `data.csv` if present, otherwise the noisy trace stands in) from
/// `data_dir`.
pub fn run_from_data_dir(spec: &ExperimentSpec, data_dir: &Path) -> Result<ExperimentOutcome> {
    let grid = spec.inversion_grid()?;
    let noisy = super::output::read_trace(&data_dir.join(NOISY_DATA_FILE), grid)?;
    let clean_path = data_dir.join(DATA_FILE);
    let clean = if clean_path.exists() { super::output::read_trace(&clean_path, grid)? } else { noisy.clone() };
    run_with_measurements(spec, &Measurements { clean, noisy })
}

/// One point of a sweep.
#[derive(Debug)]
pub struct SweepRun {
    pub label: String,
    pub outcome: Result<ExperimentOutcome>,
}

/// Cartesian product of the sweep axes; every variant writes into its own
/// subdirectory of `base.output_dir`.
pub fn sweep_variants(base: &ExperimentSpec, axes: &SweepSpec) -> Vec<(String, ExperimentSpec)> {
    fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
        if v.is_empty() {
            vec![None]
        } else {
            v.iter().copied().map(Some).collect()
        }
    }
    let mut out = Vec::new();
    for a in axis(&axes.alpha) {
        for b in axis(&axes.beta) {
            for e in axis(&axes.epsilon) {
                for r in axis(&axes.beta_alpha) {
                    let mut spec = base.clone();
                    spec.sweep = None;
                    let mut parts = vec![format!("run{:02}", out.len())];
                    if let Some(a) = a {
                        spec.reconstruction.alpha = a;
                        parts.push(format!("a{a}"));
                    }
                    if let Some(b) = b {
                        spec.reconstruction.beta = b;
                        spec.beta_alpha = None;
                        parts.push(format!("b{b}"));
                    }
                    if let Some(e) = e {
                        spec.reconstruction.epsilon = e;
                        parts.push(format!("e{e}"));
                    }
                    if let Some(r) = r {
                        spec.beta_alpha = Some(r);
                        parts.push(r.label());
                    }
                    let label = parts.join("_");
                    spec.output_dir = base.output_dir.join(&label);
                    spec.name = format!("{}/{label}", base.name);
                    out.push((label, spec));
                }
            }
        }
    }
    out
}

pub const SWEEP_SUMMARY_FILE: &str = "sweep.csv";

/// Runs every variant in parallel on shared measurements and writes a
/// summary table. Variants fail independently.
pub fn run_sweep(base: &ExperimentSpec, axes: &SweepSpec) -> Result<Vec<SweepRun>> {
    let m = measure(base)?;
    let variants = sweep_variants(base, axes);
    let runs: Vec<SweepRun> = variants
        .into_par_iter()
        .map(|(label, spec)| SweepRun { outcome: run_with_measurements(&spec, &m), label })
        .collect();
    write_sweep_summary(&base.output_dir.join(SWEEP_SUMMARY_FILE), &runs)?;
    Ok(runs)
}

#[derive(serde::Serialize)]
struct SummaryRow<'a> {
    label: &'a str,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    beta_alpha: f64,
    status: &'a str,
    iterations: usize,
    final_residual_sq: f64,
    final_component_count: usize,
    shape_error: Option<f64>,
}

fn write_sweep_summary(path: &Path, runs: &[SweepRun]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::invalid(e.to_string()))?;
    for run in runs {
        let row = match &run.outcome {
            Ok(o) => SummaryRow {
                label: &run.label,
                alpha: o.spec.reconstruction.alpha,
                beta: o.spec.reconstruction.beta,
                epsilon: o.spec.reconstruction.epsilon,
                beta_alpha: o.spec.reconstruction.beta_alpha(),
                status: match o.run.termination {
                    Termination::MaxIterations => "max_iterations",
                    Termination::StopResidual => "stop_residual",
                    Termination::Failed(_) => "failed",
                },
                iterations: o.run.records.len(),
                final_residual_sq: o.run.records.last().map_or(f64::NAN, |r| r.residual_sq),
                final_component_count: o.final_component_count(),
                shape_error: o.shape_error,
            },
            Err(_) => SummaryRow {
                label: &run.label,
                alpha: f64::NAN,
                beta: f64::NAN,
                epsilon: f64::NAN,
                beta_alpha: f64::NAN,
                status: "error",
                iterations: 0,
                final_residual_sq: f64::NAN,
                final_component_count: 0,
                shape_error: None,
            },
        };
        w.serialize(row).map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
