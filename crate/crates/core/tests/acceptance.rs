//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs as a plain binary (`harness = false`) so the
//! lines always reach the terminal in order.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use levelreg::harness::experiment::{initial_level_set, measure, reconstruct, run_experiment, shape_difference};
use levelreg::harness::output::RECORDS_FILE;
use levelreg::harness::selftest::{adjoint_defect, gradient_defect, poisson_convergence, projection_contracts, tv_accuracy};
use levelreg::harness::{run_sweep, BetaAlphaRule, ExperimentSpec, SweepSpec, PRESET_NAMES};
use levelreg::{EllipticSolver, Reconstruction};

type Verdict = (bool, String);

fn preset(name: &str) -> ExperimentSpec {
    ExperimentSpec::preset(name).expect("bundled preset")
}

fn c1_solver_correctness() -> Verdict {
    let r = poisson_convergence(33, 65).unwrap();
    let ok = (1.8..=2.2).contains(&r.order) && r.slowest_solve < Duration::from_secs(5);
    (ok, format!("order {:.3} (errors {:.2e} -> {:.2e}), slowest solve {:.3}s", r.order, r.error_coarse, r.error_fine, r.slowest_solve.as_secs_f64()))
}

fn c2_adjoint() -> Verdict {
    let t0 = Instant::now();
    let d = adjoint_defect(33, 100, 2024).unwrap();
    let t = t0.elapsed();
    (d < 1e-6 && t < Duration::from_secs(30), format!("worst relative defect {d:.2e} over 100 pairs in {:.2}s", t.as_secs_f64()))
}

fn c3_gradient() -> Verdict {
    let d = gradient_defect(65, 20, 1e-4, 2024).unwrap();
    (d < 1e-3, format!("worst relative error {d:.2e} at 20 in-band nodes"))
}

fn c4_projection() -> Verdict {
    let r = projection_contracts(65, 0.125, 100, 2024).unwrap();
    (r.range_ok && r.worst_lipschitz_ratio <= 1.0, format!("range ok: {}, worst Lipschitz ratio {:.3} (bound 1)", r.range_ok, r.worst_lipschitz_ratio))
}

fn c5_bv() -> Verdict {
    let r = tv_accuracy(65).unwrap();
    let sq = (r.square_tv - r.square_perimeter).abs();
    let disk = (r.disk_tv - r.disk_perimeter).abs() / r.disk_perimeter;
    (
        sq <= 2.0 * r.spacing && disk < 0.15,
        format!("square TV {:.4} (|err| {sq:.4} <= {:.4}), disk TV {:.4} vs {:.4} ({:.1}%)", r.square_tv, 2.0 * r.spacing, r.disk_tv, r.disk_perimeter, 100.0 * disk),
    )
}

fn c6_splitting() -> Verdict {
    let spec = preset("exact_two_squares");
    let setup_ok = spec.inversion_grid_n == 65
        && spec.reconstruction.epsilon == 0.125
        && spec.reconstruction.beta == 0.0
        && spec.beta_alpha.is_none()
        && spec.noise_level == 0.0
        && spec.reconstruction.max_iterations <= 3000;
    let t0 = Instant::now();
    let m = measure(&spec).unwrap();
    let o = reconstruct(&spec, &m.noisy).unwrap();
    let t = t0.elapsed();
    let err = o.shape_error.unwrap();
    let split = o.split_one_to_two();
    let ok = setup_ok && o.is_success() && split && o.final_component_count() == 2 && err < 0.15 && t < Duration::from_secs(600);
    let at = o.run.records.iter().find(|r| r.component_count == 2).map_or(0, |r| r.index);
    (
        ok,
        format!(
            "1->2 split: {split} (first 2 at step {at}), final components {}, shape error {:.1}% (< 15%), {} steps in {:.1}s",
            o.final_component_count(),
            100.0 * err,
            o.run.records.len(),
            t.as_secs_f64()
        ),
    )
}

fn c6x_descent() -> Verdict {
    let spec = preset("exact_two_squares");
    let m = measure(&spec).unwrap();
    let solver = EllipticSolver::new(spec.inversion_grid().unwrap()).unwrap();
    let rec = Reconstruction::new(&solver, &m.noisy, spec.reconstruction.clone()).unwrap();
    let phi0 = initial_level_set(&spec).unwrap();
    let mut res = vec![rec.residual(&phi0).unwrap().l2_norm_sq()];
    let mut phi = phi0;
    for _ in 0..50 {
        phi = rec.step(&phi, &phi).unwrap().phi;
        res.push(rec.residual(&phi).unwrap().l2_norm_sq());
    }
    let worst = res.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let ok = res[1] < res[0] && worst <= 1.01;
    (ok, format!("first step {:.3e} -> {:.3e}, worst step ratio over 50 steps {worst:.4} (<= 1.01)", res[0], res[1]))
}

fn c7_noise() -> Verdict {
    let mut lines = Vec::new();
    let mut passes = [0, 0];
    for (slot, name) in ["noise10", "noise50"].into_iter().enumerate() {
        for seed in 1..=3 {
            let mut spec = preset(name);
            spec.set_seed(seed);
            let m = measure(&spec).unwrap();
            let o = reconstruct(&spec, &m.noisy).unwrap();
            let err = o.shape_error.unwrap();
            let ok = o.is_success()
                && if slot == 0 { err < 0.25 } else { o.final_component_count() == 2 };
            passes[slot] += ok as usize;
            lines.push(format!("{name}/seed{seed}: {:.1}% {}c{}", 100.0 * err, o.final_component_count(), if ok { "" } else { " x" }));
        }
    }
    (passes[0] >= 2 && passes[1] >= 2, format!("noise10 {}/3 with error < 25%, noise50 {}/3 with 2 components [{}]", passes[0], passes[1], lines.join(", ")))
}

fn c8_stagnation() -> Verdict {
    let mut spec = preset("exact_two_squares");
    spec.reconstruction.inner_fixed_point_steps = 3;
    let m = measure(&spec).unwrap();
    let solver = EllipticSolver::new(spec.inversion_grid().unwrap()).unwrap();
    let rec = Reconstruction::new(&solver, &m.noisy, spec.reconstruction.clone()).unwrap();
    let phi0 = initial_level_set(&spec).unwrap();
    let n = rec.step(&phi0, &phi0).unwrap().inner_update_norms;
    let ratio = n[1] / n[0];
    (ratio < 0.5, format!("inner update norms {:.3e}, {:.3e}, {:.3e}; ratio {ratio:.3} (< 0.5)", n[0], n[1], n[2]))
}

fn c9_determinism(scratch: &Path) -> Verdict {
    let mut same = Vec::new();
    for name in PRESET_NAMES {
        let bytes: Vec<Vec<u8>> = ["a", "b"]
            .iter()
            .map(|run| {
                let mut spec = preset(name);
                spec.output_dir = scratch.join(name).join(run);
                run_experiment(&spec).unwrap();
                fs::read(spec.output_dir.join(RECORDS_FILE)).unwrap()
            })
            .collect();
        same.push((name, bytes[0] == bytes[1] && !bytes[0].is_empty()));
    }
    let ok = same.iter().all(|(_, s)| *s);
    (ok, format!("byte-identical records.csv: {}", same.iter().map(|(n, s)| format!("{n}={s}")).collect::<Vec<_>>().join(", ")))
}

fn c10_insensitivity(scratch: &Path) -> Verdict {
    let mut spec = preset("noise10");
    spec.output_dir = scratch.join("sweep");
    let runs = run_sweep(&spec, &SweepSpec::beta_alpha_insensitivity()).unwrap();
    let find = |suffix: &str| {
        runs.iter().find(|r| r.label.ends_with(suffix)).and_then(|r| r.outcome.as_ref().ok()).expect("variant present")
    };
    let (fit, fit10) = (find("_fit1"), find("_fit10"));
    let d = shape_difference(&fit.material, &fit10.material, &spec.target_shape).unwrap().unwrap();
    let ba = |o: &levelreg::harness::ExperimentOutcome| match o.spec.beta_alpha {
        Some(BetaAlphaRule::Fixed { value }) => value,
        _ => f64::NAN,
    };
    let ok = runs.len() == 3 && runs.iter().all(|r| r.outcome.as_ref().is_ok_and(|o| o.is_success())) && d < 0.10;
    (ok, format!("βα = {:.2e} vs {:.2e}: final supports differ by {:.1}% of the true area (< 10%)", ba(fit), ba(fit10), 100.0 * d))
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("temp dir");
    let s = scratch.path().to_path_buf();
    let s2 = s.clone();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("1 solver correctness", Box::new(c1_solver_correctness)),
        ("2 adjoint identity", Box::new(c2_adjoint)),
        ("3 gradient check", Box::new(c3_gradient)),
        ("4 projection contracts", Box::new(c4_projection)),
        ("5 BV accuracy", Box::new(c5_bv)),
        ("6 topology splitting", Box::new(c6_splitting)),
        ("6+ exact-data descent", Box::new(c6x_descent)),
        ("7 noise robustness", Box::new(c7_noise)),
        ("8 fixed-point stagnation", Box::new(c8_stagnation)),
        ("9 determinism", Box::new(move || c9_determinism(&s))),
        ("10 parameter insensitivity", Box::new(move || c10_insensitivity(&s2))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let t0 = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(|| check())).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        failed += !ok as usize;
        println!("[{}] criterion {name}: {detail} ({:.1}s)", if ok { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
