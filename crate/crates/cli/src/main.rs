use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};

use levelreg::harness::experiment::{write_measurements, ExperimentOutcome};
use levelreg::harness::{measure, run_experiment, run_from_data_dir, run_sweep, selftest, ExperimentSpec, SweepSpec};
use levelreg::harness::{BetaAlphaRule, PRESET_NAMES};

/// Level set reconstruction of a source density from boundary data.
#[derive(Parser, Debug)]
#[command(name = "levelreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate exact and noisy boundary data for an experiment.
    Forward(Common),
    /// Run a full reconstruction.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Directory holding data_noisy.csv (and optionally data.csv) from
        /// an earlier `forward`; otherwise data are generated.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a parameter grid, one output subdirectory per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        /// Multiples of the fit-to-data β·α; 0 means no BV term.
        #[arg(long, value_delimiter = ',')]
        beta_alpha_factor: Vec<f64>,
    },
    /// Run the built-in numerical checks.
    Selftest,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// Experiment description (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Bundled experiment.
    #[arg(long, value_parser = PossibleValuesParser::new(PRESET_NAMES))]
    preset: Option<String>,
}

#[derive(Args, Debug)]
struct Common {
    #[command(flatten)]
    source: Source,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the spec's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> levelreg::Result<ExperimentSpec> {
        let mut spec = match (&self.source.spec, &self.source.preset) {
            (Some(path), _) => ExperimentSpec::load(path)?,
            (None, Some(name)) => ExperimentSpec::preset(name)?,
            (None, None) => unreachable!("clap enforces one source"),
        };
        if let Some(seed) = self.seed {
            spec.set_seed(seed);
        }
        if let Some(out) = &self.out {
            spec.output_dir = out.clone();
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn summarize(o: &ExperimentOutcome) -> String {
    let last = o.run.records.last();
    let shape = o.shape_error.map_or("n/a".to_string(), |e| format!("{:.1}%", 100.0 * e));
    format!(
        "{}: {} iterations, residual_sq {:.3e}, {} component(s), shape error {shape}, termination {:?}",
        o.spec.name,
        o.run.records.len(),
        last.map_or(f64::NAN, |r| r.residual_sq),
        o.final_component_count(),
        o.run.termination,
    )
}

fn run(cli: Cli) -> levelreg::Result<bool> {
    match cli.command {
        Command::Forward(common) => {
            let spec = common.load()?;
            let m = measure(&spec)?;
            write_measurements(&spec.output_dir, &spec, &m)?;
            println!("wrote data for {} to {}", spec.name, spec.output_dir.display());
            Ok(true)
        }
        Command::Invert { common, data } => {
            let spec = common.load()?;
            let outcome = match data {
                Some(dir) => run_from_data_dir(&spec, &dir)?,
                None => run_experiment(&spec)?,
            };
            println!("{}", summarize(&outcome));
            println!("artifacts in {}", spec.output_dir.display());
            Ok(outcome.is_success())
        }
        Command::Sweep { common, alpha, beta, epsilon, beta_alpha_factor } => {
            let spec = common.load()?;
            let mut axes = SweepSpec {
                alpha,
                beta,
                epsilon,
                beta_alpha: beta_alpha_factor
                    .into_iter()
                    .map(|f| if f == 0.0 { BetaAlphaRule::Fixed { value: 0.0 } } else { BetaAlphaRule::FitToData { factor: f } })
                    .collect(),
            };
            if axes.is_empty() {
                axes = spec.sweep.clone().unwrap_or_else(SweepSpec::beta_alpha_insensitivity);
            }
            let mut ok = true;
            for r in run_sweep(&spec, &axes)? {
                match r.outcome {
                    Ok(o) => {
                        ok &= o.is_success();
                        println!("{}", summarize(&o));
                    }
                    Err(e) => {
                        ok = false;
                        eprintln!("{}: {e}", r.label);
                    }
                }
            }
            println!("summary in {}", spec.output_dir.join(levelreg::harness::experiment::SWEEP_SUMMARY_FILE).display());
            Ok(ok)
        }
        Command::Selftest => {
            let mut ok = true;
            for c in selftest::run_all() {
                ok &= c.passed;
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
