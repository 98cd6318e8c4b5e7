use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use vatt_cli::config::ScenarioConfig;
use vatt_cli::csv_out::emit_csv;
use vatt_cli::plot::emit_plots;
use vatt_cli::runner::run_scenario;
use vatt_cli::selftest;

/// Variational attitude estimator on SO(3) with gyro-bias estimation:
/// scenario simulation, trace export and plots.
#[derive(Parser)]
#[command(name = "vatt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config file.
    Run {
        /// Path to the scenario config.
        config: PathBuf,
        /// Output directory (overrides the config's `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip SVG plot emission.
        #[arg(long)]
        no_plots: bool,
        /// Zero out all noise amplitudes.
        #[arg(long)]
        zero_noise: bool,
        /// Override the noise phase seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a built-in scenario preset as TOML.
    Preset {
        /// Preset name: "paper_fig123" or "fixed_point".
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out,
            no_plots,
            zero_noise,
            seed,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if zero_noise {
                cfg.noise.zero();
            }
            if let Some(s) = seed {
                cfg.seed = Some(s);
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir));

            let result = run_scenario(&cfg)?;
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let csv_path = out_dir.join(&cfg.output.csv);
            emit_csv(&result.trace, &csv_path)?;

            let s = &result.summary;
            println!(
                "scenario: {} steps of h = {} s ({} s simulated)",
                s.steps,
                cfg.step,
                cfg.step * s.steps as f64
            );
            println!(
                "terminal principal angle: {:.6e} rad",
                s.terminal_principal_angle
            );
            println!(
                "terminal |omega error|:   {:.6e} rad/s",
                s.terminal_omega_err_norm
            );
            println!(
                "terminal |bias error|:    {:.6e} rad/s",
                s.terminal_beta_err_norm
            );
            println!("V: {:.6e} -> {:.6e}", s.v_initial, s.v_terminal);
            println!(
                "max ||Rhat^T Rhat - I||:  {:.2e}",
                s.max_orthonormality_defect
            );
            println!("max Newton iterations:    {}", s.max_newton_iterations);
            println!("wall time: {:.3} s", s.wall_time_s);
            println!("wrote {}", csv_path.display());
            if !no_plots {
                let paths = emit_plots(&result.trace, &out_dir)?;
                for p in &paths {
                    println!("wrote {}", p.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Preset { name, out } => {
            let cfg = ScenarioConfig::preset(&name).with_context(|| {
                format!(
                    "unknown preset \"{name}\"; available: {}",
                    ScenarioConfig::PRESET_NAMES.join(", ")
                )
            })?;
            let text = cfg.to_toml();
            match out {
                Some(path) => {
                    std::fs::write(&path, text)
                        .with_context(|| format!("writing {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            if selftest::run_all() {
                println!("selftest: all checks passed");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("selftest: FAILURES");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
