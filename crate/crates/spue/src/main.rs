use clap::{Args, Parser, Subcommand};
use spue::commands::{cmd_equilibrium, cmd_simulate, cmd_verify};
use spue::config::{Preset, RunConfig};
use spue::error::Error;
use spue::verify::VerifyOptions;
use std::path::PathBuf;
use std::process::ExitCode;

/// Departure-time-choice dynamics at a single bottleneck: equilibrium
/// analytics, day-to-day simulation, and property verification.
///
/// Exit codes: 0 all verdicts pass, 1 usage or configuration error,
/// 2 numerical verdict failure.
#[derive(Parser)]
#[command(name = "spue", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form equilibrium, LP solutions, and cross-check verdicts.
    Equilibrium(CommonArgs),
    /// Simulate the day-to-day dynamics with Lyapunov monitoring.
    Simulate(CommonArgs),
    /// Run the randomized property batteries.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (`key = value` with [sections]).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides config and SPUE_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides config).
    #[arg(long)]
    seed: Option<u64>,
    /// Payoff cell width in $ (overrides config).
    #[arg(long)]
    dx: Option<f64>,
    /// Time bin width in hours (overrides config).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated horizon in days (overrides config).
    #[arg(long)]
    days: Option<f64>,
    /// Initial-condition preset: uniform, bimodal, random.
    #[arg(long)]
    preset: Option<String>,
    /// Emit SVG plots.
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    /// Skip SVG plots.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Multiplier on the pass tolerances; values below 1 tighten the gate.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::from_file(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dx) = args.dx {
        cfg.dx = Some(dx);
    }
    if let Some(dt) = args.dt {
        cfg.dt = Some(dt);
    }
    if let Some(days) = args.days {
        cfg.days = days;
    }
    if let Some(name) = &args.preset {
        cfg.preset = match name.as_str() {
            "uniform" => Preset::Uniform,
            "bimodal" => Preset::Bimodal {
                centers: (0.2, 0.55),
            },
            "random" => Preset::Random,
            other => {
                return Err(Error::Config(format!(
                    "--preset {other:?} (from_departures is configured via the file's `csv` key)"
                )))
            }
        };
    }
    if args.no_svg {
        cfg.svg = false;
    } else if args.svg {
        cfg.svg = true;
    }
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        // A broken descent invariant is a numerical verdict, not usage.
        Error::DescentViolation { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn remediation(err: &Error) -> Option<&'static str> {
    match err {
        Error::CflViolation { .. } => {
            Some("lower [solver] cfl_factor or refine dx; the day step must satisfy dr <= dx / max(u, w)")
        }
        Error::GridTooShort { .. } => {
            Some("widen the payoff grid (lower [grid] x_min) or the time window ([grid] t_pad)")
        }
        Error::Infeasible { .. } => {
            Some("the grid cannot hold the demand at jam density; widen it or reduce demand_total")
        }
        Error::MassMismatch { .. } => {
            Some("refine dx/dt or widen the grids so the transforms stop clipping mass")
        }
        _ => None,
    }
}

fn main() -> ExitCode {
    // clap's own usage failure would exit 2; remap to the documented 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successful exits, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Equilibrium(args) => load_config(args).and_then(|cfg| {
            cmd_equilibrium(&cfg).map(|out| {
                print!("{}", out.report);
                out.passed()
            })
        }),
        Command::Simulate(args) => load_config(args).and_then(|cfg| {
            cmd_simulate(&cfg).map(|out| {
                print!("{}", out.report);
                out.passed()
            })
        }),
        Command::Verify(args) => load_config(&args.common).and_then(|cfg| {
            let opts = VerifyOptions {
                seed: cfg.seed,
                tol_scale: args.tol_scale,
                ..Default::default()
            };
            cmd_verify(&cfg, &opts).map(|out| {
                print!("{}", out.report);
                out.passed()
            })
        }),
    };

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(hint) = remediation(&err) {
                eprintln!("hint: {hint}");
            }
            exit_code_for(&err)
        }
    }
}
