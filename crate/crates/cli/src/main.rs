//! `divlab`: command-line driver for the exponent, number-theory, evolution
//! and slab verification suites.

mod commands;
mod config;
mod failure;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};
use failure::Failure;
use report::Report;

#[derive(Parser, Debug)]
#[command(name = "divlab", version, about = "Exponent curves and finite-scale checks for Schrodinger divergence counterexamples")]
struct Cli {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    m: Option<u32>,
    #[arg(long = "alpha-min", global = true)]
    alpha_min: Option<String>,
    #[arg(long = "alpha-max", global = true)]
    alpha_max: Option<String>,
    #[arg(long, global = true)]
    step: Option<String>,
    /// Scales: `2^10..2^16` or a comma-separated list.
    #[arg(long = "R", global = true)]
    r: Option<String>,
    #[arg(long = "bump-c", global = true)]
    bump_c: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit the lower-bound curve s(alpha) as CSV and SVG.
    Exponents,
    /// Run a verification suite.
    Verify {
        /// all, exponents, optimizer, gauss, counting, evolution, slabs or ubiquity.
        #[arg(default_value = "all")]
        suite: String,
    },
    /// Cartesian parameter sweep written as a resumable CSV.
    Sweep {
        /// slope, dim or omega.
        component: String,
    },
}

fn build_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let flags: [(&str, Option<String>); 10] = [
        ("n", cli.n.map(|v| v.to_string())),
        ("m", cli.m.map(|v| v.to_string())),
        ("alpha_min", cli.alpha_min.clone()),
        ("alpha_max", cli.alpha_max.clone()),
        ("step", cli.step.clone()),
        ("R", cli.r.clone()),
        ("bump_c", cli.bump_c.clone()),
        ("seed", cli.seed.clone()),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        ("format", cli.format.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    if cfg.n < 2 {
        return Err(Failure::Config("n must be at least 2".into()));
    }
    if !(cfg.bump_c > 0.0 && cfg.bump_c <= 0.1) {
        return Err(Failure::Config(format!("bump_c must lie in (0, 1/10], got {}", cfg.bump_c)));
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let cfg = build_config(cli)?;
    let start = Instant::now();
    let (name, mut report) = match &cli.command {
        Command::Exponents => ("exponents".to_string(), Report::new("exponents", &cfg)),
        Command::Verify { suite } => (format!("verify_{suite}"), Report::new(format!("verify {suite}"), &cfg)),
        Command::Sweep { component } => (format!("sweep_{component}"), Report::new(format!("sweep {component}"), &cfg)),
    };
    match &cli.command {
        Command::Exponents => {
            commands::cmd_exponents(&cfg, &mut report)?;
        }
        Command::Verify { suite } => commands::cmd_verify(&cfg, suite, &mut report)?,
        Command::Sweep { component } => {
            commands::cmd_sweep(&cfg, component, &mut report)?;
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    if cfg.wants(Format::Json) {
        std::fs::create_dir_all(&cfg.out)?;
        std::fs::write(cfg.out.join(format!("{name}.report.json")), report.to_json()? + "\n")?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.to_text());
            if report.failed() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("divlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
