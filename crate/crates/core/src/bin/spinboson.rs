// Copyright 2026 The spinboson-rwa Contributors
// SPDX-License-Identifier: Apache-2.0

//! `spinboson`: run, validate and list scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinboson_rwa::error::exit;
use spinboson_rwa::output::{render_all, write_all};
use spinboson_rwa::pipeline::run_with_threads;
use spinboson_rwa::scenario::{preset, Format, Scenario, PRESETS};
use spinboson_rwa::Error;

#[derive(Parser)]
#[command(name = "spinboson", version, about = "Exact qubit–boson-bath dynamics (RWA) from declarative scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its tables, reports and manifest.
    Run(RunArgs),
    /// Check a scenario without running any dynamics.
    Validate(Source),
    /// List the built-in scenarios, or print one of them.
    Presets {
        /// Print the TOML of this preset.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name (see `spinboson presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long, env = "SPINBOSON_OUT_DIR", default_value = "spinboson-out")]
    out: PathBuf,
    /// Table format; overrides `[output] format`.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Worker threads (all cores when omitted). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Assert that no random numbers are used. Nothing in the tool draws
    /// random numbers, so this flag has no effect.
    #[arg(long)]
    seedless: bool,
}

fn load(source: &Source) -> Result<Scenario, Error> {
    match (&source.config, &source.preset) {
        (Some(path), _) => Scenario::from_path(path),
        (None, Some(name)) => preset(name).map(|p| p.scenario()).ok_or_else(|| Error::InvalidInput {
            field: "preset".into(),
            reason: format!("unknown preset `{name}`"),
        }),
        (None, None) => unreachable!("clap enforces one source"),
    }
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let mut scenario = load(&args.source)?;
    if let Some(f) = &args.format {
        scenario.output.format = f.parse::<Format>()?;
    }
    scenario.resolve()?;
    let out = run_with_threads(&scenario, args.threads)?;
    let files = render_all(&out.tables, &out.reports, scenario.output.format);
    let written = write_all(&args.out, &files, out.manifest())?;
    println!("scenario {} ({})", scenario.name, out.config_hash);
    if let Some(h) = out.health() {
        println!(
            "truncation: M = {}, captured Gibbs weight {:.9}",
            h.max_excitations, h.captured_weight
        );
    }
    if let Some(c) = out.convergence() {
        println!(
            "self-convergence M={} vs M={}: |d alpha| {:.3e}, |d xi| {:.3e}, |d eta| {:.3e}",
            c.max_excitations, c.compared_with, c.max_delta_alpha, c.max_delta_xi, c.max_delta_eta
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn validate(source: &Source) -> Result<i32, Error> {
    let scenario = load(source)?;
    let report = scenario.validate()?;
    if let Some(h) = report.health {
        println!(
            "truncation: M = {}, captured Gibbs weight {:.9} (required {})",
            h.max_excitations, h.captured_weight, h.required_weight
        );
    }
    if report.warnings.is_empty() {
        println!("{}: ok", scenario.name);
        return Ok(exit::SUCCESS);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(exit::TRUNCATION)
}

fn presets(show: Option<&str>) -> Result<(), Error> {
    match show {
        Some(name) => {
            let p = preset(name).ok_or_else(|| Error::InvalidInput {
                field: "preset".into(),
                reason: format!("unknown preset `{name}`"),
            })?;
            print!("{}", p.toml);
        }
        None => {
            let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            for p in PRESETS {
                println!("{:width$}  {}", p.name, p.summary);
            }
        }
    }
    Ok(())
}

fn report(e: &Error, context: Option<&Path>) -> ExitCode {
    match context {
        Some(path) => eprintln!("error ({}): {e}", path.display()),
        None => eprintln!("error: {e}"),
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => match run(args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => report(&e, args.source.config.as_deref()),
        },
        Command::Validate(source) => match validate(source) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => report(&e, source.config.as_deref()),
        },
        Command::Presets { show } => match presets(show.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => report(&e, None),
        },
    }
}
