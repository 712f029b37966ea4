use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curvflow::Error;

mod config;
mod output;
mod suites;

use config::{Flags, Resolver};
use output::{OutDir, Outcome};

#[derive(Parser)]
#[command(name = "curvflow", version, about = "Curvature-adaptedness checks along mean curvature flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural identities and the adaptedness report on one immersion
    VerifyIdentities(Flags),
    /// Parallel-hypersurface reduction of an isoparametric example
    Parallel(Flags),
    /// Explicit PDE flow with evolution-equation residuals
    PdeFlow(Flags),
    /// Maximum-principle bound on random and constant data
    MaxPrinciple(Flags),
    /// Gap monitor along a flow
    Monitor(Flags),
    /// List the built-in examples
    Catalog(Flags),
    /// Run several suites into one manifest
    Report(Flags),
}

fn run(name: &str, flags: Flags) -> curvflow::Result<Outcome> {
    let mut cfg = Resolver::new(flags.clone())?;
    let dir = OutDir::create(&cfg.out_dir())?;
    let mut out = match name {
        "catalog" => suites::catalog_listing(&dir)?,
        "report" => {
            let list = cfg.value("suites", cfg.flags().suites.clone(), suites::ALL_SUITES.join(","))?;
            let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if let Some(bad) = names.iter().find(|s| !suites::ALL_SUITES.contains(s)) {
                return Err(Error::Config(format!("unknown suite '{bad}' (known: {})", suites::ALL_SUITES.join(", "))));
            }
            let mut all = Outcome::default();
            for s in names {
                let sub = dir.sub(s)?;
                let mut own = Resolver::new(flags.clone())?;
                let o = suites::run_suite(s, &mut own, &sub)?;
                cfg.absorb(s, &own);
                all.merge(s, o);
            }
            all
        }
        other => suites::run_suite(other, &mut cfg, &dir)?,
    };
    dir.finish(name, &cfg, &mut out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (name, flags) = match cli.command {
        Command::VerifyIdentities(f) => ("verify-identities", f),
        Command::Parallel(f) => ("parallel", f),
        Command::PdeFlow(f) => ("pde-flow", f),
        Command::MaxPrinciple(f) => ("max-principle", f),
        Command::Monitor(f) => ("monitor", f),
        Command::Catalog(f) => ("catalog", f),
        Command::Report(f) => ("report", f),
    };
    match run(name, flags) {
        Ok(out) => {
            // A closed pipe (e.g. `| head`) is not an error of the run.
            let mut stdout = std::io::stdout().lock();
            for l in &out.summary {
                let _ = writeln!(stdout, "{l}");
            }
            for f in &out.failures {
                eprintln!("FAIL {}: {}", f.tag, f.message);
            }
            let ok = out.failures.is_empty();
            let _ = writeln!(stdout, "verdict: {}", if ok { "PASS" } else { "FAIL" });
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Input(_) | Error::DimensionMismatch { .. } | Error::Stability { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
