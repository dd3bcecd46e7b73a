use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cforge::audit::audit_exponents;
use cforge::fieldlab::snapshot::read_immersion;
use cforge::stage::Mode;
use cforge::symcore::n_star;
use cforge::ImmersionField;
use cforge_cli::config::RunConfig;
use cforge_cli::mesh::{to_obj, Projection};
use cforge_cli::run::cmd_run;
use cforge_cli::verify::{run_suite, Suite};
use cforge_cli::{CliError, EXIT_OK};

/// Convex integration on flat tori.
///
/// Exit codes: 0 ok, 2 usage/config/input, 3 precondition, 4 numeric
/// failure (including failed audits and verify suites), 5 strict-mode
/// violation.
#[derive(Parser)]
#[command(name = "cforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured scenario and write traces, snapshots and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides seeds.master.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Evaluate the exponent inequalities for (n, eps, N*).
    Audit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Defaults to n(n+1)/2.
        #[arg(long)]
        n_star: Option<usize>,
    },
    /// Write an OBJ mesh of an n = 2 immersion snapshot.
    ExportMesh {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long, value_enum, default_value = "first-3-coords")]
        projection: Projection,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite (fast or full).
    Verify {
        #[arg(long, default_value = "fast")]
        suite: String,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "strict" => Ok(Mode::Strict),
        "relaxed" => Ok(Mode::Relaxed),
        _ => Err(format!("unknown mode `{s}` (expected strict or relaxed)")),
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out, seed, mode } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            if let Some(s) = seed {
                cfg.seeds.master = s;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            let res = cmd_run(&cfg)?;
            let rep = &res.report;
            println!("deficits {:?}", rep.deficits_g);
            if let Some(t) = &rep.truncated {
                println!("truncated: {t}");
            }
            println!("wrote {}", res.out_dir.display());
            Ok(())
        }
        Command::Audit { n, eps, n_star: ns } => {
            let rep = audit_exponents(n, eps, ns.unwrap_or_else(|| n_star(n)))?;
            println!("{}", rep.to_table());
            print!("{}", rep.to_json_lines());
            if rep.passed() {
                Ok(())
            } else {
                Err(CliError::Failed(format!("audit failed: {}", rep.binding().id)))
            }
        }
        Command::ExportMesh { snapshot, projection, out } => {
            let u: ImmersionField = read_immersion(&snapshot).map_err(|e| e.context(format!("{}", snapshot.display())))?;
            let obj = to_obj(&u, projection)?;
            std::fs::write(&out, obj).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            Ok(())
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let results = run_suite(suite, &mut |c| println!("{}", c.line()));
            let failed = results.iter().filter(|c| !c.pass).count();
            println!("{} checks, {} failed", results.len(), failed);
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Failed(format!("{failed} verify checks failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
