//! Batch front end: `maslov <scenario> --config <path> [--out <dir>]
//! [--verbose]`. Exit codes: 0 success, 2 numerical-quality failure,
//! 3 configuration or build failure.

mod config;
mod record;
mod scenario;

use clap::{Parser, Subcommand};
use config::{RunConfig, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "maslov",
    version,
    about = "Maslov indices, corank-one singularities and transverse Liapunov exponents of integrable systems"
)]
struct Cli {
    #[command(subcommand)]
    scenario: ScenarioCommand,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Maslov index of a configured closed curve.
    Index(CommonArgs),
    /// Refine and classify singularity seeds.
    Singularities(CommonArgs),
    /// Transverse Liapunov exponents at a configured point.
    Liapunov(CommonArgs),
    /// Run the built-in reproduction suite.
    Verify(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the JSON record and trace files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Echo the full table including per-row verify detail.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (wanted, args) = match &cli.scenario {
        ScenarioCommand::Index(a) => (Scenario::Index, a),
        ScenarioCommand::Singularities(a) => (Scenario::Singularities, a),
        ScenarioCommand::Liapunov(a) => (Scenario::Liapunov, a),
        ScenarioCommand::Verify(a) => (Scenario::Verify, a),
    };
    match run(wanted, args) {
        Ok(code) => code,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn run(wanted: Scenario, args: &CommonArgs) -> Result<ExitCode, (u8, String)> {
    let cfg = RunConfig::load(&args.config).map_err(|e| (3, e.to_string()))?;
    let configured = cfg.scenario().map_err(|e| (3, e.to_string()))?;
    if configured != wanted {
        return Err((
            3,
            format!(
                "config defines scenario `{}` but the `{}` subcommand was invoked",
                configured.name(),
                wanted.name()
            ),
        ));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| (3, format!("cannot create output directory: {e}")))?;

    let output = scenario::run(&cfg, wanted, &args.out)
        .map_err(|f| (f.exit_code as u8, f.message))?;

    scenario::write_json(&output.json_path, &output.record)
        .map_err(|e| (3, e.to_string()))?;

    if args.verbose || output.record.verify.is_none() {
        print!("{}", output.record.render_table());
    } else if let Some(v) = &output.record.verify {
        // Compact verify output: one line per criterion.
        for c in &v.criteria {
            println!(
                "  [{}] criterion {:>2}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.criterion,
                c.title
            );
        }
        println!("  all_pass {}", v.all_pass);
    }
    println!("  record written to {}", output.json_path.display());

    if output.quality_failure {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
