use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use medfret_cli::{presets, CliError, Overrides};

#[derive(Parser)]
#[command(name = "medfret", version, about = "Medium-assisted energy-transfer and decay kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write a CSV file.
    Run {
        /// Scenario file (omit when using --preset).
        scenario: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Run a built-in scenario instead of a file.
        #[arg(long)]
        preset: Option<String>,
        /// Override the quadrature relative tolerance.
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a scenario without running it.
    Validate { scenario: PathBuf },
    /// List the built-in scenarios.
    ListPresets,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Other(format!("cannot read {}: {e}", path.display())))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            if !matches!(e, CliError::Validation(_)) {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<12} {}", p.name, p.summary);
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let plan = medfret_cli::plan(&read(&scenario)?, Overrides::default())?;
            println!(
                "ok: {} ({} curves, {} sweep points); no violations",
                plan.name,
                plan.cases.len(),
                plan.sweep.len()
            );
            Ok(())
        }
        Command::Run { scenario, output, preset, rel_tol, threads } => {
            let text = match (scenario, preset) {
                (Some(path), None) => read(&path)?,
                (None, Some(name)) => presets::find(&name)
                    .ok_or_else(|| CliError::Other(format!("unknown preset '{name}' (see list-presets)")))?
                    .text
                    .to_string(),
                _ => return Err(CliError::Other("give either a scenario file or --preset NAME".into())),
            };
            if let Some(t) = rel_tol {
                if !(t > 0.0 && t < 1.0) {
                    return Err(CliError::Other(format!("--rel-tol must lie in (0, 1), got {t}")));
                }
            }
            let plan = medfret_cli::plan(&text, Overrides { rel_tol })?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(n);
            }
            let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
            let out = pool.install(|| medfret_cli::execute(&plan))?;
            let file = File::create(&output).map_err(|e| CliError::Other(format!("cannot create {}: {e}", output.display())))?;
            medfret_cli::write_csv(&plan, &out, BufWriter::new(file)).map_err(|e| CliError::Other(e.to_string()))?;
            print!("{}", medfret_cli::summary(&plan, &out));
            Ok(())
        }
    }
}
