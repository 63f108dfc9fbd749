//! Scenario-driven batch front end for the `medfret` library.

pub mod engine;
pub mod output;
pub mod presets;
pub mod scenario;

use std::fmt;

pub use engine::{Overrides, Plan};
pub use output::{run, summary, write_csv, RunOutput};
pub use scenario::{Source, Violation};

/// Failure classes of the command-line tool, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    Validation(Vec<Violation>),
    Convergence(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(v) => {
                writeln!(f, "scenario is invalid:")?;
                for item in v {
                    writeln!(f, "  {item}")?;
                }
                Ok(())
            }
            CliError::Convergence(m) => write!(f, "convergence failure: {m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

/// Parses and validates scenario text.
pub fn plan(text: &str, overrides: Overrides) -> Result<Plan, CliError> {
    let source = Source::parse(text).map_err(CliError::Validation)?;
    Plan::build(&source, overrides).map_err(CliError::Validation)
}

/// Runs a validated plan, mapping numerical failures to their error class.
pub fn execute(plan: &Plan) -> Result<RunOutput, CliError> {
    run(plan).map_err(|e| {
        if e.is_convergence() {
            CliError::Convergence(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    })
}
