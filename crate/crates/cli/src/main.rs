//! `eigopt`: one-shot solves and experiment runners for matrix optimization
//! under linear eigenvalue constraints.
//!
//! Exit codes: 0 success, 2 parse/io error, 3 unbounded, 4 infeasible,
//! 5 unsupported constraint, 1 other failure.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eigopt::Error;

#[derive(Parser)]
#[command(name = "eigopt", version, about = "Eigenvalue-constrained matrix optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Globally minimize <C, X> over an eigenvalue constraint set.
    SolveLinear(commands::SolveLinearArgs),
    /// Project a matrix onto an eigenvalue constraint set.
    Project(commands::ProjectArgs),
    /// Projected gradient descent on 0.5*|X - T|_F^2 over a constraint set.
    Pgm(commands::PgmArgs),
    /// Frank-Wolfe on 0.5*|X - T|_F^2 over a convex constraint set.
    Fw(commands::FwArgs),
    /// Preconditioner design experiment: minimize 0.5*|A X - I|_F^2.
    Precondition(commands::PrecondArgs),
    /// Quadratic-equation system experiment (Newton / relaxation pipelines).
    Quadsys(commands::QuadsysArgs),
    /// Report whether the row-monotonicity convexity certificate holds.
    CheckConvexity(commands::CheckConvexityArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::SolveLinear(args) => commands::solve_linear(args),
        Command::Project(args) => commands::project(args),
        Command::Pgm(args) => commands::pgm(args),
        Command::Fw(args) => commands::fw(args),
        Command::Precondition(args) => commands::precondition(args),
        Command::Quadsys(args) => commands::quadsys(args),
        Command::CheckConvexity(args) => commands::check_convexity(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 2,
        Error::Unbounded => 3,
        Error::Infeasible(_) => 4,
        Error::UnsupportedConstraint(_) => 5,
        _ => 1,
    }
}

/// Exit code for unbounded linear programs, documented in the help text.
pub(crate) const EXIT_UNBOUNDED: u8 = 3;
pub(crate) const EXIT_INFEASIBLE: u8 = 4;
