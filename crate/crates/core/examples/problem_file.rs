//! Load a problem file from JSON, run its queries and print the report.
//!
//! `cargo run --example problem_file -- path/to/problem.json`; without an argument
//! the first built-in fixture is used.

use lsvreg::cli::{run_problem, ProblemFile, CORPUS};
use lsvreg::Config;

fn main() -> lsvreg::Result<()> {
    let file = match std::env::args().nth(1) {
        Some(p) => ProblemFile::load(p.as_ref())?,
        None => ProblemFile::from_json(CORPUS[0].1)?,
    };
    let report = run_problem(&file, &Config::default());
    println!("{}", report.to_json());
    eprint!("{}", report.summary());
    std::process::exit(report.exit_code);
}
