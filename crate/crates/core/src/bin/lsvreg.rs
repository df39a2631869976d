use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsvreg::cli::{self, ProblemFile, EXIT_INPUT};
use lsvreg::Config;

#[derive(Parser)]
#[command(name = "lsvreg", version, about = "Regularity checks for structured set-valued mappings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol_lsv: Option<f64>,
    #[arg(long, global = true)]
    tol_lp: Option<f64>,
    #[arg(long, global = true)]
    max_patterns: Option<usize>,
    /// Use the sampled sphere search even where exact enumeration applies.
    #[arg(long, global = true)]
    numeric_only: bool,
}

impl Flags {
    fn config(&self) -> Config {
        let mut c = Config::default();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(t) = self.tol_lsv {
            c.tol_lsv = t;
        }
        if let Some(t) = self.tol_lp {
            c.tol_lp = t;
        }
        if let Some(m) = self.max_patterns {
            c.max_patterns = m;
        }
        c.numeric_only |= self.numeric_only;
        c
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every query of a problem file and print the JSON report.
    Run {
        problem: Option<PathBuf>,
        /// Write the report here and print the summary to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run the built-in fixture corpus instead of a problem file.
        #[arg(long)]
        corpus: bool,
    },
    /// Run the fixture corpus and compare against the recorded expectations.
    Corpus {
        /// Directory of fixtures; defaults to the built-in set.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
}

fn corpus(dir: Option<PathBuf>, list: bool, cfg: &Config) -> i32 {
    let sources = match cli::corpus_sources(dir.as_deref()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if list {
        for (name, text) in &sources {
            match ProblemFile::from_json(text) {
                Ok(p) => println!("{:<32} {:<10} {}", name, p.reference.unwrap_or_default(), p.description),
                Err(e) => println!("{name:<32} unreadable: {e}"),
            }
        }
        return 0;
    }
    let entries = cli::run_corpus(&sources, cfg);
    for e in &entries {
        println!("{} {:<32} {}", if e.passed() { "pass" } else { "FAIL" }, e.name, e.reference.clone().unwrap_or_default());
        for m in &e.mismatches {
            println!("     {m}");
        }
    }
    let failed = entries.iter().filter(|e| !e.passed()).count();
    println!("{} fixtures, {} failed", entries.len(), failed);
    cli::corpus_exit_code(&entries)
}

fn run(problem: PathBuf, out: Option<PathBuf>, cfg: &Config) -> i32 {
    let file = match ProblemFile::load(&problem) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", problem.display());
            return EXIT_INPUT;
        }
    };
    let report = cli::run_problem(&file, cfg);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, report.to_json() + "\n") {
                eprintln!("error: {}: {e}", path.display());
                return EXIT_INPUT;
            }
            print!("{}", report.summary());
        }
        None => {
            println!("{}", report.to_json());
            eprint!("{}", report.summary());
        }
    }
    report.exit_code
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let cfg = args.flags.config();
    let code = match args.command {
        Command::Corpus { dir, list } => corpus(dir, list, &cfg),
        Command::Run { corpus: true, .. } => corpus(None, false, &cfg),
        Command::Run { problem: Some(p), out, .. } => run(p, out, &cfg),
        Command::Run { problem: None, .. } => {
            eprintln!("error: give a problem file or --corpus");
            EXIT_INPUT
        }
    };
    ExitCode::from(code as u8)
}
