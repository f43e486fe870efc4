use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nls_lab::{Config, ExperimentRegistry, LabError, LabResult, Report};

#[derive(Parser, Debug)]
#[command(name = "nls-inflation-lab", version, about = "Norm-inflation experiments for the cubic NLS on the torus")]
struct Cli {
    /// Plain-text key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Write the result table as CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print a single-line key=value summary to standard error.
    #[arg(long, global = true)]
    summary: bool,
    /// Omit the timestamp comment from CSV output.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ternary tree counts and growth bound.
    Trees,
    /// Empirical constants of the multilinear estimates.
    VerifyLemmas,
    /// First-order lower bound along an N-sweep.
    Xi1Bound,
    /// Norm-inflation decomposition for one carrier frequency.
    Inflate,
    /// Scaling exponents of the first series term.
    Sweep,
    /// Series partial sums against a reference solver.
    OracleCompare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Trees => "trees",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Xi1Bound => "xi1-bound",
            Command::Inflate => "inflate",
            Command::Sweep => "sweep",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

fn load_config(cli: &Cli) -> LabResult<Config> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            Config::parse(&text)?
        }
        None => Config::default(),
    };
    for assignment in &cli.set {
        cfg.set(assignment)?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> LabResult<Report> {
    let cfg = load_config(cli)?;
    let report = ExperimentRegistry::default().get(cli.command.name())?.run(&cfg)?;
    for line in &report.lines {
        println!("{line}");
    }
    if let Some(path) = &cli.out {
        report.write_csv(path, !cli.no_timestamp)?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version go to stdout with success; usage errors exit 1.
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (code, summary) = match execute(&cli) {
        Ok(report) => {
            let line = report.summary_line();
            let code = match report.into_result() {
                Ok(_) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            };
            (code, line)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), format!("command={} status=error code={}", cli.command.name(), e.exit_code()))
        }
    };
    if cli.summary {
        eprintln!("{summary}");
    }
    ExitCode::from(code as u8)
}
