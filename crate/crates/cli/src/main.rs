mod commands;
mod input;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{ApproxArgs, ChainsArgs, ModuliArgs, Outcome, SeqArgs, SpaceCmd, VerifyArgs};

/// Epsilon-chain analysis of finite metric spaces. Every command prints one
/// JSON report on stdout.
#[derive(Debug, Parser)]
#[command(name = "chainscope", version)]
struct Cli {
    /// Indent the JSON report.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load or generate a space and summarize it.
    Space(SpaceCmd),
    /// Components, balls, chain witnesses and covering profiles.
    Chains(ChainsArgs),
    /// Quasi-Cauchy, Cauchy, pseudo-Cauchy and chain-component tests on a prefix.
    Seq(SeqArgs),
    /// Lipschitz-type moduli and continuity checks of a function.
    Moduli(ModuliArgs),
    /// Level-window approximation of a function, with optional bound checks.
    Approx(ApproxArgs),
    /// Run the built-in fixture claims and the randomized implication suite.
    Verify(VerifyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Space(_) => "space",
            Command::Chains(_) => "chains",
            Command::Seq(_) => "seq",
            Command::Moduli(_) => "moduli",
            Command::Approx(_) => "approx",
            Command::Verify(_) => "verify",
        }
    }

    fn run(&self) -> anyhow::Result<Outcome> {
        match self {
            Command::Space(a) => commands::space(a),
            Command::Chains(a) => commands::chains(a),
            Command::Seq(a) => commands::seq(a),
            Command::Moduli(a) => commands::moduli(a),
            Command::Approx(a) => commands::approx(a),
            Command::Verify(a) => commands::verify(a),
        }
    }
}

fn error_report(err: &anyhow::Error) -> Value {
    let mut report = json!({ "error": format!("{err:#}") });
    if let Some(chainscope::Error::MetricViolation { axiom, witness }) =
        err.chain().find_map(|c| c.downcast_ref::<chainscope::Error>())
    {
        report["metric_violation"] = json!({ "axiom": axiom, "witness": [witness.0, witness.1, witness.2] });
    }
    report
}

fn render(value: &Value, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("reports serialize")
    } else {
        serde_json::to_string(value).expect("reports serialize")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match cli.command.run() {
        Ok(outcome) => {
            let report = json!({
                "command": cli.command.name(),
                "inputs": outcome.inputs,
                "results": outcome.results,
                "timing": start.elapsed().as_secs_f64() * 1e3,
                "version": env!("CARGO_PKG_VERSION"),
            });
            let mut out = std::io::stdout().lock();
            if writeln!(out, "{}", render(&report, cli.pretty)).is_err() {
                return ExitCode::from(2);
            }
            if outcome.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(err) => {
            eprintln!("{}", render(&error_report(&err), cli.pretty));
            ExitCode::from(2)
        }
    }
}
