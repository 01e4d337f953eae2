//! `sgk`: batch command-line front end for sgk-core.

mod analyze;
mod ctc;
mod eval;
mod featurize;
mod ground;
mod io;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};
use sgk_core::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "sgk", version, about = "Speech decoding, evaluation and toy audio-guided grounding")]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print a JSON report instead of the summary line.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute MFCC features from a 16 kHz mono PCM16 WAV file.
    Featurize(featurize::Args),
    /// CTC loss, prefix probability and decoding.
    #[command(subcommand)]
    Ctc(ctc::Command),
    /// Word error rate and perplexity.
    #[command(subcommand)]
    Eval(eval::Command),
    /// Representation analysis and self-supervised objectives.
    #[command(subcommand)]
    Analyze(analyze::Command),
    /// Synthetic grounding data, training and evaluation.
    #[command(subcommand)]
    Ground(ground::Command),
}

/// Settings shared by every subcommand.
pub struct Globals {
    pub seed: u64,
    pub quiet: bool,
}

/// Result of a command: summary lines plus the JSON fields behind them.
pub struct Report {
    lines: Vec<String>,
    fields: Map<String, Value>,
}

impl Report {
    pub fn new() -> Self {
        Self {
            lines: Vec::new(),
            fields: Map::new(),
        }
    }

    pub fn line(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    pub fn field(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    fn print(self, command: &str, json: bool) {
        if json {
            let mut obj = Map::new();
            obj.insert("version".into(), env!("CARGO_PKG_VERSION").into());
            obj.insert("command".into(), command.into());
            obj.extend(self.fields);
            println!("{}", Value::Object(obj));
        } else {
            for l in self.lines {
                println!("{l}");
            }
        }
    }
}

/// Fixed six-decimal rendering used on summary lines.
pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn run(cli: Cli) -> Result<(String, Report)> {
    let g = Globals {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Featurize(a) => Ok(("featurize".into(), featurize::run(&a, &g)?)),
        Command::Ctc(c) => ctc::run(c),
        Command::Eval(c) => eval::run(c),
        Command::Analyze(c) => analyze::run(c, &g),
        Command::Ground(c) => ground::run(c, &g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok((name, report)) => {
            report.print(&name, json);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sgk: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
