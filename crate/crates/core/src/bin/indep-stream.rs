use std::fs::File;
use std::io::{self, BufReader, Write};
use std::process::ExitCode;

use clap::Parser;

use indep_stream::cli::{generate_synthetic, parse_records, render, run, OutputFormat, RunConfig, SyntheticKind};
use indep_stream::stream::{Mode, TupleStream};
use indep_stream::{Error, ErrorClass, Result};

/// Estimate how far a stream of k-tuples is from independence.
#[derive(Parser, Debug)]
#[command(name = "indep-stream", version)]
struct Args {
    /// Input file with one tuple per line, or '-' for standard input.
    #[arg(long, conflicts_with = "generate")]
    input: Option<String>,
    /// Arity of the tuples.
    #[arg(long)]
    k: usize,
    /// Coordinates range over 1..=n.
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// exact, sketch or both.
    #[arg(long, default_value = "sketch")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// json or tsv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Estimator override KEY=VALUE; may be repeated.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Generate a synthetic stream: independent, diagonal or mixture:RHO.
    #[arg(long, requires = "m")]
    generate: Option<String>,
    /// Length of the generated stream.
    #[arg(long)]
    m: Option<u64>,
}

fn execute(args: Args) -> Result<String> {
    let mut cfg = RunConfig::new(args.k, args.n);
    cfg.epsilon = args.epsilon;
    cfg.delta = args.delta;
    cfg.mode = args.mode.parse::<Mode>()?;
    cfg.seed = args.seed;
    cfg.format = args.format.parse::<OutputFormat>()?;
    cfg.overrides = args.overrides;

    let stream: TupleStream<'static> = match (&args.generate, args.input.as_deref()) {
        (Some(kind), _) => {
            let kind = kind.parse::<SyntheticKind>()?;
            generate_synthetic(kind, cfg.k, cfg.n, args.m.unwrap_or(0), cfg.seed)?
        }
        (None, None) | (None, Some("-")) => parse_records(io::stdin().lock(), cfg.k, cfg.n)?,
        (None, Some(path)) => {
            let file = File::open(path).map_err(|e| {
                Error::MalformedInput {
                    record: 0,
                    message: format!("cannot open {path}: {e}"),
                }
            })?;
            parse_records(BufReader::new(file), cfg.k, cfg.n)?
        }
    };
    let report = run(&cfg, stream)?;
    render(&report, cfg.format)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(text) => {
            let mut out = io::stdout().lock();
            if writeln!(out, "{}", text.trim_end()).is_err() {
                return ExitCode::from(ErrorClass::Internal.exit_code() as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
