use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ravel_cli::config::{Format, RunConfig, CONFIG_ENV};
use ravel_cli::{cmd_classify, cmd_enumerate, cmd_render, cmd_verify, parse_input, CliError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ravel", version, about = "Classify vertex closures of Montesinos and algebraic tangles")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override it.
    #[arg(long, env = CONFIG_ENV, global = true)]
    config: Option<PathBuf>,
    /// Flip attempts per rewrite search.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Largest constituent, in crossings, the bracket will evaluate.
    #[arg(long, global = true)]
    crossing_budget: Option<usize>,
    /// Settle not-ravel verdicts with the oracle where it can.
    #[arg(long, global = true)]
    refine: bool,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Verdict and witness for a presentation, e.g. `M[[2,2],[0,1,2]] v(2,2,1)`.
    Classify { input: String },
    /// Verdict checked against the invariants and the planarity search.
    Verify { input: String },
    /// Every presentation and insertion within bounds, one JSON line each.
    Enumerate {
        #[arg(long)]
        max_summands: Option<usize>,
        /// Crossings per summand.
        #[arg(long)]
        max_crossings: Option<usize>,
        #[arg(long)]
        max_vertices: Option<usize>,
        /// Index of the first record; the cursor of an earlier run resumes it.
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        limit: Option<u64>,
    },
    /// SVG drawing of the closure.
    Render { input: String, path: Option<PathBuf> },
}

fn config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) if !p.as_os_str().is_empty() => RunConfig::load(p)?,
        _ => RunConfig::default(),
    };
    if let Some(b) = c.budget {
        cfg.search_budget = b;
    }
    if let Some(b) = c.crossing_budget {
        cfg.crossing_budget = b;
    }
    cfg.refine |= c.refine;
    if let Some(f) = c.format {
        cfg.format = f;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(cfg: &RunConfig, value: &T, summary: String) -> Result<(), CliError> {
    let mut w = sink(cfg)?;
    match cfg.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(w)?;
        }
        Format::Text => w.write_all(summary.as_bytes())?,
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut cfg = config(&cli.common)?;
    match cli.command {
        Command::Classify { input } => {
            let r = cmd_classify(&parse_input(&input)?, &cfg)?;
            emit(&cfg, &r, r.summary())?;
            Ok(0)
        }
        Command::Verify { input } => {
            let r = cmd_verify(&parse_input(&input)?, &cfg)?;
            emit(&cfg, &r, r.summary())?;
            Ok(if r.agreement.is_disagreement() { 1 } else { 0 })
        }
        Command::Enumerate { max_summands, max_crossings, max_vertices, start, limit } => {
            let b = &mut cfg.bounds;
            b.max_summands = max_summands.unwrap_or(b.max_summands);
            b.max_crossings = max_crossings.unwrap_or(b.max_crossings);
            b.max_vertices = max_vertices.unwrap_or(b.max_vertices);
            let mut w = sink(&cfg)?;
            let t = cmd_enumerate(&cfg, start, limit, &mut w)?;
            eprintln!(
                "{} records: {} agree, {} inconclusive, {} disagree; cursor {}",
                t.records, t.agree, t.inconclusive, t.disagree, t.cursor
            );
            Ok(if t.disagree > 0 { 1 } else { 0 })
        }
        Command::Render { input, path } => {
            let path = path
                .or(cfg.out.clone())
                .ok_or_else(|| CliError::Config("render needs an output path".into()))?;
            cmd_render(&parse_input(&input)?, &path)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
