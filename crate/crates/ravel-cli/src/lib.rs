//! Command implementations behind the `ravel` binary.

pub mod config;
pub mod enumerate;
pub mod render;
pub mod report;

use std::io::Write;
use std::path::Path;

use ravel::classify::{
    algebraic_closure_diagram, classify_algebraic_closure, classify_closure, classify_insertion_closure,
    closure_diagram, Classification, ClassifyError, ClassifyOptions,
};
use ravel::diagram::{Diagram, DiagramError};
use ravel::dsl::{parse, Input, ParseError};
use ravel::insertion::{apply_insertion, normalize, InsertionError};
use ravel::oracle::examine;
use thiserror::Error;

use config::RunConfig;
use enumerate::Totals;
use report::{condition_reports, ClassifyReport, VerifyReport, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Insertion(#[from] InsertionError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl CliError {
    /// Bad input or configuration is 2. Disagreement with the oracle, which
    /// is not an error, is reported as 1 by the caller.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn parse_input(text: &str) -> Result<Input, CliError> {
    Ok(parse(text)?)
}

fn classification(input: &Input, cfg: &RunConfig) -> Result<Classification, CliError> {
    Ok(match input {
        Input::Montesinos { presentation, insertion: None } => classify_closure(presentation),
        Input::Montesinos { presentation, insertion: Some(v) } => {
            let opts = ClassifyOptions { refine: cfg.refine, oracle: cfg.oracle() };
            classify_insertion_closure(presentation, v, &opts)?
        }
        Input::Algebraic(e) => classify_algebraic_closure(e),
    })
}

/// The closed diagram a verdict for `input` is about.
pub fn witness_diagram(input: &Input) -> Result<Diagram, CliError> {
    Ok(match input {
        Input::Montesinos { presentation, insertion: None } => closure_diagram(presentation),
        Input::Montesinos { presentation, insertion: Some(v) } => normalize(&apply_insertion(presentation, v)?).closure(),
        Input::Algebraic(e) => algebraic_closure_diagram(e),
    })
}

pub fn cmd_classify(input: &Input, cfg: &RunConfig) -> Result<ClassifyReport, CliError> {
    let c = classification(input, cfg)?;
    let conditions = c.witness.exceptional.as_ref().map(condition_reports).unwrap_or_default();
    Ok(ClassifyReport {
        schema: SCHEMA_VERSION,
        input: input.to_string(),
        verdict: c.verdict,
        witness: c.witness,
        conditions,
    })
}

pub fn cmd_verify(input: &Input, cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let c = classification(input, cfg)?;
    let oracle = examine(&witness_diagram(input)?, &cfg.oracle())?;
    Ok(VerifyReport::new(input.to_string(), c.verdict, &oracle))
}

pub fn cmd_enumerate<W: Write>(cfg: &RunConfig, start: u64, limit: Option<u64>, out: &mut W) -> Result<Totals, CliError> {
    enumerate::enumerate(cfg, start, limit, out)
}

pub fn cmd_render(input: &Input, path: &Path) -> Result<(), CliError> {
    let Input::Montesinos { presentation, insertion } = input else {
        return Err(CliError::Unsupported("only Montesinos presentations can be drawn".into()));
    };
    let svg = render::render_svg(presentation, insertion.as_ref())?;
    std::fs::write(path, svg).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
