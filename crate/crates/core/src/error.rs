use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: row {row}, column `{column}`: cannot parse `{text}` as a number")]
    BadNumber {
        path: PathBuf,
        row: usize,
        column: String,
        text: String,
    },

    #[error("{path}: row {row}: non-uniform sample spacing (expected dt = {expected}, got {got})")]
    NonUniformSpacing {
        path: PathBuf,
        row: usize,
        expected: f64,
        got: f64,
    },

    #[error("{path}: line {line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("parameter `{name}` = {value} violates its physical bound ({rule})")]
    PhysicalBound {
        name: String,
        value: f64,
        rule: &'static str,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid window [{t_start}, {t_end}]: {reason}")]
    InvalidWindow {
        t_start: f64,
        t_end: f64,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no equilibrium for the {component}: {reason}")]
    NoEquilibrium {
        component: &'static str,
        reason: String,
    },

    #[error("simulation diverged at t = {t} s (state norm {norm:e})")]
    Diverged { t: f64, norm: f64 },

    #[error("simulation with {param} perturbed {sign} failed: {source}")]
    Perturbation {
        param: String,
        sign: char,
        #[source]
        source: Box<Error>,
    },

    #[error("all sensitivities are zero over the window (degenerate window)")]
    DegenerateSensitivity,

    #[error("objective returned a non-finite value {value} at generation {generation}")]
    NonFiniteObjective { value: f64, generation: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}
