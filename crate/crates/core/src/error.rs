use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used to pick the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Physics,
    Numeric,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Physics => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonance: {0}")]
    Resonance(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("ambiguous LPOL phase: sites {sites:?} tie for the maximum shift")]
    Ambiguity { sites: Vec<usize> },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("step size underflow at t = {t:e} (h = {h:e}) after {steps} steps")]
    Stiffness { t: f64, h: f64, steps: usize },

    #[error("quadrature did not converge on [{a}, {b}]: {trace}")]
    Quadrature { a: f64, b: f64, trace: String },

    #[error("root/minimum search failed: {0}")]
    Bracket(String),

    #[error("minimum tracking lost the focus-well branch after a = {last_a}")]
    Tracking { last_a: f64 },

    #[error("moving-time integrand diverges: {0}")]
    Divergence(String),

    #[error("under-resolved sampling: {0}")]
    Unresolved(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("step `{step}` failed: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn in_step(step: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Step {
            step,
            source: Box::new(e),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config { .. } => ErrorClass::Config,
            Error::Domain(_)
            | Error::Resonance(_)
            | Error::Geometry(_)
            | Error::Ambiguity { .. }
            | Error::Infeasible(_)
            | Error::Tracking { .. } => ErrorClass::Physics,
            Error::Stiffness { .. }
            | Error::Quadrature { .. }
            | Error::Bracket(_)
            | Error::Divergence(_)
            | Error::Unresolved(_) => ErrorClass::Numeric,
            Error::Step { source, .. } => source.class(),
            Error::Io { .. } => ErrorClass::Io,
        }
    }
}
