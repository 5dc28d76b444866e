use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) is not strictly inside rectangle {rect}")]
    PointNotInterior { x: f64, y: f64, rect: String },

    #[error("point ({x}, {y}) lies on an existing split line")]
    OnSplitLine { x: f64, y: f64 },

    #[error("duplicate {axis} coordinate {value} in input points")]
    DuplicateCoordinate { axis: char, value: f64 },

    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]")]
    InvalidRect {
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
    },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error(
        "step {step} too large: local error estimate {estimate:e} exceeds {budget:e} at t = {t}"
    )]
    StepTooLarge {
        step: f64,
        t: f64,
        estimate: f64,
        budget: f64,
    },

    #[error("constant identity violated: relative error {0:e}")]
    ConstantIdentity(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed cover text at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            domain: "(0, 1)",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            domain: "(0, inf)",
        })
    }
}
