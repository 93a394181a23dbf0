use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "unknown time unit {unit:?} for parameter `{field}` (expected \"1/min\" or \"1/day\")"
    )]
    UnknownUnit { field: String, unit: String },

    #[error("parameter `{field}` has no time unit; only k1, k2, k3 and k5 are rates")]
    UnitOnNonRate { field: String },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    #[error("unknown parameter field {0:?} (expected one of e0, k1..k7, c_half)")]
    UnknownField(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative dose rate {0} µg/min")]
    NegativeDose(f64),

    #[error("step size {dt} min must be finite and non-negative")]
    InvalidStep { dt: f64 },

    #[error("step size {dt} min violates the stability bound dt < {bound} min")]
    UnstableStep { dt: f64, bound: f64 },

    #[error("time {time} min is not on the {dt} min step grid")]
    OffGrid { time: f64, dt: f64 },

    #[error("invalid dose schedule: {0}")]
    InvalidSchedule(String),

    #[error("time must be non-negative, got {0} min")]
    NegativeTime(f64),

    #[error(
        "equilibrium analysis assumes acute tolerance is disabled (c_half = inf), got c_half = {0}"
    )]
    AcuteToleranceEnabled(f64),

    #[error("E_drug equals E0, so the drug had no initial effect and k4 cannot be estimated")]
    NoDrugEffect,

    #[error("unknown preset {name:?}; valid names: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("invalid weekly plan: {0}")]
    InvalidPlan(String),

    #[error("invalid objective spec: {0}")]
    InvalidObjective(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("sample instant {time} min is not a recorded point of the trajectory")]
    SampleOffGrid { time: f64 },

    #[error("invalid observed series: {0}")]
    InvalidSeries(String),

    #[error("{}:{line}: {message}", path.display())]
    Series {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("observation at {time} min lies outside the simulated horizon [0, {horizon}] min")]
    ObservationOutsideHorizon { time: f64, horizon: f64 },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input
    /// or configuration).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::UnstableStep { .. })
    }
}
