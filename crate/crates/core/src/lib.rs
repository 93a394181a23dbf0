//! Drug tolerance kinetics and dosing-schedule optimization.
//!
//! A four-state model (plasma concentration, a slow "memory" concentration,
//! an idealized effect and a drifting baseline) captures both acute
//! tolerance, through a saturating divisor on the effect, and long-term
//! tolerance with withdrawal, through the baseline. Either mechanism can be
//! switched off exactly.
//!
//! - [`kinetics`]: parameters, state, derivatives, fixed-step integration.
//! - [`analytic`]: closed-form impulse response and constant-dose equilibria.
//! - [`regimen`]: weekly plans, preset regimens, alertness sampling, objective.
//! - [`optimizer`]: constrained multi-start maximization of the objective.
//! - [`calibration`]: observation files and fit scoring.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod calibration;
mod error;
pub mod kinetics;
pub mod optimizer;
pub mod regimen;

pub use error::{Error, Result};
pub use kinetics::{
    derivatives, effect, euler_step, integrate, integrate_reference, normalize_params,
    HalfConcentration, ModelParams, State, Trajectory,
};
pub use optimizer::{
    condition, evaluate_plan, optimize, project, Constraint, ConstraintKind, OptResult,
};
pub use regimen::{
    objective, plan_to_schedule, preset_regimen, sample_alertness, DoseSchedule, DoseSegment,
    ObjectiveSpec, WeeklyPlan,
};
