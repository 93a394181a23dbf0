//! Concentration, memory, idealized effect and baseline dynamics.
//!
//! The model state is four scalars:
//!
//! ```text
//! dC/dt    = k1 (k7 D - C)
//! dCmem/dt = k5 (C - Cmem)
//! dF/dt    = k2 (k6 C - F)
//! dEb/dt   = k3 (E0 - k4 Cmem - Eb)
//! E        = Eb + F / (1 + Cmem / C_half)
//! ```
//!
//! where `D` is the dose rate in µg/min.

mod integrate;
mod params;

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use integrate::{integrate, integrate_reference, integrate_visit, Stepper, Trajectory};
pub use params::{
    normalize_params, HalfConcentration, ModelParams, PublishedParams, RateUnit, FIELD_NAMES,
    MINUTES_PER_DAY,
};

/// Instantaneous model state. Also used for its time derivative, which has
/// the same shape.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    /// Blood plasma concentration (µg/mL).
    pub c: f64,
    /// Memory concentration (µg/mL).
    pub c_mem: f64,
    /// Idealized effect.
    pub f: f64,
    /// Baseline effect.
    pub e_b: f64,
}

impl State {
    pub const fn new(c: f64, c_mem: f64, f: f64, e_b: f64) -> Self {
        Self { c, c_mem, f, e_b }
    }

    /// Drug-naive subject: nothing in the system and the baseline at `e0`.
    pub fn rest(params: &ModelParams) -> Self {
        Self::new(0.0, 0.0, 0.0, params.e0)
    }

    pub fn is_finite(&self) -> bool {
        self.c.is_finite() && self.c_mem.is_finite() && self.f.is_finite() && self.e_b.is_finite()
    }
}

impl Add for State {
    type Output = State;

    fn add(self, rhs: State) -> State {
        State {
            c: self.c + rhs.c,
            c_mem: self.c_mem + rhs.c_mem,
            f: self.f + rhs.f,
            e_b: self.e_b + rhs.e_b,
        }
    }
}

impl Mul<f64> for State {
    type Output = State;

    fn mul(self, rhs: f64) -> State {
        State {
            c: self.c * rhs,
            c_mem: self.c_mem * rhs,
            f: self.f * rhs,
            e_b: self.e_b * rhs,
        }
    }
}

#[inline]
pub(crate) fn rates(p: &ModelParams, s: &State, dose_rate: f64) -> State {
    State {
        c: p.k1 * (p.k7 * dose_rate - s.c),
        c_mem: p.k5 * (s.c - s.c_mem),
        f: p.k2 * (p.k6 * s.c - s.f),
        e_b: p.k3 * (p.e0 - p.k4 * s.c_mem - s.e_b),
    }
}

/// Time derivative of the state under a constant dose rate (µg/min).
pub fn derivatives(p: &ModelParams, s: &State, dose_rate: f64) -> Result<State> {
    if !s.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if !dose_rate.is_finite() {
        return Err(Error::NonFinite("dose rate"));
    }
    if dose_rate < 0.0 {
        return Err(Error::NegativeDose(dose_rate));
    }
    Ok(rates(p, s, dose_rate))
}

/// Measured effect of a state.
#[inline]
pub fn effect(p: &ModelParams, s: &State) -> f64 {
    match p.c_half {
        HalfConcentration::Disabled => s.e_b + s.f,
        HalfConcentration::Finite(half) => s.e_b + s.f / (1.0 + s.c_mem / half),
    }
}

pub(crate) fn check_step(p: &ModelParams, dt: f64) -> Result<()> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidStep { dt });
    }
    let bound = p.stability_bound();
    if dt >= bound {
        return Err(Error::UnstableStep { dt, bound });
    }
    Ok(())
}

#[inline]
pub(crate) fn euler_step_unchecked(p: &ModelParams, s: &State, dose_rate: f64, dt: f64) -> State {
    *s + rates(p, s, dose_rate) * dt
}

/// One forward Euler step of length `dt` minutes.
pub fn euler_step(p: &ModelParams, s: &State, dose_rate: f64, dt: f64) -> Result<State> {
    check_step(p, dt)?;
    let d = derivatives(p, s, dose_rate)?;
    Ok(*s + d * dt)
}
