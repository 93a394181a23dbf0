//! Dosing regimens: weekly plans, the built-in four-week presets, and
//! turning a plan into a piecewise-constant dose schedule.

mod objective;
mod schedule;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::MINUTES_PER_DAY;

pub use objective::{objective, sample_alertness, ObjectiveSpec, DAY_WEIGHTS};
pub(crate) use schedule::grid_index;
pub use schedule::{DoseSchedule, DoseSegment};

pub const DAYS_PER_WEEK: usize = 7;
pub const MINUTES_PER_WEEK: f64 = MINUTES_PER_DAY * DAYS_PER_WEEK as f64;

/// One cup of coffee, in µg of caffeine.
pub const CUP_MASS_UG: f64 = 1e5;

/// Per-day dose strengths plus the geometry of the daily dosing window.
/// The same plan repeats every week.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeeklyPlan {
    /// Cups per day, day 1 first.
    pub doses: [f64; DAYS_PER_WEEK],
    #[serde(default = "default_cup_mass", rename = "cup_mass_ug")]
    pub cup_mass: f64,
    #[serde(default = "default_window_start", rename = "window_start_min")]
    pub window_start: f64,
    #[serde(default = "default_window_length", rename = "window_length_min")]
    pub window_length: f64,
}

fn default_cup_mass() -> f64 {
    CUP_MASS_UG
}

fn default_window_start() -> f64 {
    720.0
}

fn default_window_length() -> f64 {
    15.0
}

impl Default for WeeklyPlan {
    fn default() -> Self {
        Self::with_doses([0.0; DAYS_PER_WEEK])
    }
}

impl WeeklyPlan {
    /// Noon to 12:15, one cup = 100 mg.
    pub fn with_doses(doses: [f64; DAYS_PER_WEEK]) -> Self {
        Self {
            doses,
            cup_mass: CUP_MASS_UG,
            window_start: default_window_start(),
            window_length: default_window_length(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let plan: WeeklyPlan = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((i, d)) = self
            .doses
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_finite() || **d < 0.0)
        {
            return Err(Error::InvalidPlan(format!(
                "dose for day {} must be finite and non-negative, got {d}",
                i + 1
            )));
        }
        if !(self.cup_mass > 0.0) || !self.cup_mass.is_finite() {
            return Err(Error::InvalidPlan(format!(
                "cup mass must be positive, got {}",
                self.cup_mass
            )));
        }
        if !(self.window_length > 0.0)
            || !(self.window_start >= 0.0)
            || !(self.window_start + self.window_length <= MINUTES_PER_DAY)
        {
            return Err(Error::InvalidPlan(format!(
                "dosing window {}..{} min must lie within one day",
                self.window_start,
                self.window_start + self.window_length
            )));
        }
        Ok(())
    }
}

/// Repeats `plan` for `weeks` weeks. Zero-dose days get no segment.
pub fn plan_to_schedule(plan: &WeeklyPlan, weeks: usize) -> Result<DoseSchedule> {
    plan.validate()?;
    let days = (0..weeks * DAYS_PER_WEEK).map(|day| plan.doses[day % DAYS_PER_WEEK]);
    daily_schedule(plan, days, weeks as f64 * MINUTES_PER_WEEK)
}

fn daily_schedule(
    plan: &WeeklyPlan,
    doses: impl Iterator<Item = f64>,
    horizon: f64,
) -> Result<DoseSchedule> {
    let segments = doses
        .enumerate()
        .filter(|&(_, d)| d > 0.0)
        .map(|(day, d)| {
            let start = day as f64 * MINUTES_PER_DAY + plan.window_start;
            DoseSegment {
                start_min: start,
                end_min: start + plan.window_length,
                rate_ug_per_min: d * plan.cup_mass / plan.window_length,
            }
        })
        .collect();
    DoseSchedule::new(segments, horizon)
}

/// Names accepted by [`preset_regimen`].
pub const PRESETS: [&str; 3] = ["daily-one-cup", "two-cups-two-weeks", "weekday-140"];

/// The three four-week caffeine regimens, each 28 cups in total.
pub fn preset_regimen(name: &str) -> Result<DoseSchedule> {
    const WEEKS: usize = 4;
    match name {
        "daily-one-cup" => plan_to_schedule(&WeeklyPlan::with_doses([1.0; 7]), WEEKS),
        "two-cups-two-weeks" => {
            let plan = WeeklyPlan::with_doses([2.0; 7]);
            let days = (0..WEEKS * DAYS_PER_WEEK).map(|day| if day < 14 { 2.0 } else { 0.0 });
            daily_schedule(&plan, days, WEEKS as f64 * MINUTES_PER_WEEK)
        }
        "weekday-140" => plan_to_schedule(
            &WeeklyPlan::with_doses([1.4, 1.4, 1.4, 1.4, 1.4, 0.0, 0.0]),
            WEEKS,
        ),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            valid: PRESETS.join(", "),
        }),
    }
}
