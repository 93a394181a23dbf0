use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DAYS_PER_WEEK, MINUTES_PER_WEEK};
use crate::error::{Error, Result};
use crate::kinetics::{Trajectory, MINUTES_PER_DAY};

/// Extra weight on days 1 and 4, a little on every other day.
pub const DAY_WEIGHTS: [f64; DAYS_PER_WEEK] = [10.0, 0.2, 0.2, 10.0, 0.2, 0.2, 0.2];

/// Where and how alertness is scored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    #[serde(default = "default_weights")]
    pub weights: [f64; DAYS_PER_WEEK],
    /// Minute of the day at which alertness is read (900 = 3 pm).
    #[serde(default = "default_sample_minute")]
    pub sample_minute: f64,
    #[serde(default = "default_horizon_weeks")]
    pub horizon_weeks: usize,
    /// Zero-based; `None` means the last simulated week.
    #[serde(default)]
    pub evaluation_week: Option<usize>,
}

fn default_weights() -> [f64; DAYS_PER_WEEK] {
    DAY_WEIGHTS
}

fn default_sample_minute() -> f64 {
    900.0
}

fn default_horizon_weeks() -> usize {
    3
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self {
            weights: DAY_WEIGHTS,
            sample_minute: default_sample_minute(),
            horizon_weeks: default_horizon_weeks(),
            evaluation_week: None,
        }
    }
}

impl ObjectiveSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ObjectiveSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidObjective(
                "weights must be finite and non-negative".into(),
            ));
        }
        if !(0.0..MINUTES_PER_DAY).contains(&self.sample_minute) {
            return Err(Error::InvalidObjective(format!(
                "sample minute {} is outside the day",
                self.sample_minute
            )));
        }
        if self.horizon_weeks == 0 {
            return Err(Error::InvalidObjective(
                "horizon must be at least one week".into(),
            ));
        }
        if self.week() >= self.horizon_weeks {
            return Err(Error::InvalidObjective(format!(
                "evaluation week {} is not within the {}-week horizon",
                self.week(),
                self.horizon_weeks
            )));
        }
        Ok(())
    }

    /// Zero-based index of the scored week.
    pub fn week(&self) -> usize {
        self.evaluation_week
            .unwrap_or(self.horizon_weeks.saturating_sub(1))
    }

    pub fn horizon_min(&self) -> f64 {
        self.horizon_weeks as f64 * MINUTES_PER_WEEK
    }

    /// Absolute sampling instants (min) for the seven days of the scored week.
    pub fn sample_times(&self) -> [f64; DAYS_PER_WEEK] {
        let week_start = self.week() as f64 * MINUTES_PER_WEEK;
        std::array::from_fn(|day| week_start + day as f64 * MINUTES_PER_DAY + self.sample_minute)
    }
}

/// Effect at the sampling minute of each day of the scored week. Reads the
/// recorded value at that exact grid point; nothing is interpolated.
pub fn sample_alertness(traj: &Trajectory, spec: &ObjectiveSpec) -> Result<[f64; DAYS_PER_WEEK]> {
    spec.validate()?;
    let mut out = [0.0; DAYS_PER_WEEK];
    for (slot, time) in out.iter_mut().zip(spec.sample_times()) {
        let i = traj.index_of(time).ok_or(Error::SampleOffGrid { time })?;
        *slot = traj.effects()[i];
    }
    Ok(out)
}

/// `sum_i w_i * sqrt(max(e_i, 0))`. Negative alertness scores zero.
pub fn objective(e: &[f64; DAYS_PER_WEEK], weights: &[f64; DAYS_PER_WEEK]) -> f64 {
    e.iter()
        .zip(weights)
        .map(|(e, w)| w * e.max(0.0).sqrt())
        .sum()
}
