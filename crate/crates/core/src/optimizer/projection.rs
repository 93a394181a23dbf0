use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimen::DAYS_PER_WEEK;

/// Relative slack on the weekly cap. Keeps projection exactly idempotent when
/// the rounded sum of a projected vector lands an ulp above the cap.
const CAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// At most `cap` cups on any single day.
    DailyMax,
    /// At most `cap` cups over the week.
    WeeklyMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub cap: f64,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, cap: f64) -> Result<Self> {
        let c = Self { kind, cap };
        c.validate()?;
        Ok(c)
    }

    pub fn daily(cap: f64) -> Result<Self> {
        Self::new(ConstraintKind::DailyMax, cap)
    }

    pub fn weekly(cap: f64) -> Result<Self> {
        Self::new(ConstraintKind::WeeklyMax, cap)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap > 0.0) || !self.cap.is_finite() {
            return Err(Error::InvalidConstraint(format!(
                "cap must be positive and finite, got {}",
                self.cap
            )));
        }
        Ok(())
    }

    /// Per-day upper bound implied by the constraint.
    pub fn day_bound(&self) -> f64 {
        self.cap
    }

    /// Largest violation of the constraint by `d` (0 when feasible).
    pub fn violation(&self, d: &[f64; DAYS_PER_WEEK]) -> f64 {
        let negative = d.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max);
        let over = match self.kind {
            ConstraintKind::DailyMax => d.iter().map(|x| x - self.cap).fold(0.0, f64::max),
            ConstraintKind::WeeklyMax => (d.iter().sum::<f64>() - self.cap).max(0.0),
        };
        negative.max(over)
    }
}

impl FromStr for Constraint {
    type Err = Error;

    /// Parses `daily:2` or `weekly:10`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, cap) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConstraint(format!("expected KIND:CAP, got {s:?}")))?;
        let kind = match kind.trim() {
            "daily" | "daily_max" => ConstraintKind::DailyMax,
            "weekly" | "weekly_max" => ConstraintKind::WeeklyMax,
            other => {
                return Err(Error::InvalidConstraint(format!(
                    "unknown kind {other:?} (expected daily or weekly)"
                )))
            }
        };
        let cap = cap
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidConstraint(format!("cap {cap:?} is not a number")))?;
        Constraint::new(kind, cap)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ConstraintKind::DailyMax => write!(f, "daily:{}", self.cap),
            ConstraintKind::WeeklyMax => write!(f, "weekly:{}", self.cap),
        }
    }
}

/// Euclidean projection onto the feasible set of `c`.
pub fn project(d: &[f64; DAYS_PER_WEEK], c: &Constraint) -> [f64; DAYS_PER_WEEK] {
    match c.kind {
        ConstraintKind::DailyMax => d.map(|x| x.clamp(0.0, c.cap)),
        ConstraintKind::WeeklyMax => {
            let clamped = d.map(|x| x.max(0.0));
            if clamped.iter().sum::<f64>() <= c.cap * (1.0 + CAP_SLACK) {
                clamped
            } else {
                project_simplex(d, c.cap)
            }
        }
    }
}

/// Projection onto `{x >= 0, sum x = cap}` by sorting and thresholding.
fn project_simplex(d: &[f64; DAYS_PER_WEEK], cap: f64) -> [f64; DAYS_PER_WEEK] {
    let mut sorted = *d;
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - cap) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    d.map(|x| (x - theta).max(0.0))
}
