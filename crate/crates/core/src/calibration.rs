//! Scoring parameter sets against observed time series.
//!
//! Observation files are CSV with a channel annotation comment followed by a
//! `t_min,value` header:
//!
//! ```text
//! # channel: effect
//! t_min,value
//! 0,60
//! 5,71.5
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{integrate, ModelParams, State, Trajectory};
use crate::regimen::DoseSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Plasma concentration C (µg/mL).
    Concentration,
    /// Measured effect E.
    Effect,
}

impl Channel {
    pub fn units(self) -> &'static str {
        match self {
            Channel::Concentration => "ug/mL",
            Channel::Effect => "effect units",
        }
    }

    fn read(self, traj: &Trajectory, i: usize) -> f64 {
        match self {
            Channel::Concentration => traj.states()[i].c,
            Channel::Effect => traj.effects()[i],
        }
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "concentration" | "c" => Ok(Channel::Concentration),
            "effect" | "e" => Ok(Channel::Effect),
            other => Err(format!(
                "unknown channel {other:?} (expected concentration or effect)"
            )),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Concentration => "concentration",
            Channel::Effect => "effect",
        })
    }
}

/// Observations of one channel, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedSeries {
    channel: Channel,
    points: Vec<(f64, f64)>,
}

impl ObservedSeries {
    pub fn new(channel: Channel, points: Vec<(f64, f64)>) -> Result<Self> {
        let invalid = Error::InvalidSeries;
        if points.is_empty() {
            return Err(invalid("observed series is empty".into()));
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(invalid(format!("observation {i} is not finite")));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(invalid(format!(
                    "observation {i} at {t} min does not follow {} min",
                    points[i - 1].0
                )));
            }
        }
        Ok(Self { channel, points })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn units(&self) -> &'static str {
        self.channel.units()
    }

    /// Spread of the observed values, used to normalize the error.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!("# channel: {}\nt_min,value\n", self.channel);
        for (t, v) in &self.points {
            out.push_str(&format!("{t:?},{v:?}\n"));
        }
        out
    }
}

/// Reads an observation CSV, reporting problems with their line numbers.
pub fn load_series(path: &Path) -> Result<ObservedSeries> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text, path)
}

fn parse_series(text: &str, path: &Path) -> Result<ObservedSeries> {
    let fail = |line: u64, message: String| Error::Series {
        path: path.to_path_buf(),
        line,
        message,
    };
    if text.trim().is_empty() {
        return Err(fail(1, "file is empty".into()));
    }

    let mut channel = None;
    for (n, line) in text.lines().enumerate() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((key, value)) = comment.split_once([':', '=']) {
            if key.trim().eq_ignore_ascii_case("channel") {
                channel = Some(
                    value
                        .parse::<Channel>()
                        .map_err(|m| fail(n as u64 + 1, m))?,
                );
                break;
            }
        }
    }
    let channel = channel
        .ok_or_else(|| fail(1, "missing `# channel: <concentration|effect>` line".into()))?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let header_line = reader.position().line().max(1);
    if headers.iter().collect::<Vec<_>>() != ["t_min", "value"] {
        return Err(fail(
            header_line,
            format!(
                "expected header `t_min,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut points: Vec<(f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            fail(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(line, format!("{name} {raw:?} is not a finite number"))),
            }
        };
        let t = cell(0, "time")?;
        let v = cell(1, "value")?;
        if let Some(&(prev, _)) = points.last() {
            if t <= prev {
                return Err(fail(
                    line,
                    format!("time {t} does not strictly follow previous time {prev}"),
                ));
            }
        }
        points.push((t, v));
    }
    if points.is_empty() {
        return Err(fail(header_line, "no observations".into()));
    }
    ObservedSeries::new(channel, points)
}

/// Linear interpolation of a channel of a stride-1 trajectory at time `t`.
fn interpolate(traj: &Trajectory, channel: Channel, dt: f64, t: f64) -> f64 {
    let last = traj.len() - 1;
    let pos = t / dt;
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        return channel.read(traj, (nearest as usize).min(last));
    }
    let k = (pos.floor() as usize).min(last.saturating_sub(1));
    let frac = pos - k as f64;
    let a = channel.read(traj, k);
    let b = channel.read(traj, (k + 1).min(last));
    a + (b - a) * frac
}

/// Sum over series of the root-mean-square simulation error divided by the
/// series' value range (1 for a constant series). Simulation starts at rest.
pub fn loss(
    p: &ModelParams,
    schedule: &DoseSchedule,
    observed: &[ObservedSeries],
    dt: f64,
) -> Result<f64> {
    let horizon = schedule.horizon();
    let mut t_max: f64 = 0.0;
    for series in observed {
        for &(t, _) in series.points() {
            if t < 0.0 || t > horizon {
                return Err(Error::ObservationOutsideHorizon { time: t, horizon });
            }
            t_max = t_max.max(t);
        }
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidStep { dt });
    }
    let t_end = ((t_max / dt) - 1e-9).ceil().max(1.0) * dt;
    let traj = integrate(p, State::rest(p), schedule, dt, t_end, 1)?;

    let mut terms: Vec<f64> = observed
        .iter()
        .map(|series| {
            let sq: f64 = series
                .points()
                .iter()
                .map(|&(t, v)| {
                    let r = interpolate(&traj, series.channel(), dt, t) - v;
                    r * r
                })
                .sum();
            let rmse = (sq / series.points().len() as f64).sqrt();
            let range = series.range();
            rmse / if range > 0.0 { range } else { 1.0 }
        })
        .collect();
    // summing in sorted order makes the total independent of series order
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

/// Loss at each candidate value of one parameter, in input order.
pub fn sweep(
    base: &ModelParams,
    field: &str,
    values: &[f64],
    schedule: &DoseSchedule,
    observed: &[ObservedSeries],
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    base.get(field)?;
    values
        .par_iter()
        .map(|&v| {
            let p = base.with_field(field, v)?;
            Ok((v, loss(&p, schedule, observed, dt)?))
        })
        .collect()
}

/// Simulated observations of `channel` at `times`, for self-consistency
/// checks of a fit.
pub fn synthetic_series(
    p: &ModelParams,
    schedule: &DoseSchedule,
    channel: Channel,
    times: &[f64],
    dt: f64,
) -> Result<ObservedSeries> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let t_end = ((t_max / dt) - 1e-9).ceil().max(1.0) * dt;
    let traj = integrate(p, State::rest(p), schedule, dt, t_end, 1)?;
    let points = times
        .iter()
        .map(|&t| (t, interpolate(&traj, channel, dt, t)))
        .collect();
    ObservedSeries::new(channel, points)
}
