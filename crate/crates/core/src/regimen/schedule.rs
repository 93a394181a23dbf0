use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when deciding whether a time lies on a step grid.
const GRID_SLACK: f64 = 1e-9;

/// A constant-rate dosing interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseSegment {
    pub start_min: f64,
    pub end_min: f64,
    pub rate_ug_per_min: f64,
}

impl DoseSegment {
    pub fn mass(&self) -> f64 {
        self.rate_ug_per_min * (self.end_min - self.start_min)
    }
}

/// Piecewise-constant dose rate over `[0, horizon]`; zero outside segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct DoseSchedule {
    horizon_min: f64,
    segments: Vec<DoseSegment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    horizon_min: f64,
    #[serde(default)]
    segments: Vec<DoseSegment>,
}

impl TryFrom<RawSchedule> for DoseSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        DoseSchedule::new(raw.segments, raw.horizon_min)
    }
}

/// Index of the grid point at `time`, or an error if it is off the grid.
pub(crate) fn grid_index(time: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !time.is_finite() || time < 0.0 {
        return Err(Error::OffGrid { time, dt });
    }
    let k = (time / dt).round();
    if (k * dt - time).abs() > GRID_SLACK * time.abs().max(1.0) {
        return Err(Error::OffGrid { time, dt });
    }
    Ok(k as usize)
}

impl DoseSchedule {
    pub fn new(segments: Vec<DoseSegment>, horizon_min: f64) -> Result<Self> {
        if !horizon_min.is_finite() || horizon_min < 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "horizon must be finite and non-negative, got {horizon_min}"
            )));
        }
        let mut prev_end = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            let DoseSegment {
                start_min: start,
                end_min: end,
                rate_ug_per_min: rate,
            } = *seg;
            if !(start.is_finite() && end.is_finite() && rate.is_finite()) {
                return Err(Error::InvalidSchedule(format!("segment {i} is not finite")));
            }
            if rate < 0.0 {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} has negative rate {rate}"
                )));
            }
            if !(start < end) {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} is empty or reversed ({start}..{end})"
                )));
            }
            if start < prev_end {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} starts at {start}, before the previous one ends ({prev_end})"
                )));
            }
            if end > horizon_min {
                return Err(Error::InvalidSchedule(format!(
                    "segment {i} ends at {end}, past the horizon {horizon_min}"
                )));
            }
            prev_end = end;
        }
        Ok(Self {
            horizon_min,
            segments,
        })
    }

    pub fn empty(horizon_min: f64) -> Self {
        Self::new(Vec::new(), horizon_min).expect("empty schedule with valid horizon")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn segments(&self) -> &[DoseSegment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.horizon_min
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(DoseSegment::mass).sum()
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| s.start_min <= t && t < s.end_min)
            .map_or(0.0, |s| s.rate_ug_per_min)
    }

    /// Segment boundaries as step indices on a grid of spacing `dt`.
    pub(crate) fn step_ranges(&self, dt: f64) -> Result<Vec<(usize, usize, f64)>> {
        self.segments
            .iter()
            .map(|s| {
                Ok((
                    grid_index(s.start_min, dt)?,
                    grid_index(s.end_min, dt)?,
                    s.rate_ug_per_min,
                ))
            })
            .collect()
    }

    /// Moves every breakpoint to the nearest multiple of `dt`, rescaling each
    /// rate so segment masses are unchanged. The horizon is rounded up.
    pub fn snapped(&self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidStep { dt });
        }
        let snap = |t: f64| (t / dt).round() * dt;
        let horizon = (self.horizon_min / dt - GRID_SLACK).ceil().max(0.0) * dt;
        let mut segments = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            let start = snap(seg.start_min);
            let mut end = snap(seg.end_min);
            if end <= start {
                end = start + dt;
            }
            let rate = seg.mass() / (end - start);
            segments.push(DoseSegment {
                start_min: start,
                end_min: end,
                rate_ug_per_min: rate,
            });
        }
        let last_end = segments.last().map_or(0.0, |s| s.end_min);
        Self::new(segments, horizon.max(last_end))
    }

    /// Pointwise sum of two schedules.
    pub fn combined(&self, other: &DoseSchedule) -> Self {
        let mut points: Vec<f64> = self
            .segments
            .iter()
            .chain(&other.segments)
            .flat_map(|s| [s.start_min, s.end_min])
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        let segments = points
            .windows(2)
            .filter_map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let rate = self.rate_at(mid) + other.rate_at(mid);
                (rate > 0.0).then_some(DoseSegment {
                    start_min: w[0],
                    end_min: w[1],
                    rate_ug_per_min: rate,
                })
            })
            .collect();
        Self::new(segments, self.horizon_min.max(other.horizon_min))
            .expect("sum of valid schedules is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: f64, end: f64, rate: f64) -> DoseSegment {
        DoseSegment {
            start_min: start,
            end_min: end,
            rate_ug_per_min: rate,
        }
    }

    #[test]
    fn rejects_overlap_and_negative_rates() {
        assert!(DoseSchedule::new(vec![seg(0.0, 10.0, 1.0), seg(5.0, 20.0, 1.0)], 30.0).is_err());
        assert!(DoseSchedule::new(vec![seg(0.0, 10.0, -1.0)], 30.0).is_err());
        assert!(DoseSchedule::new(vec![seg(10.0, 10.0, 1.0)], 30.0).is_err());
        assert!(DoseSchedule::new(vec![seg(0.0, 40.0, 1.0)], 30.0).is_err());
        assert!(DoseSchedule::new(vec![seg(0.0, 10.0, 1.0), seg(10.0, 20.0, 2.0)], 30.0).is_ok());
    }

    #[test]
    fn mass_and_rate_lookup() {
        let s = DoseSchedule::new(vec![seg(0.0, 10.0, 1.0), seg(20.0, 25.0, 4.0)], 30.0).unwrap();
        assert_eq!(s.total_mass(), 30.0);
        assert_eq!(s.rate_at(0.0), 1.0);
        assert_eq!(s.rate_at(10.0), 0.0);
        assert_eq!(s.rate_at(24.9), 4.0);
    }

    #[test]
    fn snapping_preserves_mass() {
        let s = DoseSchedule::new(vec![seg(720.0, 735.0, 1e5 / 15.0)], 1440.0).unwrap();
        let snapped = s.snapped(4.0).unwrap();
        let only = snapped.segments()[0];
        assert_eq!(only.start_min, 720.0);
        assert_eq!(only.end_min, 736.0);
        assert!((snapped.total_mass() - 1e5).abs() < 1e-9);
        assert!(snapped.step_ranges(4.0).is_ok());
        assert!(s.step_ranges(4.0).is_err());
        assert_eq!(s.snapped(1.0).unwrap(), s);
    }

    #[test]
    fn combined_adds_rates() {
        let a = DoseSchedule::new(vec![seg(0.0, 10.0, 1.0)], 30.0).unwrap();
        let b = DoseSchedule::new(vec![seg(5.0, 15.0, 2.0)], 30.0).unwrap();
        let sum = a.combined(&b);
        assert_eq!(sum.segments().len(), 3);
        assert_eq!(sum.rate_at(7.0), 3.0);
        assert_eq!(sum.total_mass(), a.total_mass() + b.total_mass());
    }

    #[test]
    fn json_is_validated() {
        let ok: DoseSchedule = serde_json::from_str(
            r#"{"horizon_min":60,"segments":[{"start_min":0,"end_min":10,"rate_ug_per_min":5}]}"#,
        )
        .unwrap();
        assert_eq!(ok.total_mass(), 50.0);
        let bad = serde_json::from_str::<DoseSchedule>(
            r#"{"horizon_min":60,"segments":[{"start_min":0,"end_min":10,"rate_ug_per_min":-5}]}"#,
        );
        assert!(bad.is_err());
    }
}
