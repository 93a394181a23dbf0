//! Model constants and their unit normalization.
//!
//! Rates are stored per minute. Published parameter tables mix per-minute
//! and per-day rates, so loading goes through [`PublishedParams`], which
//! carries a unit tag for each rate and is converted by [`normalize_params`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: f64 = 1440.0;

/// Names of every settable field, in file order.
pub const FIELD_NAMES: [&str; 9] = ["e0", "k1", "k2", "k3", "k4", "k5", "k6", "k7", "c_half"];

const RATE_FIELDS: [&str; 4] = ["k1", "k2", "k3", "k5"];

/// Half-effect concentration of the acute tolerance mechanism.
///
/// `Disabled` stands for an infinite value: the effect divisor is exactly 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfConcentration {
    Disabled,
    /// µg/mL, strictly positive.
    Finite(f64),
}

impl HalfConcentration {
    pub fn from_f64(value: f64) -> Self {
        if value == f64::INFINITY {
            HalfConcentration::Disabled
        } else {
            HalfConcentration::Finite(value)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            HalfConcentration::Disabled => f64::INFINITY,
            HalfConcentration::Finite(v) => v,
        }
    }

    pub fn is_disabled(self) -> bool {
        matches!(self, HalfConcentration::Disabled)
    }
}

impl Serialize for HalfConcentration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            HalfConcentration::Disabled => serializer.serialize_str("inf"),
            HalfConcentration::Finite(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for HalfConcentration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct HalfVisitor;

        impl Visitor<'_> for HalfVisitor {
            type Value = HalfConcentration;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Ok(HalfConcentration::from_f64(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(HalfConcentration::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                Ok(HalfConcentration::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "+inf" | "infinity" => Ok(HalfConcentration::Disabled),
                    other => other
                        .parse::<f64>()
                        .map(HalfConcentration::from_f64)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        deserializer.deserialize_any(HalfVisitor)
    }
}

/// Normalized model constants. All rates are per minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Intrinsic effect baseline.
    pub e0: f64,
    /// Concentration decay rate (1/min).
    pub k1: f64,
    /// Rate at which the idealized effect tracks concentration (1/min).
    pub k2: f64,
    /// Baseline convergence rate (1/min).
    pub k3: f64,
    /// Long-term tolerance strength (mL/µg).
    pub k4: f64,
    /// Memory rate (1/min).
    pub k5: f64,
    /// Concentration-to-effect gain (mL/µg).
    pub k6: f64,
    /// Dose-to-concentration gain (min/mL).
    pub k7: f64,
    pub c_half: HalfConcentration,
}

/// A time unit tag for a published rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    PerMinute,
    PerDay,
}

impl RateUnit {
    pub fn parse(field: &str, tag: &str) -> Result<Self> {
        match tag.trim().to_ascii_lowercase().as_str() {
            "1/min" | "/min" | "per_min" | "per_minute" | "min^-1" => Ok(RateUnit::PerMinute),
            "1/day" | "/day" | "per_day" | "day^-1" => Ok(RateUnit::PerDay),
            _ => Err(Error::UnknownUnit {
                field: field.to_string(),
                unit: tag.to_string(),
            }),
        }
    }

    fn to_per_minute(self, rate: f64) -> f64 {
        match self {
            RateUnit::PerMinute => rate,
            RateUnit::PerDay => rate / MINUTES_PER_DAY,
        }
    }
}

/// Parameters as they appear in a published table or a parameter file, with
/// a unit tag for each rate. Rates without a tag are taken as per minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedParams {
    pub e0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub k7: f64,
    pub c_half: HalfConcentration,
    #[serde(default)]
    pub units: BTreeMap<String, String>,
}

/// Converts every tagged rate to per-minute and validates the result.
pub fn normalize_params(raw: &PublishedParams) -> Result<ModelParams> {
    let mut units = BTreeMap::new();
    for (field, tag) in &raw.units {
        if !RATE_FIELDS.contains(&field.as_str()) {
            if FIELD_NAMES.contains(&field.as_str()) {
                return Err(Error::UnitOnNonRate {
                    field: field.clone(),
                });
            }
            return Err(Error::UnknownField(field.clone()));
        }
        units.insert(field.as_str(), RateUnit::parse(field, tag)?);
    }
    let rate = |field: &str, value: f64| {
        units
            .get(field)
            .copied()
            .unwrap_or(RateUnit::PerMinute)
            .to_per_minute(value)
    };

    let params = ModelParams {
        e0: raw.e0,
        k1: rate("k1", raw.k1),
        k2: rate("k2", raw.k2),
        k3: rate("k3", raw.k3),
        k4: raw.k4,
        k5: rate("k5", raw.k5),
        k6: raw.k6,
        k7: raw.k7,
        c_half: raw.c_half,
    };
    params.validate()?;
    Ok(params)
}

impl ModelParams {
    /// Caffeine constants (long-term tolerance only).
    pub fn caffeine() -> Self {
        normalize_params(&PublishedParams {
            e0: 0.0,
            k1: 0.002,
            k2: 0.1,
            k3: 0.5,
            k4: 0.3,
            k5: 0.5,
            k6: 0.4,
            k7: 0.0125,
            c_half: HalfConcentration::Disabled,
            units: day_rates(),
        })
        .expect("built-in caffeine parameters are valid")
    }

    /// Nicotine constants (acute tolerance only).
    pub fn nicotine() -> Self {
        normalize_params(&PublishedParams {
            e0: 60.0,
            k1: 0.014,
            k2: 0.08,
            k3: 0.0,
            k4: 0.0,
            k5: 20.0,
            k6: 1.8e3,
            k7: 0.0175,
            c_half: HalfConcentration::Finite(0.005),
            units: day_rates(),
        })
        .expect("built-in nicotine parameters are valid")
    }

    /// Looks up a built-in parameter set by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "caffeine" => Some(Self::caffeine()),
            "nicotine" => Some(Self::nicotine()),
            _ => None,
        }
    }

    /// Reads a JSON parameter file and normalizes it.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: PublishedParams = serde_json::from_str(text)?;
        normalize_params(&raw)
    }

    /// The parameter-file form of these constants, every rate tagged per
    /// minute. Loading it back gives identical parameters.
    pub fn to_published(&self) -> PublishedParams {
        PublishedParams {
            e0: self.e0,
            k1: self.k1,
            k2: self.k2,
            k3: self.k3,
            k4: self.k4,
            k5: self.k5,
            k6: self.k6,
            k7: self.k7,
            c_half: self.c_half,
            units: RATE_FIELDS
                .iter()
                .map(|f| (f.to_string(), "1/min".to_string()))
                .collect(),
        }
    }

    /// Same parameters with both tolerance mechanisms switched off.
    pub fn without_tolerance(self) -> Self {
        Self {
            k4: 0.0,
            c_half: HalfConcentration::Disabled,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k5", self.k5),
            ("k7", self.k7),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParam {
                    field: name.into(),
                    reason: format!("must be finite and non-negative, got {value}"),
                });
            }
        }
        for (name, value) in [("e0", self.e0), ("k4", self.k4), ("k6", self.k6)] {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    field: name.into(),
                    reason: format!("must be finite, got {value}"),
                });
            }
        }
        if let HalfConcentration::Finite(v) = self.c_half {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::InvalidParam {
                    field: "c_half".into(),
                    reason: format!("must be positive or \"inf\", got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, field: &str) -> Result<f64> {
        Ok(match field {
            "e0" => self.e0,
            "k1" => self.k1,
            "k2" => self.k2,
            "k3" => self.k3,
            "k4" => self.k4,
            "k5" => self.k5,
            "k6" => self.k6,
            "k7" => self.k7,
            "c_half" => self.c_half.as_f64(),
            _ => return Err(Error::UnknownField(field.to_string())),
        })
    }

    /// Copy with one field replaced (normalized units). `c_half` accepts
    /// `f64::INFINITY` to disable acute tolerance.
    pub fn with_field(&self, field: &str, value: f64) -> Result<Self> {
        let mut p = *self;
        match field {
            "e0" => p.e0 = value,
            "k1" => p.k1 = value,
            "k2" => p.k2 = value,
            "k3" => p.k3 = value,
            "k4" => p.k4 = value,
            "k5" => p.k5 = value,
            "k6" => p.k6 = value,
            "k7" => p.k7 = value,
            "c_half" => p.c_half = HalfConcentration::from_f64(value),
            _ => return Err(Error::UnknownField(field.to_string())),
        }
        p.validate()?;
        Ok(p)
    }

    /// Largest of the four relaxation rates; sets the explicit step bound.
    pub fn max_rate(&self) -> f64 {
        self.k1.max(self.k2).max(self.k3).max(self.k5)
    }

    /// Forward Euler is stable for dt strictly below this (infinite when
    /// every rate is zero).
    pub fn stability_bound(&self) -> f64 {
        let rate = self.max_rate();
        if rate > 0.0 {
            2.0 / rate
        } else {
            f64::INFINITY
        }
    }
}

fn day_rates() -> BTreeMap<String, String> {
    [("k3", "1/day"), ("k5", "1/day")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
