//! Closed-form results for the special cases where the model is solvable by
//! hand: a fast single dose, and equilibria under a constant dose rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::{HalfConcentration, ModelParams};

/// Concentration `t` minutes after `total_dose` µg is delivered instantly
/// to a drug-free subject.
pub fn impulse_concentration(p: &ModelParams, total_dose: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(p.k1 * p.k7 * total_dose * (-p.k1 * t).exp())
}

/// Steady states reached under a constant dose rate with acute tolerance off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumSummary {
    pub dose_rate: f64,
    pub c_eq: f64,
    pub c_mem_eq: f64,
    /// Effect before tolerance has developed.
    pub e_drug: f64,
    /// Effect once tolerance has fully developed.
    pub e_drug_tol: f64,
    /// Effect right after dosing stops, before tolerance wears off.
    pub e_withdrawal: f64,
}

pub fn constant_dose_equilibrium(p: &ModelParams, dose_rate: f64) -> Result<EquilibriumSummary> {
    if let HalfConcentration::Finite(half) = p.c_half {
        return Err(Error::AcuteToleranceEnabled(half));
    }
    if !dose_rate.is_finite() {
        return Err(Error::NonFinite("dose rate"));
    }
    if dose_rate < 0.0 {
        return Err(Error::NegativeDose(dose_rate));
    }
    let c = p.k7 * dose_rate;
    Ok(EquilibriumSummary {
        dose_rate,
        c_eq: c,
        c_mem_eq: c,
        e_drug: p.e0 + p.k6 * c,
        e_drug_tol: p.e0 + (p.k6 - p.k4) * c,
        e_withdrawal: p.e0 - p.k4 * c,
    })
}

/// Tolerance strength implied by the pre- and post-tolerance effects of a
/// steady dosing regimen.
pub fn estimate_k4(k6: f64, e0: f64, e_drug: f64, e_drug_tol: f64) -> Result<f64> {
    let gain = e_drug - e0;
    if gain == 0.0 {
        return Err(Error::NoDrugEffect);
    }
    Ok(k6 * (e_drug - e_drug_tol) / gain)
}
