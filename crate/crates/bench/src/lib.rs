//! Fixtures shared by the benchmarks.

use drugtol_core::{plan_to_schedule, DoseSchedule, WeeklyPlan};

/// With-tolerance daily-cap optimum, a representative non-trivial week.
pub const MIXED_WEEK: [f64; 7] = [2.0, 0.2179, 0.3921, 2.0, 0.2456, 0.3275, 0.3568];

pub fn mixed_plan() -> WeeklyPlan {
    WeeklyPlan::with_doses(MIXED_WEEK)
}

pub fn mixed_schedule(weeks: usize) -> DoseSchedule {
    plan_to_schedule(&mixed_plan(), weeks).expect("fixture plan is valid")
}
