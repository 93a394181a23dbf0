use std::path::Path;

use anyhow::{bail, Context, Result};
use drugtol_core::{preset_regimen, DoseSchedule, ModelParams, ObjectiveSpec, WeeklyPlan};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Common, ScheduleSource};

pub fn params(common: &Common) -> Result<ModelParams> {
    let name = common.params.as_deref().unwrap_or("caffeine");
    if let Some(p) = ModelParams::builtin(name) {
        return Ok(p);
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!(
            "--params {name:?} is neither a built-in set (caffeine, nicotine) nor an existing file"
        );
    }
    ModelParams::from_json_file(path).with_context(|| format!("loading parameters from {name}"))
}

pub fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        bail!("--dt must be a positive number of minutes, got {dt}");
    }
    Ok(())
}

/// Parses `arg` as inline JSON if it looks like an object, else reads it as a file.
pub fn json_arg<T: DeserializeOwned>(flag: &str, arg: &str) -> Result<T> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str(trimmed).with_context(|| format!("parsing inline --{flag}"));
    }
    let text =
        std::fs::read_to_string(arg).with_context(|| format!("reading --{flag} file {arg}"))?;
    serde_json::from_str(&text).with_context(|| format!("parsing --{flag} file {arg}"))
}

pub fn plan(arg: &str) -> Result<WeeklyPlan> {
    let plan: WeeklyPlan = json_arg("plan", arg)?;
    plan.validate().context("invalid --plan")?;
    Ok(plan)
}

pub fn objective(arg: Option<&str>) -> Result<ObjectiveSpec> {
    let spec = match arg {
        Some(arg) => json_arg("objective", arg)?,
        None => ObjectiveSpec::default(),
    };
    spec.validate().context("invalid --objective")?;
    Ok(spec)
}

/// Description of the chosen schedule source, recorded in outputs.
#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Preset(String),
    Plan { plan: WeeklyPlan, weeks: usize },
    Schedule(String),
}

/// The schedule, snapped onto the `dt` grid, and where it came from.
pub fn schedule(src: &ScheduleSource, weeks: usize, dt: f64) -> Result<(DoseSchedule, Source)> {
    let (schedule, source) = if let Some(name) = &src.preset {
        (preset_regimen(name)?, Source::Preset(name.clone()))
    } else if let Some(arg) = &src.plan {
        if weeks == 0 {
            bail!("--weeks must be at least 1");
        }
        let plan = plan(arg)?;
        let schedule = drugtol_core::plan_to_schedule(&plan, weeks)?;
        (schedule, Source::Plan { plan, weeks })
    } else if let Some(arg) = &src.schedule {
        (json_arg("schedule", arg)?, Source::Schedule(arg.clone()))
    } else {
        bail!("one of --preset, --plan or --schedule is required");
    };
    let snapped = schedule
        .snapped(dt)
        .context("placing dose breakpoints on the step grid")?;
    Ok((snapped, source))
}
