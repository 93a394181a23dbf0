use anyhow::{bail, Context, Result};
use drugtol_core::analytic::{constant_dose_equilibrium, estimate_k4, EquilibriumSummary};
use drugtol_core::calibration::{self, load_series, ObservedSeries};
use drugtol_core::kinetics::{PublishedParams, MINUTES_PER_DAY};
use drugtol_core::optimizer::{alertness, optimize_with, OptimizerSettings};
use drugtol_core::regimen::{CUP_MASS_UG, MINUTES_PER_WEEK};
use drugtol_core::{
    condition, integrate, plan_to_schedule, Constraint, DoseSchedule, ModelParams, ObjectiveSpec,
    OptResult, State, WeeklyPlan,
};
use serde::Serialize;

use crate::inputs::{self, Source};
use crate::output::Outputs;
use crate::{AnalyzeArgs, Common, FitArgs, OptimizeArgs, SimulateArgs, SweepArgs};

/// Embedded in every JSON output so a run can be repeated from its files.
#[derive(Serialize)]
struct Run {
    params: PublishedParams,
    dt: f64,
    seed: u64,
}

impl Run {
    fn new(p: &ModelParams, common: &Common) -> Self {
        Self {
            params: p.to_published(),
            dt: common.dt,
            seed: common.seed,
        }
    }
}

#[derive(Serialize)]
struct Extremum {
    t_min: f64,
    value: f64,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    #[serde(flatten)]
    run: Run,
    source: &'a Source,
    horizon_min: f64,
    record_stride: usize,
    rows: usize,
    /// Extremes of E over the recorded rows.
    peak_e: Extremum,
    min_e: Extremum,
    final_e_b: f64,
    total_dose_ug: f64,
    schedule: &'a DoseSchedule,
}

/// First grid point at or after `t`.
fn grid_ceil(t: f64, dt: f64) -> f64 {
    (t / dt - 1e-9).ceil().max(0.0) * dt
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let common = &args.common;
    inputs::check_dt(common.dt)?;
    if args.stride == 0 {
        bail!("--stride must be at least 1");
    }
    let p = inputs::params(common)?;
    let (schedule, source) = inputs::schedule(&args.source, args.weeks, common.dt)?;
    let t_end = grid_ceil(schedule.horizon(), common.dt);
    let traj = integrate(
        &p,
        State::rest(&p),
        &schedule,
        common.dt,
        t_end,
        args.stride,
    )?;

    let extremum = |better: fn(f64, f64) -> bool| {
        let mut best = 0;
        for (i, &e) in traj.effects().iter().enumerate() {
            if better(e, traj.effects()[best]) {
                best = i;
            }
        }
        Extremum {
            t_min: traj.times()[best],
            value: traj.effects()[best],
        }
    };
    let summary = SimulateSummary {
        run: Run::new(&p, common),
        source: &source,
        horizon_min: t_end,
        record_stride: args.stride,
        rows: traj.len(),
        peak_e: extremum(|a, b| a > b),
        min_e: extremum(|a, b| a < b),
        final_e_b: traj.states().last().map_or(p.e0, |s| s.e_b),
        total_dose_ug: schedule.total_mass(),
        schedule: &schedule,
    };

    let mut out = Outputs::default();
    out.text("trajectory.csv", traj.to_csv_string());
    out.json("summary.json", &summary)?;
    out.write(&common.out)?;
    println!(
        "simulated {} min ({} rows): peak E {:.4} at {} min, min E {:.4}, final E_b {:.4}",
        t_end,
        traj.len(),
        summary.peak_e.value,
        summary.peak_e.t_min,
        summary.min_e.value,
        summary.final_e_b
    );
    Ok(())
}

#[derive(Serialize)]
struct ToleranceEstimate {
    /// "observed" when the effects came from flags, else "equilibrium".
    source: &'static str,
    e_drug: f64,
    e_drug_tol: f64,
    k4: f64,
}

#[derive(Serialize)]
struct Analysis {
    #[serde(flatten)]
    run: Run,
    equilibrium: EquilibriumSummary,
    /// Absent when the dose has no effect to compare against.
    k4_estimate: Option<ToleranceEstimate>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let common = &args.common;
    inputs::check_dt(common.dt)?;
    let p = inputs::params(common)?;
    let rate = args.dose_rate.unwrap_or(CUP_MASS_UG / MINUTES_PER_DAY);
    let equilibrium = constant_dose_equilibrium(&p, rate)?;

    let k4_estimate = match (args.e_drug, args.e_drug_tol) {
        (Some(e_drug), Some(e_drug_tol)) => Some(ToleranceEstimate {
            source: "observed",
            e_drug,
            e_drug_tol,
            k4: estimate_k4(p.k6, p.e0, e_drug, e_drug_tol)?,
        }),
        _ if equilibrium.e_drug != p.e0 => Some(ToleranceEstimate {
            source: "equilibrium",
            e_drug: equilibrium.e_drug,
            e_drug_tol: equilibrium.e_drug_tol,
            k4: estimate_k4(p.k6, p.e0, equilibrium.e_drug, equilibrium.e_drug_tol)?,
        }),
        _ => None,
    };

    let report = Analysis {
        run: Run::new(&p, common),
        equilibrium,
        k4_estimate,
    };
    let mut out = Outputs::default();
    out.json("analysis.json", &report)?;
    out.write(&common.out)?;
    println!(
        "dose {:.4} ug/min: C_eq {:.4}, E_drug {:.4}, E_drug+tol {:.4}, E_withdrawal {:.4}",
        rate,
        equilibrium.c_eq,
        equilibrium.e_drug,
        equilibrium.e_drug_tol,
        equilibrium.e_withdrawal
    );
    Ok(())
}

#[derive(Serialize)]
struct Optimization<'a> {
    #[serde(flatten)]
    run: Run,
    condition: Option<&'a str>,
    constraint: Constraint,
    objective: &'a ObjectiveSpec,
    template: &'a WeeklyPlan,
    settings: OptimizerSettings,
    /// Sampled alertness of the scored week under the best plan.
    alertness: [f64; 7],
    result: &'a OptResult,
}

pub fn optimize(args: &OptimizeArgs) -> Result<()> {
    let common = &args.common;
    inputs::check_dt(common.dt)?;
    if args.starts == 0 {
        bail!("--starts must be at least 1");
    }
    let (p, constraint) = match &args.condition {
        Some(name) => condition(name)?,
        None => {
            let spec = args
                .constraint
                .as_deref()
                .context("--constraint (daily:CAP or weekly:CAP) or --condition is required")?;
            (inputs::params(common)?, spec.parse::<Constraint>()?)
        }
    };
    let template = match &args.plan {
        Some(arg) => inputs::plan(arg)?,
        None => WeeklyPlan::default(),
    };
    let spec = inputs::objective(args.objective.as_deref())?;
    let settings = OptimizerSettings {
        dt: common.dt,
        ..OptimizerSettings::default()
    };

    let result = optimize_with(
        &p,
        &template,
        &spec,
        &constraint,
        common.seed,
        args.starts,
        &settings,
    )?;
    let best = WeeklyPlan {
        doses: result.doses,
        ..template
    };
    let sampled = alertness(&p, &best, &spec, common.dt)?;
    let schedule = plan_to_schedule(&best, spec.horizon_weeks)?.snapped(common.dt)?;
    let horizon = grid_ceil(spec.horizon_min(), common.dt);
    let traj = integrate(&p, State::rest(&p), &schedule, common.dt, horizon, 1)?;
    let week_start = spec.week() as f64 * MINUTES_PER_WEEK;
    let week = traj.window(week_start, week_start + MINUTES_PER_WEEK);

    let report = Optimization {
        run: Run::new(&p, common),
        condition: args.condition.as_deref(),
        constraint,
        objective: &spec,
        template: &template,
        settings,
        alertness: sampled,
        result: &result,
    };
    let mut out = Outputs::default();
    out.json("optimize.json", &report)?;
    out.text("optimal_week.csv", week.to_csv_string());
    out.write(&common.out)?;
    println!(
        "best of {} starts: doses [{}], f = {:.6}{}",
        result.starts,
        result
            .doses
            .iter()
            .map(|d| format!("{d:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
        result.f_value,
        if result.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    Ok(())
}

#[derive(Serialize)]
struct SeriesInfo {
    path: String,
    channel: calibration::Channel,
    points: usize,
}

struct Fit {
    params: ModelParams,
    schedule: DoseSchedule,
    source: Source,
    observed: Vec<ObservedSeries>,
    info: Vec<SeriesInfo>,
}

fn load_fit(args: &FitArgs) -> Result<Fit> {
    let common = &args.common;
    inputs::check_dt(common.dt)?;
    let params = inputs::params(common)?;
    let (schedule, source) = inputs::schedule(&args.source, args.weeks, common.dt)?;
    let mut observed = Vec::new();
    let mut info = Vec::new();
    for path in &args.observations {
        let series = load_series(path)?;
        info.push(SeriesInfo {
            path: path.display().to_string(),
            channel: series.channel(),
            points: series.points().len(),
        });
        observed.push(series);
    }
    Ok(Fit {
        params,
        schedule,
        source,
        observed,
        info,
    })
}

#[derive(Serialize)]
struct LossReport<'a> {
    #[serde(flatten)]
    run: Run,
    source: &'a Source,
    observations: &'a [SeriesInfo],
    loss: f64,
}

pub fn fit_loss(args: &FitArgs) -> Result<()> {
    let fit = load_fit(args)?;
    let loss = calibration::loss(&fit.params, &fit.schedule, &fit.observed, args.common.dt)?;
    let report = LossReport {
        run: Run::new(&fit.params, &args.common),
        source: &fit.source,
        observations: &fit.info,
        loss,
    };
    let mut out = Outputs::default();
    out.json("loss.json", &report)?;
    out.write(&args.common.out)?;
    println!("loss over {} series: {loss:.6}", fit.observed.len());
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    loss: f64,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    #[serde(flatten)]
    run: Run,
    field: &'a str,
    source: &'a Source,
    observations: &'a [SeriesInfo],
    rows: Vec<SweepRow>,
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let fit = load_fit(&args.fit)?;
    let common = &args.fit.common;
    let table = calibration::sweep(
        &fit.params,
        &args.field,
        &args.values,
        &fit.schedule,
        &fit.observed,
        common.dt,
    )?;

    let mut csv = String::from("value,loss\n");
    for (value, loss) in &table {
        csv.push_str(&format!("{value:?},{loss:?}\n"));
    }
    let best = table
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .copied()
        .expect("at least one value");
    let report = SweepReport {
        run: Run::new(&fit.params, common),
        field: &args.field,
        source: &fit.source,
        observations: &fit.info,
        rows: table
            .into_iter()
            .map(|(value, loss)| SweepRow { value, loss })
            .collect(),
    };
    let mut out = Outputs::default();
    out.text("sweep.csv", csv);
    out.json("sweep.json", &report)?;
    out.write(&common.out)?;
    println!(
        "{} values of {}: lowest loss {:.6} at {}",
        report.rows.len(),
        args.field,
        best.1,
        best.0
    );
    Ok(())
}
