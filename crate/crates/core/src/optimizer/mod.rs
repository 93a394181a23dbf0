//! Weekly dose optimization.
//!
//! Maximizes the weighted square-root alertness objective over the seven
//! daily doses of a [`WeeklyPlan`], subject to a daily or weekly cap. The
//! search is projected gradient ascent with central finite-difference
//! gradients, Barzilai-Borwein trial steps and a monotone backtracking line
//! search, restarted from several uniform random points in `[0, 1]^7`.
//! Every objective evaluation is a full forward Euler simulation.

mod projection;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinetics::{effect, integrate_visit, ModelParams, State, Stepper};
use crate::regimen::{
    grid_index, objective, plan_to_schedule, ObjectiveSpec, WeeklyPlan, DAYS_PER_WEEK,
};

pub use projection::{project, Constraint, ConstraintKind};

type Doses = [f64; DAYS_PER_WEEK];

/// Tunables of the search. Defaults follow the documented contract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerSettings {
    /// Integration step (min).
    pub dt: f64,
    /// Finite-difference step (cups).
    pub fd_step: f64,
    /// Stop when the projected-gradient norm drops below this.
    pub grad_tol: f64,
    /// Stop when one iteration changes f by less than this.
    pub f_tol: f64,
    pub max_iter: usize,
    /// Sufficient-increase constant of the line search.
    pub armijo: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            dt: 1.0,
            fd_step: 1e-4,
            grad_tol: 1e-6,
            f_tol: 1e-8,
            max_iter: 10_000,
            armijo: 1e-4,
        }
    }
}

pub const DEFAULT_STARTS: usize = 8;

/// Outcome of one start of the multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartSummary {
    pub index: usize,
    pub initial: Doses,
    pub doses: Doses,
    pub f_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective after each accepted iteration, starting with the projected
    /// initial point.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub doses: Doses,
    pub f_value: f64,
    /// Objective evaluations summed over all starts.
    pub evaluations: usize,
    pub starts: usize,
    /// Whether the winning start met a convergence test.
    pub converged: bool,
    pub seed: u64,
    pub history: Vec<StartSummary>,
}

/// Objective of a weekly plan: simulate from rest over the spec's horizon,
/// read alertness at the sampling instants of the scored week, and score it.
///
/// Dosing windows are snapped to the `dt` grid before integrating.
pub fn evaluate_plan(
    p: &ModelParams,
    plan: &WeeklyPlan,
    spec: &ObjectiveSpec,
    dt: f64,
) -> Result<f64> {
    Ok(objective(&alertness(p, plan, spec, dt)?, &spec.weights))
}

/// The seven sampled alertness values used by [`evaluate_plan`].
pub fn alertness(
    p: &ModelParams,
    plan: &WeeklyPlan,
    spec: &ObjectiveSpec,
    dt: f64,
) -> Result<Doses> {
    spec.validate()?;
    let schedule = plan_to_schedule(plan, spec.horizon_weeks)?.snapped(dt)?;
    let times = spec.sample_times();
    let mut steps = [0usize; DAYS_PER_WEEK];
    for (k, t) in steps.iter_mut().zip(times) {
        *k = grid_index(t, dt)?;
    }
    let mut out = [0.0; DAYS_PER_WEEK];
    let mut next = 0;
    integrate_visit(
        p,
        State::rest(p),
        &schedule,
        dt,
        times[DAYS_PER_WEEK - 1],
        Stepper::Euler,
        |k, s| {
            if next < DAYS_PER_WEEK && k == steps[next] {
                out[next] = effect(p, s);
                next += 1;
            }
        },
    )?;
    Ok(out)
}

struct Problem<'a> {
    params: &'a ModelParams,
    template: &'a WeeklyPlan,
    spec: &'a ObjectiveSpec,
    constraint: &'a Constraint,
    settings: &'a OptimizerSettings,
}

impl Problem<'_> {
    fn eval(&self, doses: &Doses, count: &mut usize) -> Result<f64> {
        *count += 1;
        let plan = WeeklyPlan {
            doses: *doses,
            ..*self.template
        };
        evaluate_plan(self.params, &plan, self.spec, self.settings.dt)
    }

    /// Central differences, one-sided where a bound would be crossed.
    fn gradient(&self, x: &Doses, fx: f64, count: &mut usize) -> Result<Doses> {
        let h = self.settings.fd_step;
        let upper = match self.constraint.kind {
            ConstraintKind::DailyMax => self.constraint.day_bound(),
            ConstraintKind::WeeklyMax => f64::INFINITY,
        };
        let mut g = [0.0; DAYS_PER_WEEK];
        for i in 0..DAYS_PER_WEEK {
            let shifted = |delta: f64| {
                let mut y = *x;
                y[i] += delta;
                y
            };
            let can_down = x[i] - h >= 0.0;
            let can_up = x[i] + h <= upper;
            g[i] = match (can_down, can_up) {
                (true, true) => {
                    let up = self.eval(&shifted(h), count)?;
                    let down = self.eval(&shifted(-h), count)?;
                    (up - down) / (2.0 * h)
                }
                (false, _) => (self.eval(&shifted(h), count)? - fx) / h,
                (true, false) => (fx - self.eval(&shifted(-h), count)?) / h,
            };
        }
        Ok(g)
    }

    fn run_start(&self, index: usize, initial: Doses) -> Result<StartSummary> {
        let s = self.settings;
        let mut evaluations = 0;
        let mut x = project(&initial, self.constraint);
        let mut fx = self.eval(&x, &mut evaluations)?;
        let mut trace = vec![fx];
        let mut g = self.gradient(&x, fx, &mut evaluations)?;
        let mut step = 1.0;
        let mut converged = false;
        let mut iterations = 0;

        while iterations < s.max_iter {
            let pg = sub(&project(&add_scaled(&x, 1.0, &g), self.constraint), &x);
            if norm(&pg) < s.grad_tol {
                converged = true;
                break;
            }

            let mut alpha = step;
            let mut accepted = None;
            for _ in 0..60 {
                let candidate = project(&add_scaled(&x, alpha, &g), self.constraint);
                let dx = sub(&candidate, &x);
                if norm(&dx) == 0.0 {
                    break;
                }
                let fc = self.eval(&candidate, &mut evaluations)?;
                if fc >= fx + s.armijo * dot(&g, &dx) {
                    accepted = Some((candidate, fc, dx));
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            let Some((x_new, f_new, dx)) = accepted else {
                // no ascent left at working precision
                converged = true;
                break;
            };

            let g_new = self.gradient(&x_new, f_new, &mut evaluations)?;
            let dg = sub(&g_new, &g);
            let curvature = dot(&dx, &dg);
            step = if curvature < 0.0 {
                dot(&dx, &dx) / -curvature
            } else {
                alpha * 4.0
            }
            .clamp(1e-10, 1e6);

            let gain = f_new - fx;
            x = x_new;
            fx = f_new;
            g = g_new;
            trace.push(fx);
            if gain.abs() < s.f_tol {
                converged = true;
                break;
            }
        }

        Ok(StartSummary {
            index,
            initial,
            doses: x,
            f_value: fx,
            iterations,
            evaluations,
            converged,
            trace,
        })
    }
}

/// The four published benchmark conditions: tolerance on or off, crossed with
/// a 2-cup daily cap or a 10-cup weekly cap.
pub const CONDITIONS: [&str; 4] = [
    "no-tolerance-daily",
    "tolerance-daily",
    "no-tolerance-weekly",
    "tolerance-weekly",
];

/// Caffeine parameters and constraint for one of [`CONDITIONS`].
pub fn condition(name: &str) -> Result<(ModelParams, Constraint)> {
    let (tolerance, constraint) = match name {
        "no-tolerance-daily" => (false, Constraint::daily(2.0)?),
        "tolerance-daily" => (true, Constraint::daily(2.0)?),
        "no-tolerance-weekly" => (false, Constraint::weekly(10.0)?),
        "tolerance-weekly" => (true, Constraint::weekly(10.0)?),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: CONDITIONS.join(", "),
            })
        }
    };
    let p = ModelParams::caffeine();
    let p = if tolerance { p } else { p.without_tolerance() };
    Ok((p, constraint))
}

/// Multi-start maximization with default settings.
pub fn optimize(
    p: &ModelParams,
    template: &WeeklyPlan,
    spec: &ObjectiveSpec,
    constraint: &Constraint,
    seed: u64,
    starts: usize,
) -> Result<OptResult> {
    optimize_with(
        p,
        template,
        spec,
        constraint,
        seed,
        starts,
        &OptimizerSettings::default(),
    )
}

/// Starting points: `starts` vectors drawn uniformly from `[0, 1)^7`, in
/// order, from a ChaCha8 stream seeded with `seed`.
pub fn initial_points(seed: u64, starts: usize) -> Vec<Doses> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
        .collect()
}

pub fn optimize_with(
    p: &ModelParams,
    template: &WeeklyPlan,
    spec: &ObjectiveSpec,
    constraint: &Constraint,
    seed: u64,
    starts: usize,
    settings: &OptimizerSettings,
) -> Result<OptResult> {
    constraint.validate()?;
    template.validate()?;
    spec.validate()?;
    p.validate()?;
    let starts = starts.max(1);
    let problem = Problem {
        params: p,
        template,
        spec,
        constraint,
        settings,
    };

    let history = initial_points(seed, starts)
        .into_par_iter()
        .enumerate()
        .map(|(i, x0)| problem.run_start(i, x0))
        .collect::<Result<Vec<_>>>()?;

    // strict comparison keeps the lowest index on ties
    let best =
        history.iter().skip(1).fold(
            &history[0],
            |best, s| if s.f_value > best.f_value { s } else { best },
        );

    Ok(OptResult {
        doses: best.doses,
        f_value: best.f_value,
        evaluations: history.iter().map(|s| s.evaluations).sum(),
        starts,
        converged: best.converged,
        seed,
        history,
    })
}

fn add_scaled(x: &Doses, alpha: f64, g: &Doses) -> Doses {
    std::array::from_fn(|i| x[i] + alpha * g[i])
}

fn sub(a: &Doses, b: &Doses) -> Doses {
    std::array::from_fn(|i| a[i] - b[i])
}

fn dot(a: &Doses, b: &Doses) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &Doses) -> f64 {
    dot(a, a).sqrt()
}
