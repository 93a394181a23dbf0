use std::io::Write;

use serde::Serialize;

use super::{check_step, effect, euler_step_unchecked, rates, ModelParams, State};
use crate::error::{Error, Result};
use crate::regimen::{grid_index, DoseSchedule};

/// Fixed-step scheme used to advance the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stepper {
    /// Forward Euler. The only scheme used for optimization.
    Euler,
    /// Classical fourth-order Runge-Kutta, for convergence checks.
    Rk4,
}

impl Stepper {
    #[inline]
    fn step(self, p: &ModelParams, s: &State, dose_rate: f64, dt: f64) -> State {
        match self {
            Stepper::Euler => euler_step_unchecked(p, s, dose_rate, dt),
            Stepper::Rk4 => {
                let k1 = rates(p, s, dose_rate);
                let k2 = rates(p, &(*s + k1 * (0.5 * dt)), dose_rate);
                let k3 = rates(p, &(*s + k2 * (0.5 * dt)), dose_rate);
                let k4 = rates(p, &(*s + k3 * dt), dose_rate);
                *s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
            }
        }
    }
}

/// Sampled simulation output. `effects[i]` is always `effect(params, states[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<State>,
    effects: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn effects(&self) -> &[f64] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the recorded sample at exactly `time` (up to grid rounding).
    pub fn index_of(&self, time: f64) -> Option<usize> {
        let slack = 1e-9 * time.abs().max(1.0);
        let i = self.times.partition_point(|&t| t < time - slack);
        (i < self.times.len() && (self.times[i] - time).abs() <= slack).then_some(i)
    }

    /// Samples with `start <= t <= end`.
    pub fn window(&self, start: f64, end: f64) -> Trajectory {
        let lo = self.times.partition_point(|&t| t < start);
        let hi = self.times.partition_point(|&t| t <= end);
        Trajectory {
            times: self.times[lo..hi].to_vec(),
            states: self.states[lo..hi].to_vec(),
            effects: self.effects[lo..hi].to_vec(),
        }
    }

    /// Writes `t_min,C,C_mem,F,E_b,E` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_min,C,C_mem,F,E_b,E")?;
        for ((t, s), e) in self.times.iter().zip(&self.states).zip(&self.effects) {
            writeln!(
                out,
                "{t:?},{:?},{:?},{:?},{:?},{e:?}",
                s.c, s.c_mem, s.f, s.e_b
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Runs the fixed-step scheme from `s0` to `t_end` and calls `visit(k, state)`
/// for every grid point `k = 0..=t_end/dt` (time `k * dt`).
///
/// The dose rate is held constant within each step; every schedule breakpoint
/// and `t_end` must lie on the grid. Doses past the schedule horizon are zero.
pub fn integrate_visit<F>(
    p: &ModelParams,
    s0: State,
    schedule: &DoseSchedule,
    dt: f64,
    t_end: f64,
    stepper: Stepper,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &State),
{
    check_step(p, dt)?;
    if dt == 0.0 {
        return Err(Error::InvalidStep { dt });
    }
    if !s0.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let n_steps = grid_index(t_end, dt)?;
    let ranges = schedule.step_ranges(dt)?;

    let mut s = s0;
    let mut seg = 0;
    visit(0, &s);
    for k in 0..n_steps {
        while seg < ranges.len() && ranges[seg].1 <= k {
            seg += 1;
        }
        let rate = match ranges.get(seg) {
            Some(&(start, _, rate)) if start <= k => rate,
            _ => 0.0,
        };
        s = stepper.step(p, &s, rate, dt);
        visit(k + 1, &s);
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("simulated state"));
    }
    Ok(())
}

fn record(
    p: &ModelParams,
    s0: State,
    schedule: &DoseSchedule,
    dt: f64,
    t_end: f64,
    stride: usize,
    stepper: Stepper,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidParam {
            field: "record_stride".into(),
            reason: "must be at least 1".into(),
        });
    }
    let n_steps = grid_index(t_end, dt).unwrap_or(0);
    let capacity = n_steps / stride + 2;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        effects: Vec::with_capacity(capacity),
    };
    integrate_visit(p, s0, schedule, dt, t_end, stepper, |k, s| {
        if k % stride == 0 || k == n_steps {
            traj.times.push(k as f64 * dt);
            traj.states.push(*s);
            traj.effects.push(effect(p, s));
        }
    })?;
    Ok(traj)
}

/// Forward Euler simulation, recording every `record_stride`-th step plus the
/// final one. Identical inputs give bit-identical output.
pub fn integrate(
    p: &ModelParams,
    s0: State,
    schedule: &DoseSchedule,
    dt: f64,
    t_end: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    record(p, s0, schedule, dt, t_end, record_stride, Stepper::Euler)
}

/// Fourth-order fixed-step reference solution, recorded at every step.
pub fn integrate_reference(
    p: &ModelParams,
    s0: State,
    schedule: &DoseSchedule,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    record(p, s0, schedule, dt, t_end, 1, Stepper::Rk4)
}
