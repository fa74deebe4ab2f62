//! Split time integration of the layered model.
//!
//! One step is transport (`hyperbolic_step`) followed by the implicit column
//! solve (`exchange_step`), which couples the layers and applies the basal
//! Coulomb friction. For a single layer the latter reduces to the projection
//! of `friction_step`.

mod exchange;
mod hyperbolic;
mod tridiag;

pub use exchange::{
    basal_friction_coefficients, exchange_step, friction_bounds, exchange_with_closure, friction_step, frozen_viscosity, ExchangeWorkspace,
};
pub use hyperbolic::{hyperbolic_step, TransportWorkspace};
pub use tridiag::solve_in_place;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilayer::{
    mechanical_energy, Closure, Environment, GridState, LayerPartition, ShearOrder,
};
use crate::rheology::{FrictionLaw, Regularization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Zero-order extrapolation.
    Open,
    /// Reflecting wall.
    Wall,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "wall" => Ok(Boundary::Wall),
            o => Err(Error::Config(format!("unknown boundary `{o}`"))),
        }
    }
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Wall => "wall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryPair {
    pub left: Boundary,
    pub right: Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub shear_order: ShearOrder,
    pub friction: FrictionLaw,
    pub regularization: Regularization,
    pub boundary: BoundaryPair,
    /// Speed below which the flow counts as stopped \[m/s\].
    pub u_stop: f64,
    /// Consecutive slow steps required to stop the run.
    pub n_stop: usize,
    /// Stop the run at quiescence instead of integrating to `t_end`.
    pub stop_at_rest: bool,
    /// Snapshot cadence \[s\]; `None` keeps only the initial and final states.
    pub snapshot_interval: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 10.0,
            max_steps: 10_000_000,
            shear_order: ShearOrder::First,
            friction: FrictionLaw::MuI,
            regularization: Regularization::default(),
            boundary: BoundaryPair {
                left: Boundary::Wall,
                right: Boundary::Wall,
            },
            u_stop: 1e-3,
            n_stop: 10,
            stop_at_rest: true,
            snapshot_interval: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("cfl", "must lie in (0, 1]"));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "must be non-negative"));
        }
        if !(self.u_stop > 0.0) {
            return Err(Error::invalid("u_stop", "must be positive"));
        }
        if let Some(dt) = self.snapshot_interval {
            if !(dt > 0.0) {
                return Err(Error::invalid("snapshot_interval", "must be positive"));
            }
        }
        self.regularization.validate()
    }
}

/// Diagnostics of one composed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    /// Mechanical energy including the downslope potential \[J/m\].
    pub energy: f64,
    pub max_speed: f64,
    pub energy_increase_flag: bool,
    /// Energy gained over the step, zero when it decreased.
    pub energy_increase: f64,
}

/// Receives the state while a run progresses.
pub trait Sink {
    fn snapshot(&mut self, _state: &GridState) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _report: &StepReport, _state: &GridState) -> Result<()> {
        Ok(())
    }
}

/// Sink that ignores everything.
pub struct NullSink;

impl Sink for NullSink {}

/// Sink that keeps every snapshot in memory.
#[derive(Default)]
pub struct MemorySink {
    pub snapshots: Vec<GridState>,
    pub reports: Vec<StepReport>,
}

impl Sink for MemorySink {
    fn snapshot(&mut self, state: &GridState) -> Result<()> {
        self.snapshots.push(state.clone());
        Ok(())
    }

    fn step(&mut self, report: &StepReport, _state: &GridState) -> Result<()> {
        self.reports.push(*report);
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub state: GridState,
    pub steps: usize,
    /// Start of the final slow streak, if the flow came to rest.
    pub stop_time: Option<f64>,
    pub initial_mass: f64,
    pub initial_energy: f64,
    /// Largest relative mass change over a single step.
    pub max_step_mass_drift: f64,
    /// Sum of all per-step energy increases.
    pub cumulative_energy_increase: f64,
}

/// Time step from the CFL bound, capped by the time left to `t_end`.
pub fn stable_dt(state: &GridState, env: &Environment, cfl: f64, t_end: f64) -> f64 {
    let remaining = (t_end - state.t).max(0.0);
    let g_n = env.g_n();
    let mut speed = 0.0f64;
    for i in 0..state.nx() {
        if !state.is_wet(i) {
            continue;
        }
        let c = (g_n * state.h[i]).sqrt();
        for u in state.column(i) {
            speed = speed.max(u.abs() + c);
        }
    }
    if speed == 0.0 {
        return remaining;
    }
    (cfl * state.dx / speed).min(remaining)
}

/// A configured integrator with its scratch buffers.
pub struct Solver {
    pub env: Environment,
    pub partition: LayerPartition,
    pub rheology: crate::rheology::RheologyParams,
    pub config: SolverConfig,
    transport: TransportWorkspace,
    exchange: ExchangeWorkspace,
    transfer: Vec<f64>,
    viscosity: Vec<f64>,
    bounds: Vec<f64>,
    steps: usize,
}

impl Solver {
    pub fn new(
        env: Environment,
        partition: LayerPartition,
        rheology: crate::rheology::RheologyParams,
        config: SolverConfig,
    ) -> Result<Self> {
        env.validate()?;
        rheology.validate()?;
        config.validate()?;
        Ok(Self {
            env,
            partition,
            rheology,
            config,
            transport: TransportWorkspace::default(),
            exchange: ExchangeWorkspace::default(),
            transfer: Vec::new(),
            viscosity: Vec::new(),
            bounds: Vec::new(),
            steps: 0,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rheology.rho()
    }

    /// Closure built from the rheology and the current configuration.
    pub fn closure(&self) -> Closure {
        Closure {
            rheology: self.rheology,
            law: self.config.friction,
            regularization: self.config.regularization,
            shear_order: self.config.shear_order,
        }
    }

    pub fn energy(&self, state: &GridState) -> f64 {
        mechanical_energy(state, &self.partition, &self.env, self.rho())
    }

    /// One composed step of length `dt`.
    pub fn advance(&mut self, state: &mut GridState, dt: f64) -> Result<()> {
        if state.layers() != self.partition.len() {
            return Err(Error::invalid("layers", "state and partition disagree"));
        }
        // Viscosities and basal friction coefficients are frozen at the start of the step.
        let closure = self.closure();
        frozen_viscosity(state, &self.partition, &self.env, &closure, &mut self.viscosity)?;
        basal_friction_coefficients(state, &self.partition, &self.env, &closure, &mut self.bounds)?;
        hyperbolic_step(
            state,
            &self.env,
            &self.partition,
            self.config.boundary,
            dt,
            &mut self.transport,
            &mut self.transfer,
        )?;
        friction_bounds(state, &self.env, self.rho(), &mut self.bounds);
        exchange_step(
            state,
            &self.partition,
            self.rho(),
            &self.viscosity,
            &self.transfer,
            &self.bounds,
            dt,
            &mut self.exchange,
        )?;
        state.t += dt;
        Ok(())
    }

    /// Stable step followed by [`Solver::advance`], with diagnostics.
    pub fn step(&mut self, state: &mut GridState) -> Result<StepReport> {
        let dt = stable_dt(state, &self.env, self.config.cfl, self.config.t_end);
        let energy_before = self.energy(state);
        if dt > 0.0 {
            self.advance(state, dt)?;
        }
        self.steps += 1;
        let energy = self.energy(state);
        let increase = (energy - energy_before).max(0.0);
        Ok(StepReport {
            step: self.steps,
            t: state.t,
            dt,
            mass: state.mass(),
            energy,
            max_speed: state.max_speed(),
            energy_increase_flag: increase > 1e-12 * energy_before.abs(),
            energy_increase: increase,
        })
    }

    /// Integrates to `t_end`, or to quiescence when `stop_at_rest` is set.
    pub fn run(&mut self, initial: GridState, sink: &mut dyn Sink) -> Result<RunSummary> {
        let mut state = initial;
        let initial_mass = state.mass();
        let initial_energy = self.energy(&state);
        sink.snapshot(&state)?;
        let mut next_snapshot = self.config.snapshot_interval.map(|dt| state.t + dt);
        let mut slow_streak = 0usize;
        let mut streak_start = None;
        let mut max_drift = 0.0f64;
        let mut cumulative = 0.0;
        let mut steps = 0usize;
        let t_end = self.config.t_end;

        while state.t < t_end {
            if steps >= self.config.max_steps {
                sink.snapshot(&state)?;
                return Err(Error::MaxStepsExceeded(self.config.max_steps));
            }
            let mass_before = state.mass();
            let report = self.step(&mut state)?;
            steps += 1;
            if mass_before > 0.0 {
                max_drift = max_drift.max((report.mass - mass_before).abs() / mass_before);
            }
            cumulative += report.energy_increase;
            sink.step(&report, &state)?;
            if let Some(t_snap) = next_snapshot {
                if state.t >= t_snap {
                    sink.snapshot(&state)?;
                    let every = self.config.snapshot_interval.unwrap_or(f64::INFINITY);
                    let mut t_next = t_snap;
                    while t_next <= state.t {
                        t_next += every;
                    }
                    next_snapshot = Some(t_next);
                }
            }
            if report.max_speed < self.config.u_stop {
                if slow_streak == 0 {
                    streak_start = Some(state.t);
                }
                slow_streak += 1;
                if self.config.stop_at_rest && slow_streak >= self.config.n_stop {
                    break;
                }
            } else {
                slow_streak = 0;
                streak_start = None;
            }
            if report.dt == 0.0 {
                break;
            }
        }
        if steps > 0 {
            sink.snapshot(&state)?;
        }
        let stop_time = if slow_streak >= self.config.n_stop {
            streak_start
        } else {
            None
        };
        Ok(RunSummary {
            state,
            steps,
            stop_time,
            initial_mass,
            initial_energy,
            max_step_mass_drift: max_drift,
            cumulative_energy_increase: cumulative,
        })
    }
}

#[cfg(test)]
mod tests;
