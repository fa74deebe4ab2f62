//! Drivers for the steady uniform flow and the granular column collapse.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::multilayer::{
    interface_pressure, mechanical_energy, shear_estimate, Environment, GridState, LayerPartition,
    ShearOrder,
};
use crate::rheology::{FrictionLaw, Regularization, RheologyParams};
use crate::scenarios::{
    collapse_initial, deposit_diagnostics, front_cell, front_position, CollapseSpec, DepositDiagnostics,
    UniformFlowSpec, FRONT_THRESHOLD,
};
use crate::solver::{Boundary, BoundaryPair, RunSummary, Sink, Solver, SolverConfig, StepReport};

/// Settings of a steady uniform-flow computation.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformFlowRun {
    pub spec: UniformFlowSpec,
    pub layers: usize,
    pub nx: usize,
    /// Mesh spacing \[m\]; the state stays uniform, so this only sets the time step.
    pub dx: f64,
    pub cfl: f64,
    pub shear_order: ShearOrder,
    pub friction: FrictionLaw,
    pub regularization: Regularization,
    /// Steady once every layer acceleration falls below this \[m/s²\].
    pub tolerance: f64,
    /// Give up after this simulated time \[s\].
    pub t_max: f64,
}

impl UniformFlowRun {
    pub fn new(spec: UniformFlowSpec, layers: usize) -> Self {
        Self {
            spec,
            layers,
            nx: 4,
            dx: 0.01,
            cfl: 0.5,
            shear_order: ShearOrder::First,
            friction: FrictionLaw::MuI,
            regularization: Regularization::Delta { delta: 1e-8 },
            tolerance: 1e-6,
            t_max: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformFlowOutcome {
    /// Layer velocities of the middle cell, bottom first.
    pub velocities: Vec<f64>,
    /// μ(I) at the interior interfaces 1..N of the middle cell.
    pub interface_friction: Vec<f64>,
    pub t: f64,
    pub steps: usize,
    pub converged: bool,
    /// Largest layer acceleration of the last step \[m/s²\].
    pub residual: f64,
    pub wall_time_s: f64,
}

impl UniformFlowOutcome {
    pub fn surface_velocity(&self) -> f64 {
        *self.velocities.last().unwrap_or(&0.0)
    }
}

/// Releases a layer of uniform thickness at rest on the slope and integrates
/// with open boundaries until the velocities stop changing.
pub fn run_uniform_flow(run: &UniformFlowRun) -> Result<UniformFlowOutcome> {
    if !(run.spec.depth > 0.0) {
        return Err(Error::invalid("depth", "must be positive"));
    }
    if !(run.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let started = Instant::now();
    let partition = LayerPartition::uniform(run.layers)?;
    let env = Environment::new(run.spec.theta)?;
    let config = SolverConfig {
        cfl: run.cfl,
        t_end: run.t_max,
        shear_order: run.shear_order,
        friction: run.friction,
        regularization: run.regularization,
        boundary: BoundaryPair {
            left: Boundary::Open,
            right: Boundary::Open,
        },
        stop_at_rest: false,
        ..SolverConfig::default()
    };
    let mut solver = Solver::new(env, partition, run.spec.rheology, config)?;
    let mut state = GridState::new(run.nx, 0.0, run.dx, run.layers)?;
    state.h.fill(run.spec.depth);

    let mid = run.nx / 2;
    let mut steps = 0;
    let mut residual = f64::INFINITY;
    let mut previous = state.column(mid).to_vec();
    while state.t < run.t_max {
        let report = solver.step(&mut state)?;
        steps += 1;
        if report.dt == 0.0 {
            break;
        }
        residual = state
            .column(mid)
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs() / report.dt)
            .fold(0.0, f64::max);
        previous.copy_from_slice(state.column(mid));
        if residual < run.tolerance {
            break;
        }
    }
    let closure = solver.closure();
    let shear = shear_estimate(&state, &solver.partition, mid, closure.shear_order);
    let rho = closure.rho();
    let interface_friction = (1..run.layers)
        .map(|a| {
            let p = interface_pressure(state.h[mid], &solver.partition, &solver.env, rho, a);
            closure.interface_friction(shear[a], p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UniformFlowOutcome {
        velocities: state.column(mid).to_vec(),
        interface_friction,
        t: state.t,
        steps,
        converged: residual < run.tolerance,
        residual,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Settings of one collapse computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRun {
    pub spec: CollapseSpec,
    pub rheology: RheologyParams,
    pub layers: usize,
    pub dx: f64,
    pub solver: SolverConfig,
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub x_front: f64,
    /// Largest layer speed in the front cell \[m/s\].
    pub front_speed: f64,
    pub max_speed: f64,
    pub mass: f64,
    pub energy: f64,
}

/// Sink that records per-step diagnostics, the states at the snapshot
/// cadence, and the state at which the front came to rest.
///
/// The front counts as stopped once every layer speed in the front cell stays
/// below `u_stop` for `n_stop` consecutive steps; the recorded state is the one
/// at the start of the last such streak.
pub struct CollapseRecorder {
    h_i: f64,
    u_stop: f64,
    n_stop: usize,
    streak: usize,
    streak_state: Option<GridState>,
    pub rows: Vec<DiagnosticRow>,
    pub snapshots: Vec<GridState>,
}

impl CollapseRecorder {
    pub fn new(h_i: f64, u_stop: f64, n_stop: usize) -> Self {
        Self {
            h_i,
            u_stop,
            n_stop,
            streak: 0,
            streak_state: None,
            rows: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    /// State at which the front stopped, if it did.
    pub fn front_stop(&self) -> Option<&GridState> {
        if self.streak >= self.n_stop {
            self.streak_state.as_ref()
        } else {
            None
        }
    }
}

impl Sink for CollapseRecorder {
    fn snapshot(&mut self, state: &GridState) -> Result<()> {
        if self.snapshots.last().map(|s| s.t) != Some(state.t) {
            self.snapshots.push(state.clone());
        }
        Ok(())
    }

    fn step(&mut self, report: &StepReport, state: &GridState) -> Result<()> {
        let front = front_cell(state, self.h_i, FRONT_THRESHOLD);
        let front_speed = front.map_or(0.0, |i| state.column(i).iter().fold(0.0f64, |m, u| m.max(u.abs())));
        if front_speed < self.u_stop {
            if self.streak == 0 {
                self.streak_state = Some(state.clone());
            }
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.rows.push(DiagnosticRow {
            t: report.t,
            x_front: front_position(state, self.h_i, FRONT_THRESHOLD),
            front_speed,
            max_speed: report.max_speed,
            mass: report.mass,
            energy: report.energy,
        });
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CollapseOutcome {
    pub summary: RunSummary,
    /// Diagnostics at the time the front stopped (censored when it never did).
    pub deposit: DepositDiagnostics,
    /// Thickness when the front stopped, or at the end of the run.
    pub deposit_h: Vec<f64>,
    pub rows: Vec<DiagnosticRow>,
    pub snapshots: Vec<GridState>,
    pub initial_energy: f64,
    pub final_energy: f64,
}

/// Runs a collapse to quiescence (or `t_end`) and evaluates the deposit.
pub fn run_collapse(run: &CollapseRun) -> Result<CollapseOutcome> {
    let partition = LayerPartition::uniform(run.layers)?;
    let initial = collapse_initial(&run.spec, run.dx, &partition)?;
    let env = Environment::new(run.spec.theta)?;
    let mut solver = Solver::new(env, partition, run.rheology, run.solver.clone())?;
    let mut recorder = CollapseRecorder::new(run.spec.h_i, run.solver.u_stop, run.solver.n_stop);
    let initial_energy = solver.energy(&initial);
    let summary = solver.run(initial, &mut recorder)?;
    let (deposit, deposit_h) = match recorder.front_stop() {
        Some(at_stop) => (
            deposit_diagnostics(at_stop, Some(at_stop.t), run.spec.h_i, FRONT_THRESHOLD),
            at_stop.h.clone(),
        ),
        None => (
            deposit_diagnostics(&summary.state, None, run.spec.h_i, FRONT_THRESHOLD),
            summary.state.h.clone(),
        ),
    };
    let final_energy = mechanical_energy(&summary.state, &solver.partition, &solver.env, solver.rho());
    Ok(CollapseOutcome {
        summary,
        deposit,
        deposit_h,
        rows: recorder.rows,
        snapshots: recorder.snapshots,
        initial_energy,
        final_energy,
    })
}
