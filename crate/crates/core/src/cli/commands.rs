use std::path::Path;

use rayon::prelude::*;

use super::config::{CollapseScenario, RunConfig, Scenario, SweepScenario, UniformFlowScenario};
use super::output::{self, num, Table};
use crate::error::{Error, Result};
use crate::multilayer::{Environment, LayerPartition, ShearOrder};
use crate::rheology::FrictionLaw;
use crate::runs::{run_collapse, run_uniform_flow, CollapseOutcome, CollapseRun, UniformFlowRun};
use crate::scenarios::{
    bagnold_profile, experiment_matrix, layer_average_bagnold, relative_error, CollapseSpec, UniformFlowSpec,
};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// Outputs were written, but a check failed.
    ValidationFailed(String),
}

pub fn execute(config: &RunConfig) -> Result<Status> {
    let dir = &config.output.dir;
    output::create_dir(dir)?;
    output::write_text(&dir.join("config.toml"), &config.echo()?)?;
    match &config.scenario {
        Scenario::UniformFlow(s) => uniform_flow(config, s, dir),
        Scenario::Collapse(s) => collapse(config, s, dir),
        Scenario::Sweep(s) => sweep(config, s, dir),
    }
}

fn uniform_run(config: &RunConfig, s: &UniformFlowScenario, theta: f64, layers: usize) -> UniformFlowRun {
    UniformFlowRun {
        spec: UniformFlowSpec {
            depth: s.depth,
            theta,
            rheology: config.rheology,
        },
        layers,
        nx: s.nx,
        dx: s.dx,
        cfl: config.solver.cfl,
        shear_order: config.solver.shear_order,
        friction: config.solver.friction,
        regularization: config.solver.regularization,
        tolerance: s.tolerance,
        t_max: s.t_max,
    }
}

fn uniform_flow(config: &RunConfig, s: &UniformFlowScenario, dir: &Path) -> Result<Status> {
    let mut failures = Vec::new();

    let run = uniform_run(config, s, s.theta, s.layers);
    if !run.spec.is_flowing() {
        return Err(Error::Config(format!(
            "theta = {} is outside the flowing regime mu_s < tan(theta) < mu_2",
            s.theta
        )));
    }
    let out = run_uniform_flow(&run)?;
    if !out.converged {
        failures.push(format!("N = {} did not reach a steady state by t = {}", s.layers, s.t_max));
    }
    let partition = LayerPartition::uniform(s.layers)?;
    let exact = layer_average_bagnold(&run.spec, &partition)?;
    let mut t = Table::create(
        &dir.join("profile.csv"),
        &["layer_index", "z_mid", "u_sim", "u_exact", "p_exact", "tau_exact"],
    )?;
    for k in 0..s.layers {
        let z = s.depth * 0.5 * (partition.cumulative(k) + partition.cumulative(k + 1));
        let point = bagnold_profile(z, &run.spec)?;
        t.row([
            (k + 1).to_string(),
            num(z),
            num(out.velocities[k]),
            num(exact[k]),
            num(point.pressure),
            num(point.shear_stress),
        ])?;
    }
    t.finish()?;

    let errors = s
        .error_layers
        .par_iter()
        .map(|&n| {
            let run = uniform_run(config, s, s.theta, n);
            let out = run_uniform_flow(&run)?;
            let exact = layer_average_bagnold(&run.spec, &LayerPartition::uniform(n)?)?;
            Ok((n, relative_error(&out.velocities, &exact)?, out.wall_time_s, out.converged))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::create(&dir.join("error.csv"), &["N", "relative_error", "wall_time_s"])?;
    for &(n, err, wall, converged) in &errors {
        t.row([n.to_string(), num(err), num(wall)])?;
        if err > s.error_bound {
            failures.push(format!("N = {n}: relative error {err:.4} exceeds {}", s.error_bound));
        }
        if !converged {
            failures.push(format!("N = {n} did not reach a steady state by t = {}", s.t_max));
        }
    }
    t.finish()?;

    let sweep = s
        .theta_sweep
        .par_iter()
        .map(|&theta| {
            let run = uniform_run(config, s, theta, s.layers);
            let out = run_uniform_flow(&run)?;
            let exact = if run.spec.is_flowing() {
                bagnold_profile(s.depth, &run.spec)?.u
            } else {
                0.0
            };
            Ok((theta, out.surface_velocity(), exact, out.converged))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::create(
        &dir.join("surface_velocity_vs_theta.csv"),
        &["theta", "u_surface", "u_surface_exact", "converged"],
    )?;
    for (theta, u, exact, converged) in sweep {
        t.row([num(theta), num(u), num(exact), u8::from(converged).to_string()])?;
    }
    t.finish()?;

    Ok(status(failures))
}

fn status(failures: Vec<String>) -> Status {
    if failures.is_empty() {
        Status::Ok
    } else {
        Status::ValidationFailed(failures.join("; "))
    }
}

fn collapse(config: &RunConfig, s: &CollapseScenario, dir: &Path) -> Result<Status> {
    let spec = CollapseSpec {
        h0: s.h0,
        r0: s.r0,
        h_i: s.h_i,
        theta: s.theta_deg.to_radians(),
        x_max: s.x_max,
    };
    let mut solver = config.solver.clone();
    solver.snapshot_interval = Some(config.output.snapshot_interval);
    let run = CollapseRun {
        spec,
        rheology: config.rheology,
        layers: s.layers,
        dx: s.dx,
        solver,
    };
    let out = run_collapse(&run)?;
    let partition = LayerPartition::uniform(s.layers)?;
    let env = Environment::new(spec.theta)?;
    output::write_snapshots(&dir.join("snapshots.csv"), &out.snapshots)?;
    output::write_w_profiles(
        &dir.join("w_profiles.csv"),
        &out.snapshots,
        &config.output.stations,
        &partition,
        &env,
    )?;
    write_collapse_results(dir, &out)?;
    if out.deposit.censored {
        return Ok(Status::ValidationFailed(format!(
            "the front was still moving at t = {}",
            out.deposit.stop_time
        )));
    }
    Ok(Status::Ok)
}

fn write_collapse_results(dir: &Path, out: &CollapseOutcome) -> Result<()> {
    output::write_diagnostics(&dir.join("diagnostics.csv"), &out.rows)?;
    output::write_deposit(&dir.join("deposit.csv"), &out.summary.state.x, &out.deposit_h)?;
    let d = out.deposit;
    output::write_summary(&dir.join("summary.csv"), d.runout, d.stop_time, d.max_thickness)
}

/// One cell of a sweep, in output order.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SweepCase {
    theta_deg: f64,
    h_i: f64,
    friction: FrictionLaw,
    layers: usize,
    shear_order: ShearOrder,
}

impl SweepCase {
    fn dir_name(&self) -> String {
        format!(
            "theta{}_hi{}_{}_N{}_order{}",
            self.theta_deg,
            self.h_i,
            self.friction.as_str(),
            self.layers,
            self.shear_order.as_u8()
        )
    }
}

fn sweep_cases(s: &SweepScenario) -> Vec<SweepCase> {
    let matrix = experiment_matrix();
    let mut cases = Vec::new();
    for &theta_deg in &s.thetas_deg {
        let h_values = match &s.h_i_values {
            Some(v) => v.clone(),
            None => matrix
                .iter()
                .find(|(t, _)| (t - theta_deg).abs() < 1e-9)
                .map(|(_, v)| v.clone())
                .unwrap_or_default(),
        };
        for &h_i in &h_values {
            for &friction in &s.friction_modes {
                for &layers in &s.layers_list {
                    for &shear_order in &s.shear_orders {
                        cases.push(SweepCase {
                            theta_deg,
                            h_i,
                            friction,
                            layers,
                            shear_order,
                        });
                    }
                }
            }
        }
    }
    cases
}

fn sweep(config: &RunConfig, s: &SweepScenario, dir: &Path) -> Result<Status> {
    let cases = sweep_cases(s);
    let results: Vec<Result<CollapseOutcome>> = cases
        .par_iter()
        .map(|c| {
            let mut solver = config.solver.clone();
            solver.friction = c.friction;
            solver.shear_order = c.shear_order;
            solver.snapshot_interval = None;
            let run = CollapseRun {
                spec: CollapseSpec {
                    h0: s.h0,
                    r0: s.r0,
                    h_i: c.h_i,
                    theta: c.theta_deg.to_radians(),
                    x_max: s.x_max,
                },
                rheology: config.rheology,
                layers: c.layers,
                dx: s.dx,
                solver,
            };
            let out = run_collapse(&run)?;
            let sub = dir.join(c.dir_name());
            output::create_dir(&sub)?;
            write_collapse_results(&sub, &out)?;
            Ok(out)
        })
        .collect();

    let mut failures = Vec::new();
    let mut t = Table::create(
        &dir.join("runout_vs_hi.csv"),
        &[
            "theta", "h_i", "friction_mode", "layers", "shear_order", "r_f", "t_f", "h_f", "r_f_over_h0",
            "t_f_over_tau_c", "status",
        ],
    )?;
    for (c, result) in cases.iter().zip(results) {
        let mut row = vec![
            num(c.theta_deg),
            num(c.h_i),
            c.friction.as_str().to_string(),
            c.layers.to_string(),
            c.shear_order.as_u8().to_string(),
        ];
        match result {
            Ok(out) => {
                let d = out.deposit;
                let tau_c = time_scale(s.h0, c.theta_deg);
                row.extend([
                    num(d.runout),
                    num(d.stop_time),
                    num(d.max_thickness),
                    num(d.runout / s.h0),
                    num(d.stop_time / tau_c),
                ]);
                if d.censored {
                    failures.push(format!("{}: censored", c.dir_name()));
                    row.push("censored".to_string());
                } else {
                    row.push("ok".to_string());
                }
            }
            Err(e) => {
                failures.push(format!("{}: {e}", c.dir_name()));
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(format!("failed: {e}"));
            }
        }
        t.row(&row)?;
    }
    t.finish()?;
    if cases.is_empty() {
        return Err(Error::Config("the sweep has no cases".into()));
    }
    Ok(status(failures))
}

fn time_scale(h0: f64, theta_deg: f64) -> f64 {
    CollapseSpec {
        h0,
        r0: 1.0,
        h_i: 0.0,
        theta: theta_deg.to_radians(),
        x_max: 1.0,
    }
    .time_scale()
}
