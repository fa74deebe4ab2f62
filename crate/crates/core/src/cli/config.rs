//! Run configuration: TOML files with `[rheology]`, `[solver]`, `[scenario]`
//! and `[output]` sections, command-line overrides, and the echo-back file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilayer::ShearOrder;
use crate::rheology::{FrictionLaw, Regularization, RheologyParams};
use crate::scenarios::{experiment_matrix, Preset, EXPERIMENT_COLUMN};
use crate::solver::{Boundary, BoundaryPair, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    UniformFlow,
    Collapse,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::UniformFlow => "uniform-flow",
            Command::Collapse => "collapse",
            Command::Sweep => "sweep",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform-flow" => Ok(Command::UniformFlow),
            "collapse" => Ok(Command::Collapse),
            "sweep" => Ok(Command::Sweep),
            o => Err(Error::Config(format!("unknown command `{o}`"))),
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRheology {
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    i0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_s: Option<f64>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(skip_serializing_if = "Option::is_none")]
    cfl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shear_order: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    friction: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regularization: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cap_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_stop: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_left: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_right: Option<String>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dx: Option<f64>,
    // uniform-flow
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_sweep: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_layers: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    // collapse
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
    // sweep
    #[serde(skip_serializing_if = "Option::is_none")]
    thetas_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_i_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    friction_modes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    layers_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shear_orders: Option<Vec<u8>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snapshot_interval: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stations: Option<Vec<f64>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    #[serde(default)]
    rheology: RawRheology,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    output: RawOutput,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Overrides {
    pub layers: Option<usize>,
    pub nx: Option<usize>,
    pub cfl: Option<f64>,
    pub friction: Option<FrictionLaw>,
    pub shear_order: Option<ShearOrder>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformFlowScenario {
    pub layers: usize,
    pub nx: usize,
    pub dx: f64,
    pub depth: f64,
    /// Slope \[rad\].
    pub theta: f64,
    /// Slopes \[rad\] of the surface-velocity sweep.
    pub theta_sweep: Vec<f64>,
    /// Layer counts listed in the error table.
    pub error_layers: Vec<usize>,
    /// Largest accepted relative error.
    pub error_bound: f64,
    /// Steady-state threshold on the layer accelerations \[m/s²\].
    pub tolerance: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseScenario {
    pub layers: usize,
    pub dx: f64,
    pub theta_deg: f64,
    pub h_i: f64,
    pub h0: f64,
    pub r0: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepScenario {
    pub dx: f64,
    pub thetas_deg: Vec<f64>,
    /// Bed thicknesses for every slope; `None` takes the experiment list of each slope.
    pub h_i_values: Option<Vec<f64>>,
    pub friction_modes: Vec<FrictionLaw>,
    pub layers_list: Vec<usize>,
    pub shear_orders: Vec<ShearOrder>,
    pub h0: f64,
    pub r0: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    UniformFlow(UniformFlowScenario),
    Collapse(CollapseScenario),
    Sweep(SweepScenario),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Snapshot cadence \[s\].
    pub snapshot_interval: f64,
    /// Abscissae \[m\] at which velocity profiles are written.
    pub stations: Vec<f64>,
}

/// Fully resolved configuration of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<Preset>,
    pub rheology: RheologyParams,
    pub solver: SolverConfig,
    pub scenario: Scenario,
    pub output: OutputSettings,
}

fn missing(key: &str) -> Error {
    Error::Config(format!("missing required key `{key}`"))
}

fn reject(command: Command, keys: &[(&str, bool)]) -> Result<()> {
    for (key, present) in keys {
        if *present {
            return Err(Error::Config(format!(
                "key `scenario.{key}` does not apply to command `{}`",
                command.as_str()
            )));
        }
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(field, "must be positive"))
    }
}

fn resolve_rheology(raw: &RawRheology) -> Result<(Option<Preset>, RheologyParams)> {
    let preset = raw.preset.as_deref().map(Preset::from_name).transpose()?;
    let base = preset.map(Preset::rheology);
    let pick = |v: Option<f64>, from: Option<f64>, key: &str| {
        v.or(from).ok_or_else(|| missing(&format!("rheology.{key}")))
    };
    let p = RheologyParams::new(
        pick(raw.mu_s, base.map(|b| b.mu_s), "mu_s")?,
        pick(raw.mu_2, base.map(|b| b.mu_2), "mu_2")?,
        pick(raw.i0, base.map(|b| b.i0), "i0")?,
        pick(raw.d_s, base.map(|b| b.d_s), "d_s")?,
        pick(raw.rho_s, base.map(|b| b.rho_s), "rho_s")?,
        pick(raw.phi_s, base.map(|b| b.phi_s), "phi_s")?,
    )?;
    Ok((preset, p))
}

fn resolve_solver(raw: &RawSolver, command: Command, ov: &Overrides) -> Result<SolverConfig> {
    let mut c = SolverConfig::default();
    if let Some(v) = ov.cfl.or(raw.cfl) {
        c.cfl = v;
    }
    if let Some(v) = raw.t_end {
        c.t_end = v;
    }
    if let Some(v) = raw.max_steps {
        c.max_steps = v;
    }
    c.shear_order = match (ov.shear_order, raw.shear_order) {
        (Some(o), _) => o,
        (None, Some(o)) => ShearOrder::from_u8(o)?,
        (None, None) => ShearOrder::First,
    };
    c.friction = match (ov.friction, raw.friction.as_deref()) {
        (Some(f), _) => f,
        (None, Some(f)) => f.parse()?,
        (None, None) => FrictionLaw::MuI,
    };
    // The steady-flow check needs a viscosity that stays finite at the free surface.
    let default_mode = match command {
        Command::UniformFlow => "delta",
        _ => "max-bound",
    };
    c.regularization = match raw.regularization.as_deref().unwrap_or(default_mode) {
        "max-bound" => {
            if raw.delta.is_some() {
                return Err(Error::Config("key `solver.delta` requires regularization = \"delta\"".into()));
            }
            Regularization::MaxBound {
                cap_coefficient: raw.cap_coefficient.unwrap_or(250.0),
            }
        }
        "delta" => {
            if raw.cap_coefficient.is_some() {
                return Err(Error::Config(
                    "key `solver.cap_coefficient` requires regularization = \"max-bound\"".into(),
                ));
            }
            Regularization::Delta {
                delta: raw.delta.unwrap_or(1e-8),
            }
        }
        o => return Err(Error::Config(format!("unknown regularization `{o}`"))),
    };
    if let Some(v) = raw.u_stop {
        c.u_stop = v;
    }
    if let Some(v) = raw.n_stop {
        c.n_stop = v;
    }
    c.boundary = BoundaryPair {
        left: raw.boundary_left.as_deref().map(str::parse).transpose()?.unwrap_or(Boundary::Wall),
        right: raw.boundary_right.as_deref().map(str::parse).transpose()?.unwrap_or(Boundary::Wall),
    };
    c.validate()?;
    Ok(c)
}

fn check_layers(field: &str, n: usize) -> Result<usize> {
    if n == 0 {
        Err(Error::invalid(field, "must be at least 1"))
    } else {
        Ok(n)
    }
}

fn resolve_scenario(
    raw: &RawScenario,
    command: Command,
    preset: Option<Preset>,
    ov: &Overrides,
) -> Result<Scenario> {
    let (h0_default, r0_default) = EXPERIMENT_COLUMN;
    match command {
        Command::UniformFlow => {
            reject(
                command,
                &[
                    ("theta_deg", raw.theta_deg.is_some()),
                    ("h_i", raw.h_i.is_some()),
                    ("h0", raw.h0.is_some()),
                    ("r0", raw.r0.is_some()),
                    ("x_max", raw.x_max.is_some()),
                    ("thetas_deg", raw.thetas_deg.is_some()),
                    ("h_i_values", raw.h_i_values.is_some()),
                    ("friction_modes", raw.friction_modes.is_some()),
                    ("layers_list", raw.layers_list.is_some()),
                    ("shear_orders", raw.shear_orders.is_some()),
                ],
            )?;
            let theta = match (raw.theta, preset) {
                (Some(t), _) => t,
                (None, Some(p)) => p.theta(),
                (None, None) => return Err(missing("scenario.theta")),
            };
            let layers = check_layers("layers", ov.layers.or(raw.layers).unwrap_or(20))?;
            let error_layers = raw.error_layers.clone().unwrap_or_else(|| vec![5, 10, 20, 50]);
            for &n in &error_layers {
                check_layers("error_layers", n)?;
            }
            let nx = ov.nx.or(raw.nx).unwrap_or(4);
            if nx == 0 {
                return Err(Error::invalid("nx", "must be positive"));
            }
            Ok(Scenario::UniformFlow(UniformFlowScenario {
                layers,
                nx,
                dx: positive("dx", raw.dx.unwrap_or(0.01))?,
                depth: positive("depth", raw.depth.unwrap_or(1.0))?,
                theta,
                theta_sweep: raw.theta_sweep.clone().unwrap_or_else(|| default_theta_sweep(preset)),
                error_layers,
                error_bound: positive("error_bound", raw.error_bound.unwrap_or(0.10))?,
                tolerance: positive("tolerance", raw.tolerance.unwrap_or(1e-6))?,
                t_max: positive("t_max", raw.t_max.unwrap_or(200.0))?,
            }))
        }
        Command::Collapse => {
            reject(
                command,
                &[
                    ("depth", raw.depth.is_some()),
                    ("theta", raw.theta.is_some()),
                    ("theta_sweep", raw.theta_sweep.is_some()),
                    ("error_layers", raw.error_layers.is_some()),
                    ("error_bound", raw.error_bound.is_some()),
                    ("tolerance", raw.tolerance.is_some()),
                    ("t_max", raw.t_max.is_some()),
                    ("thetas_deg", raw.thetas_deg.is_some()),
                    ("h_i_values", raw.h_i_values.is_some()),
                    ("friction_modes", raw.friction_modes.is_some()),
                    ("layers_list", raw.layers_list.is_some()),
                    ("shear_orders", raw.shear_orders.is_some()),
                ],
            )?;
            let h0 = positive("h0", raw.h0.unwrap_or(h0_default))?;
            let r0 = positive("r0", raw.r0.unwrap_or(r0_default))?;
            let x_max = positive("x_max", raw.x_max.unwrap_or(3.0))?;
            Ok(Scenario::Collapse(CollapseScenario {
                layers: check_layers("layers", ov.layers.or(raw.layers).unwrap_or(20))?,
                dx: mesh_spacing(raw, ov, r0 + x_max)?,
                theta_deg: raw.theta_deg.ok_or_else(|| missing("scenario.theta_deg"))?,
                h_i: raw.h_i.ok_or_else(|| missing("scenario.h_i"))?,
                h0,
                r0,
                x_max,
            }))
        }
        Command::Sweep => {
            reject(
                command,
                &[
                    ("layers", raw.layers.is_some()),
                    ("depth", raw.depth.is_some()),
                    ("theta", raw.theta.is_some()),
                    ("theta_sweep", raw.theta_sweep.is_some()),
                    ("error_layers", raw.error_layers.is_some()),
                    ("error_bound", raw.error_bound.is_some()),
                    ("tolerance", raw.tolerance.is_some()),
                    ("t_max", raw.t_max.is_some()),
                    ("theta_deg", raw.theta_deg.is_some()),
                    ("h_i", raw.h_i.is_some()),
                ],
            )?;
            let thetas_deg = raw.thetas_deg.clone().ok_or_else(|| missing("scenario.thetas_deg"))?;
            if thetas_deg.is_empty() {
                return Err(Error::invalid("thetas_deg", "must not be empty"));
            }
            if raw.h_i_values.is_none() {
                let known = experiment_matrix();
                for t in &thetas_deg {
                    if !known.iter().any(|(k, _)| (k - t).abs() < 1e-9) {
                        return Err(Error::Config(format!(
                            "no experiment bed thicknesses for theta_deg = {t}; set `scenario.h_i_values`"
                        )));
                    }
                }
            }
            let friction_modes = match (ov.friction, &raw.friction_modes) {
                (Some(f), _) => vec![f],
                (None, Some(list)) => list.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                (None, None) => vec![FrictionLaw::MuI, FrictionLaw::Constant],
            };
            let layers_list = match (ov.layers, &raw.layers_list) {
                (Some(n), _) => vec![n],
                (None, Some(list)) => list.clone(),
                (None, None) => vec![20],
            };
            for &n in &layers_list {
                check_layers("layers_list", n)?;
            }
            let shear_orders = match (ov.shear_order, &raw.shear_orders) {
                (Some(o), _) => vec![o],
                (None, Some(list)) => list.iter().map(|&o| ShearOrder::from_u8(o)).collect::<Result<_>>()?,
                (None, None) => vec![ShearOrder::First],
            };
            let h0 = positive("h0", raw.h0.unwrap_or(h0_default))?;
            let r0 = positive("r0", raw.r0.unwrap_or(r0_default))?;
            let x_max = positive("x_max", raw.x_max.unwrap_or(3.0))?;
            Ok(Scenario::Sweep(SweepScenario {
                dx: mesh_spacing(raw, ov, r0 + x_max)?,
                thetas_deg,
                h_i_values: raw.h_i_values.clone(),
                friction_modes,
                layers_list,
                shear_orders,
                h0,
                r0,
                x_max,
            }))
        }
    }
}

fn mesh_spacing(raw: &RawScenario, ov: &Overrides, length: f64) -> Result<f64> {
    match (ov.nx, raw.nx, raw.dx) {
        (Some(nx), _, _) | (None, Some(nx), None) => {
            if nx == 0 {
                return Err(Error::invalid("nx", "must be positive"));
            }
            Ok(length / nx as f64)
        }
        (None, Some(_), Some(_)) => Err(Error::Config(
            "keys `scenario.nx` and `scenario.dx` are mutually exclusive".into(),
        )),
        (None, None, dx) => positive("dx", dx.unwrap_or(2.5e-3)),
    }
}

fn default_theta_sweep(preset: Option<Preset>) -> Vec<f64> {
    let mu_s = preset.unwrap_or(Preset::AnalyticBagnold).rheology().mu_s;
    let mut v = vec![0.1, 0.2, 0.3, mu_s.atan(), 0.36, 0.4, 0.43, 0.5, 0.55, 0.6];
    v.sort_by(f64::total_cmp);
    v
}

impl RunConfig {
    /// Parses a configuration document for `command` and applies `overrides`.
    pub fn parse(text: &str, command: Command, overrides: &Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(name) = &raw.command {
            let named = Command::from_name(name)?;
            if named != command {
                return Err(Error::Config(format!(
                    "config is for command `{name}`, not `{}`",
                    command.as_str()
                )));
            }
        }
        let (preset, rheology) = resolve_rheology(&raw.rheology)?;
        let solver = resolve_solver(&raw.solver, command, overrides)?;
        let scenario = resolve_scenario(&raw.scenario, command, preset, overrides)?;
        let output = OutputSettings {
            dir: overrides
                .out
                .clone()
                .or(raw.output.dir.clone())
                .unwrap_or_else(|| PathBuf::from("out")),
            snapshot_interval: positive(
                "snapshot_interval",
                raw.output.snapshot_interval.unwrap_or(0.1),
            )?,
            stations: raw.output.stations.clone().unwrap_or_else(|| vec![0.095, 0.495, 0.995]),
        };
        Ok(RunConfig {
            command,
            preset,
            rheology,
            solver,
            scenario,
            output,
        })
    }

    /// Configuration document that reproduces this configuration, every default spelled out.
    pub fn echo(&self) -> Result<String> {
        let s = &self.solver;
        let (regularization, cap_coefficient, delta) = match s.regularization {
            Regularization::MaxBound { cap_coefficient } => ("max-bound", Some(cap_coefficient), None),
            Regularization::Delta { delta } => ("delta", None, Some(delta)),
        };
        let r = &self.rheology;
        let mut raw = RawConfig {
            command: Some(self.command.as_str().to_string()),
            rheology: RawRheology {
                preset: self.preset.map(|p| p.name().to_string()),
                mu_s: Some(r.mu_s),
                mu_2: Some(r.mu_2),
                i0: Some(r.i0),
                d_s: Some(r.d_s),
                rho_s: Some(r.rho_s),
                phi_s: Some(r.phi_s),
            },
            solver: RawSolver {
                cfl: Some(s.cfl),
                t_end: Some(s.t_end),
                max_steps: Some(s.max_steps),
                shear_order: Some(s.shear_order.as_u8()),
                friction: Some(s.friction.as_str().to_string()),
                regularization: Some(regularization.to_string()),
                cap_coefficient,
                delta,
                u_stop: Some(s.u_stop),
                n_stop: Some(s.n_stop),
                boundary_left: Some(s.boundary.left.as_str().to_string()),
                boundary_right: Some(s.boundary.right.as_str().to_string()),
            },
            scenario: RawScenario::default(),
            output: RawOutput {
                dir: Some(self.output.dir.clone()),
                snapshot_interval: Some(self.output.snapshot_interval),
                stations: Some(self.output.stations.clone()),
            },
        };
        raw.scenario = match &self.scenario {
            Scenario::UniformFlow(u) => RawScenario {
                layers: Some(u.layers),
                nx: Some(u.nx),
                dx: Some(u.dx),
                depth: Some(u.depth),
                theta: Some(u.theta),
                theta_sweep: Some(u.theta_sweep.clone()),
                error_layers: Some(u.error_layers.clone()),
                error_bound: Some(u.error_bound),
                tolerance: Some(u.tolerance),
                t_max: Some(u.t_max),
                ..RawScenario::default()
            },
            Scenario::Collapse(c) => RawScenario {
                layers: Some(c.layers),
                dx: Some(c.dx),
                theta_deg: Some(c.theta_deg),
                h_i: Some(c.h_i),
                h0: Some(c.h0),
                r0: Some(c.r0),
                x_max: Some(c.x_max),
                ..RawScenario::default()
            },
            Scenario::Sweep(w) => RawScenario {
                dx: Some(w.dx),
                thetas_deg: Some(w.thetas_deg.clone()),
                h_i_values: w.h_i_values.clone(),
                friction_modes: Some(w.friction_modes.iter().map(|f| f.as_str().to_string()).collect()),
                layers_list: Some(w.layers_list.clone()),
                shear_orders: Some(w.shear_orders.iter().map(|o| o.as_u8()).collect()),
                h0: Some(w.h0),
                r0: Some(w.r0),
                x_max: Some(w.x_max),
                ..RawScenario::default()
            },
        };
        toml::to_string(&raw).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, command: Command) -> Result<RunConfig> {
        RunConfig::parse(text, command, &Overrides::default())
    }

    #[test]
    fn presets_resolve() {
        let c = parse("[rheology]\npreset = \"experiments-2010\"\n[scenario]\ntheta_deg = 22.0\nh_i = 0.00182\n", Command::Collapse).unwrap();
        assert!((c.rheology.mu_s - 25.5f64.to_radians().tan()).abs() < 1e-15);
        assert_eq!(c.rheology.mu_2, 0.74);
        assert_eq!(c.rheology.i0, 0.279);
        assert_eq!(c.rheology.d_s, 7e-4);
        assert_eq!(c.rheology.rho_s, 2500.0);
        assert_eq!(c.rheology.phi_s, 0.62);

        let u = parse("[rheology]\npreset = \"analytic-bagnold\"\n", Command::UniformFlow).unwrap();
        assert_eq!(u.rheology.mu_s, 0.363);
        assert_eq!(u.rheology.d_s, 0.04);
        match u.scenario {
            Scenario::UniformFlow(s) => assert_eq!(s.theta, 0.43),
            _ => unreachable!(),
        }
        assert_eq!(u.solver.regularization, Regularization::Delta { delta: 1e-8 });
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("[rheology]\nmu_s = 0.4\nmu_2 = 0.7\ni0 = 0.3\nrho_s = 2500.0\nphi_s = 0.6\n", Command::UniformFlow)
            .unwrap_err()
            .to_string();
        assert!(e.contains("rheology.d_s"), "{e}");

        let e = parse("[rheology]\npreset = \"experiments-2010\"\n[scenario]\ntheta_deg = 22.0\n", Command::Collapse)
            .unwrap_err()
            .to_string();
        assert!(e.contains("scenario.h_i"), "{e}");

        let e = parse("[solver]\ncfll = 0.5\n", Command::Collapse).unwrap_err().to_string();
        assert!(e.contains("cfll"), "{e}");

        let e = parse("[rheology]\npreset = \"nope\"\n", Command::UniformFlow).unwrap_err().to_string();
        assert!(e.contains("nope"), "{e}");

        let e = parse(
            "[rheology]\npreset = \"analytic-bagnold\"\n[scenario]\nlayers = 0\n",
            Command::UniformFlow,
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("layers"), "{e}");

        let e = parse(
            "[rheology]\npreset = \"analytic-bagnold\"\n[output]\nsnapshot_interval = 0.0\n",
            Command::UniformFlow,
        )
        .unwrap_err()
        .to_string();
        assert!(e.contains("snapshot_interval"), "{e}");

        let e = parse("[rheology]\npreset = \"analytic-bagnold\"\n[scenario]\nh_i = 0.001\n", Command::UniformFlow)
            .unwrap_err()
            .to_string();
        assert!(e.contains("scenario.h_i"), "{e}");
    }

    #[test]
    fn overrides_take_precedence() {
        let ov = Overrides {
            layers: Some(7),
            nx: Some(100),
            cfl: Some(0.25),
            friction: Some(FrictionLaw::Constant),
            shear_order: Some(ShearOrder::Second),
            out: Some(PathBuf::from("elsewhere")),
        };
        let text = "[rheology]\npreset = \"experiments-2010\"\n[solver]\ncfl = 0.9\n[scenario]\nlayers = 3\ntheta_deg = 10.0\nh_i = 0.0\n";
        let c = RunConfig::parse(text, Command::Collapse, &ov).unwrap();
        assert_eq!(c.solver.cfl, 0.25);
        assert_eq!(c.solver.friction, FrictionLaw::Constant);
        assert_eq!(c.solver.shear_order, ShearOrder::Second);
        assert_eq!(c.output.dir, PathBuf::from("elsewhere"));
        match c.scenario {
            Scenario::Collapse(s) => {
                assert_eq!(s.layers, 7);
                assert!((s.dx - 3.2 / 100.0).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn echo_round_trips() {
        let cases = [
            ("[rheology]\npreset = \"analytic-bagnold\"\n", Command::UniformFlow),
            (
                "[rheology]\npreset = \"experiments-2010\"\n[scenario]\ntheta_deg = 22.0\nh_i = 0.00182\n[solver]\nregularization = \"max-bound\"\ncap_coefficient = 100.0\n",
                Command::Collapse,
            ),
            (
                "[rheology]\npreset = \"experiments-2010\"\n[scenario]\nthetas_deg = [16.0, 22.0]\nfriction_modes = [\"constant\"]\n",
                Command::Sweep,
            ),
            (
                "[rheology]\nmu_s = 0.4\nmu_2 = 0.7\ni0 = 0.3\nd_s = 0.001\nrho_s = 2000.0\nphi_s = 0.5\n[scenario]\nthetas_deg = [5.0]\nh_i_values = [0.001, 0.002]\n",
                Command::Sweep,
            ),
        ];
        for (text, command) in cases {
            let c = parse(text, command).unwrap();
            let echo = c.echo().unwrap();
            let back = parse(&echo, command).unwrap();
            assert_eq!(back, c, "{echo}");
            assert_eq!(back.echo().unwrap(), echo);
        }
    }

    #[test]
    fn command_mismatch_is_rejected() {
        let e = parse("command = \"sweep\"\n[rheology]\npreset = \"analytic-bagnold\"\n", Command::UniformFlow);
        assert!(e.is_err());
    }
}
