//! Reference solutions, initial conditions and deposit diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilayer::{GridState, LayerPartition};
use crate::rheology::{RheologyParams, GRAVITY};

/// Thickness excess over the bed that marks the flow front \[m\].
pub const FRONT_THRESHOLD: f64 = 1e-4;

/// Steady uniform flow down an incline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFlowSpec {
    pub depth: f64,
    pub theta: f64,
    pub rheology: RheologyParams,
}

impl UniformFlowSpec {
    /// Whether a steady flowing solution exists (μ_s < tan θ < μ_2).
    pub fn is_flowing(&self) -> bool {
        let t = self.theta.tan();
        t > self.rheology.mu_s && t < self.rheology.mu_2
    }

    fn check(&self) -> Result<()> {
        if !(self.depth > 0.0) {
            return Err(Error::invalid("depth", "must be positive"));
        }
        if !self.is_flowing() {
            return Err(Error::Domain(format!(
                "tan(theta) = {} is outside (mu_s, mu_2): no steady flowing solution",
                self.theta.tan()
            )));
        }
        Ok(())
    }

    /// Inertial number at which μ(I) = tan θ.
    pub fn steady_inertial_number(&self) -> f64 {
        let t = self.theta.tan();
        let p = &self.rheology;
        p.i0 * (t - p.mu_s) / (p.mu_2 - t)
    }

    /// Prefactor `A` in `u(z) = A (H^{3/2} − (H − z)^{3/2})`.
    fn prefactor(&self) -> f64 {
        let p = &self.rheology;
        2.0 / (3.0 * p.d_s)
            * self.steady_inertial_number()
            * (p.phi_s * GRAVITY * self.theta.cos()).sqrt()
    }
}

/// Velocity, pressure and shear stress of the uniform flow at one height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagnoldPoint {
    pub u: f64,
    pub pressure: f64,
    pub shear_stress: f64,
}

/// Closed-form steady profile at height `z` above the bed.
pub fn bagnold_profile(z: f64, spec: &UniformFlowSpec) -> Result<BagnoldPoint> {
    spec.check()?;
    let h = spec.depth;
    if !(0.0..=h).contains(&z) {
        return Err(Error::Domain(format!("z = {z} outside [0, {h}]")));
    }
    let depth_below_surface = h - z;
    let rho = spec.rheology.rho();
    Ok(BagnoldPoint {
        u: spec.prefactor() * (h.powf(1.5) - depth_below_surface.powf(1.5)),
        pressure: rho * GRAVITY * spec.theta.cos() * depth_below_surface,
        shear_stress: rho * GRAVITY * spec.theta.sin() * depth_below_surface,
    })
}

/// Exact averages of the steady profile over each layer of `partition`.
pub fn layer_average_bagnold(spec: &UniformFlowSpec, partition: &LayerPartition) -> Result<Vec<f64>> {
    spec.check()?;
    let h = spec.depth;
    let a = spec.prefactor();
    Ok((0..partition.len())
        .map(|k| {
            let d0 = h * (1.0 - partition.cumulative(k));
            let d1 = h * (1.0 - partition.cumulative(k + 1));
            let thickness = d0 - d1;
            let mean_power = (d0.powf(2.5) - d1.powf(2.5)) / (2.5 * thickness);
            a * (h.powf(1.5) - mean_power)
        })
        .collect())
}

/// `√(Σ (u_ref − u_sim)² / Σ u_ref²)`.
pub fn relative_error(u_sim: &[f64], u_ref: &[f64]) -> Result<f64> {
    if u_sim.len() != u_ref.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} simulated vs {} reference values",
            u_sim.len(),
            u_ref.len()
        )));
    }
    let norm: f64 = u_ref.iter().map(|u| u * u).sum();
    if norm == 0.0 {
        return Err(Error::Domain("reference velocity is identically zero".into()));
    }
    let diff: f64 = u_sim.iter().zip(u_ref).map(|(s, r)| (r - s) * (r - s)).sum();
    Ok((diff / norm).sqrt())
}

/// Column released behind a gate at `x = 0` onto an erodible bed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseSpec {
    /// Column height \[m\].
    pub h0: f64,
    /// Column length behind the gate \[m\].
    pub r0: f64,
    /// Erodible bed thickness \[m\].
    pub h_i: f64,
    /// Slope \[rad\].
    pub theta: f64,
    /// Downslope end of the domain \[m\].
    pub x_max: f64,
}

impl CollapseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0) {
            return Err(Error::invalid("h0", "must be positive"));
        }
        if !(self.r0 > 0.0) {
            return Err(Error::invalid("r0", "must be positive"));
        }
        if !(self.h_i >= 0.0) {
            return Err(Error::invalid("h_i", "must be non-negative"));
        }
        if !(self.x_max > 0.0) {
            return Err(Error::invalid("x_max", "must be downslope of the gate"));
        }
        Ok(())
    }

    /// Length of the bed-covered domain `[−r_0, x_max]`.
    pub fn domain_length(&self) -> f64 {
        self.x_max + self.r0
    }

    /// Time scale `√(h_0 / (g cos θ))`.
    pub fn time_scale(&self) -> f64 {
        (self.h0 / (GRAVITY * self.theta.cos())).sqrt()
    }
}

/// Mesh of `[−r_0, x_max]` with spacing close to `dx` (the gate falls on a cell edge)
/// holding the bed everywhere and the column behind the gate, at rest.
pub fn collapse_initial(spec: &CollapseSpec, dx: f64, partition: &LayerPartition) -> Result<GridState> {
    spec.validate()?;
    if !(dx > 0.0) {
        return Err(Error::invalid("dx", "must be positive"));
    }
    let behind = (spec.r0 / dx).round().max(1.0) as usize;
    let dx = spec.r0 / behind as f64;
    let ahead = (spec.x_max / dx).round() as usize;
    if ahead < 1 {
        return Err(Error::Domain(format!(
            "mesh too short: x_max = {} does not reach past the gate",
            spec.x_max
        )));
    }
    let mut state = GridState::new(behind + ahead, -spec.r0, dx, partition.len())?;
    for (h, &x) in state.h.iter_mut().zip(&state.x) {
        *h = spec.h_i + if x <= 0.0 { spec.h0 } else { 0.0 };
    }
    Ok(state)
}

/// Last cell whose thickness exceeds the bed by more than `threshold`.
pub fn front_cell(state: &GridState, h_i: f64, threshold: f64) -> Option<usize> {
    (0..state.nx()).rev().find(|&i| state.h[i] - h_i > threshold)
}

/// Downslope edge of the front cell, or the gate when there is none.
pub fn front_position(state: &GridState, h_i: f64, threshold: f64) -> f64 {
    front_cell(state, h_i, threshold)
        .map(|i| state.x[i] + 0.5 * state.dx)
        .unwrap_or(0.0)
}

/// Runout, stopping time and maximum final thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepositDiagnostics {
    pub runout: f64,
    pub stop_time: f64,
    pub max_thickness: f64,
    /// The flow never came to rest before the end time.
    pub censored: bool,
}

/// Diagnostics of a deposit. `stop_time` is `None` when the run never became quiescent,
/// in which case the end time of `state` is reported and the result is flagged.
pub fn deposit_diagnostics(
    state: &GridState,
    stop_time: Option<f64>,
    h_i: f64,
    threshold: f64,
) -> DepositDiagnostics {
    DepositDiagnostics {
        runout: front_position(state, h_i, threshold).max(0.0),
        stop_time: stop_time.unwrap_or(state.t),
        max_thickness: state.h.iter().copied().fold(0.0, f64::max),
        censored: stop_time.is_none(),
    }
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Glass-bead collapse experiments over erodible beds.
    #[serde(rename = "experiments-2010")]
    Experiments2010,
    /// Steady uniform flow used to validate against the closed form.
    AnalyticBagnold,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Experiments2010 => "experiments-2010",
            Preset::AnalyticBagnold => "analytic-bagnold",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "experiments-2010" => Ok(Preset::Experiments2010),
            "analytic-bagnold" => Ok(Preset::AnalyticBagnold),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn rheology(self) -> RheologyParams {
        match self {
            Preset::Experiments2010 => RheologyParams {
                mu_s: 25.5f64.to_radians().tan(),
                mu_2: 0.74,
                i0: 0.279,
                d_s: 7e-4,
                rho_s: 2500.0,
                phi_s: 0.62,
            },
            Preset::AnalyticBagnold => RheologyParams {
                mu_s: 0.363,
                mu_2: 0.74,
                i0: 0.279,
                d_s: 0.04,
                rho_s: 2500.0,
                phi_s: 0.62,
            },
        }
    }

    /// Default slope \[rad\].
    pub fn theta(self) -> f64 {
        match self {
            Preset::Experiments2010 => 22f64.to_radians(),
            Preset::AnalyticBagnold => 0.43,
        }
    }
}

/// Slopes \[deg\] and erodible-bed thicknesses \[m\] of the experiment campaign.
pub fn experiment_matrix() -> Vec<(f64, Vec<f64>)> {
    vec![
        (0.0, vec![1.5e-3, 2.5e-3, 5.0e-3]),
        (10.0, vec![1.5e-3, 2.5e-3, 5.0e-3]),
        (16.0, vec![1.4e-3, 2.5e-3, 5.0e-3]),
        (19.0, vec![1.5e-3, 2.7e-3, 5.3e-3]),
        (22.0, vec![1.82e-3, 3.38e-3, 4.6e-3]),
        (23.7, vec![1.5e-3, 2.5e-3, 5.0e-3]),
    ]
}

/// Column geometry of the experiments (height, length) \[m\].
pub const EXPERIMENT_COLUMN: (f64, f64) = (0.14, 0.20);
