//! μ(I) friction law, inertial number and regularized effective viscosity.
//!
//! Everything here is a pure function of its arguments. The viscosity
//! `η = μ(I) p / ‖D‖` is singular at vanishing shear, so it is only ever
//! evaluated through one of the two [`Regularization`]s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravitational acceleration \[m/s²\].
pub const GRAVITY: f64 = 9.81;

/// Material parameters of the μ(I) law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RheologyParams {
    /// Static friction coefficient.
    pub mu_s: f64,
    /// Limiting friction coefficient at large inertial number.
    pub mu_2: f64,
    /// Reference inertial number.
    pub i0: f64,
    /// Particle diameter \[m\].
    pub d_s: f64,
    /// Particle density \[kg/m³\].
    pub rho_s: f64,
    /// Solid volume fraction.
    pub phi_s: f64,
}

impl RheologyParams {
    pub fn new(mu_s: f64, mu_2: f64, i0: f64, d_s: f64, rho_s: f64, phi_s: f64) -> Result<Self> {
        let p = Self {
            mu_s,
            mu_2,
            i0,
            d_s,
            rho_s,
            phi_s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_s > 0.0 && self.mu_s.is_finite()) {
            return Err(Error::invalid("mu_s", "must be positive"));
        }
        if !(self.mu_2 > self.mu_s && self.mu_2.is_finite()) {
            return Err(Error::invalid("mu_2", "must exceed mu_s"));
        }
        if !(self.i0 > 0.0 && self.i0.is_finite()) {
            return Err(Error::invalid("i0", "must be positive"));
        }
        if !(self.d_s > 0.0 && self.d_s.is_finite()) {
            return Err(Error::invalid("d_s", "must be positive"));
        }
        if !(self.rho_s > 0.0 && self.rho_s.is_finite()) {
            return Err(Error::invalid("rho_s", "must be positive"));
        }
        if !(self.phi_s > 0.0 && self.phi_s <= 1.0) {
            return Err(Error::invalid("phi_s", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Apparent flow density `φ_s ρ_s`.
    pub fn rho(&self) -> f64 {
        self.phi_s * self.rho_s
    }
}

/// Which friction coefficient the closures use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrictionLaw {
    /// Variable coefficient μ(I).
    MuI,
    /// Constant coefficient μ_s.
    Constant,
}

impl FrictionLaw {
    pub fn as_str(self) -> &'static str {
        match self {
            FrictionLaw::MuI => "mu-i",
            FrictionLaw::Constant => "constant",
        }
    }
}

impl std::str::FromStr for FrictionLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu-i" | "mu_i" | "muI" => Ok(FrictionLaw::MuI),
            "constant" | "mu-s" => Ok(FrictionLaw::Constant),
            other => Err(Error::Config(format!("unknown friction law `{other}`"))),
        }
    }
}

/// Treatment of the zero-shear singularity of the viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Regularization {
    /// Viscosity capped by `η_M = c ρ √(g h³)`.
    MaxBound { cap_coefficient: f64 },
    /// Shear norm replaced by `√(‖D‖² + δ²)`.
    Delta { delta: f64 },
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::MaxBound {
            cap_coefficient: 250.0,
        }
    }
}

impl Regularization {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularization::MaxBound { cap_coefficient } if !(cap_coefficient > 0.0) => Err(
                Error::invalid("cap_coefficient", "must be positive for max-bound"),
            ),
            Regularization::Delta { delta } if !(delta > 0.0) => {
                Err(Error::invalid("delta", "must be positive for delta mode"))
            }
            _ => Ok(()),
        }
    }
}

/// μ(I) = μ_s + (μ_2 − μ_s) I / (I_0 + I).
pub fn friction_coefficient(inertial: f64, p: &RheologyParams) -> Result<f64> {
    if !(inertial >= 0.0) {
        return Err(Error::Domain(format!(
            "inertial number must be non-negative, got {inertial}"
        )));
    }
    if inertial.is_infinite() {
        return Ok(p.mu_2);
    }
    Ok(p.mu_s + (p.mu_2 - p.mu_s) * inertial / (p.i0 + inertial))
}

/// The constant-friction substitute for μ(I).
pub fn constant_friction_coefficient(p: &RheologyParams) -> f64 {
    p.mu_s
}

/// I = d_s ‖D‖ / √(p / ρ_s).
pub fn inertial_number(shear_norm: f64, pressure: f64, p: &RheologyParams) -> Result<f64> {
    if !(pressure > 0.0) {
        return Err(Error::Domain(format!(
            "inertial number needs positive pressure, got {pressure}"
        )));
    }
    if !(shear_norm >= 0.0) {
        return Err(Error::Domain(format!(
            "shear norm must be non-negative, got {shear_norm}"
        )));
    }
    Ok(p.d_s * shear_norm / (pressure / p.rho_s).sqrt())
}

/// Viscosity cap `η_M = c ρ √(g h³)`.
pub fn viscosity_cap(cap_coefficient: f64, rho: f64, h_ref: f64) -> f64 {
    cap_coefficient * rho * (GRAVITY * h_ref * h_ref * h_ref).sqrt()
}

/// Regularized μ(I) viscosity.
pub fn effective_viscosity(
    shear_norm: f64,
    pressure: f64,
    p: &RheologyParams,
    reg: &Regularization,
    h_ref: f64,
) -> Result<f64> {
    viscosity_with_law(shear_norm, pressure, p, reg, FrictionLaw::MuI, h_ref)
}

/// Regularized viscosity with either friction law.
///
/// Zero pressure gives zero viscosity in both regularizations.
pub fn viscosity_with_law(
    shear_norm: f64,
    pressure: f64,
    p: &RheologyParams,
    reg: &Regularization,
    law: FrictionLaw,
    h_ref: f64,
) -> Result<f64> {
    if !(shear_norm >= 0.0) || !(pressure >= 0.0) || !(h_ref >= 0.0) {
        return Err(Error::Domain(format!(
            "viscosity needs non-negative inputs (shear {shear_norm}, pressure {pressure}, h {h_ref})"
        )));
    }
    if pressure == 0.0 {
        return Ok(0.0);
    }
    let mu = match law {
        FrictionLaw::MuI => friction_coefficient(inertial_number(shear_norm, pressure, p)?, p)?,
        FrictionLaw::Constant => constant_friction_coefficient(p),
    };
    let yield_stress = mu * pressure;
    Ok(match *reg {
        Regularization::MaxBound { cap_coefficient } => {
            let eta_max = viscosity_cap(cap_coefficient, p.rho(), h_ref);
            if eta_max == 0.0 {
                return Ok(0.0);
            }
            yield_stress / shear_norm.max(yield_stress / eta_max)
        }
        Regularization::Delta { delta } => yield_stress / shear_norm.hypot(delta),
    })
}
