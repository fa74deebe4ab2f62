//! Discrete multilayer state and the per-column closures of the layered model.
//!
//! Indexing convention: layers are 0-based (`k = 0..N`, layer `k` is the
//! `(k+1)`-th from the bottom) and interfaces are indexed `a = 0..=N`, where
//! interface `a` sits on top of layer `a − 1`. Interface `0` is the bed and
//! interface `N` the free surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rheology::{
    constant_friction_coefficient, friction_coefficient, inertial_number, viscosity_with_law,
    FrictionLaw, Regularization, RheologyParams, GRAVITY,
};

/// Cells thinner than this carry no velocity and no shear.
pub const H_DRY: f64 = 1e-8;

/// Fixed vertical partition `h_α = l_α h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPartition {
    fractions: Vec<f64>,
    cumulative: Vec<f64>,
}

impl LayerPartition {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::invalid("layers", "at least one layer is required"));
        }
        if fractions.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid("layers", "fractions must be positive"));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "layers",
                format!("fractions must sum to 1, got {total}"),
            ));
        }
        let mut cumulative = Vec::with_capacity(fractions.len() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for &l in &fractions {
            acc += l;
            cumulative.push(acc);
        }
        // L_N is 1 by definition; drop the rounding residue.
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            fractions,
            cumulative,
        })
    }

    /// `n` layers of equal thickness.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("layers", "at least one layer is required"));
        }
        Self::new(vec![1.0 / n as f64; n]).or_else(|_| {
            // 1/n summed n times can miss 1 by more than the tolerance for huge n.
            let mut f = vec![1.0 / n as f64; n];
            let rest: f64 = f[..n - 1].iter().sum();
            f[n - 1] = 1.0 - rest;
            Self::new(f)
        })
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn fraction(&self, layer: usize) -> f64 {
        self.fractions[layer]
    }

    /// `L_a = l_1 + … + l_a`, with `L_0 = 0` and `L_N = 1`.
    pub fn cumulative(&self, interface: usize) -> f64 {
        self.cumulative[interface]
    }

    /// Distance between the midpoints of the layers around interior interface `a`,
    /// as a fraction of `h`.
    pub fn midpoint_gap(&self, interface: usize) -> f64 {
        0.5 * (self.fractions[interface - 1] + self.fractions[interface])
    }

    /// ξ coefficient linking interface `interface` (1..=N) to layer `layer` (0-based).
    pub fn xi(&self, interface: usize, layer: usize) -> f64 {
        let big_l = self.cumulative[interface];
        let l = self.fractions[layer];
        if layer < interface {
            (1.0 - big_l) * l
        } else {
            -big_l * l
        }
    }
}

/// Gravity split and boundary data of the tilted frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub g: f64,
    /// Slope angle \[rad\]; x points downslope.
    pub theta: f64,
    /// Surface pressure \[Pa\].
    pub p_s: f64,
    /// Basal mass exchange `G_{1/2}` \[m/s\].
    pub g_half: f64,
}

impl Environment {
    pub fn new(theta: f64) -> Result<Self> {
        let env = Self {
            g: GRAVITY,
            theta,
            p_s: 0.0,
            g_half: 0.0,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 0.0 && self.theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("theta", "must lie in [0, pi/2)"));
        }
        if !(self.g > 0.0) {
            return Err(Error::invalid("g", "must be positive"));
        }
        Ok(())
    }

    /// Bed-normal gravity.
    pub fn g_n(&self) -> f64 {
        self.g * self.theta.cos()
    }

    /// Downslope gravity.
    pub fn g_t(&self) -> f64 {
        self.g * self.theta.sin()
    }
}

/// Thickness and layer velocities on a uniform 1D mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub dx: f64,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    /// Row-major `nx × N` layer velocities.
    pub u: Vec<f64>,
    pub z_b: Vec<f64>,
    pub t: f64,
    layers: usize,
}

impl GridState {
    /// Mesh of `nx` cells covering `[x_min, x_min + nx·dx]`, at rest and dry.
    pub fn new(nx: usize, x_min: f64, dx: f64, layers: usize) -> Result<Self> {
        if nx == 0 {
            return Err(Error::invalid("nx", "must be positive"));
        }
        if !(dx > 0.0) {
            return Err(Error::invalid("dx", "must be positive"));
        }
        if layers == 0 {
            return Err(Error::invalid("layers", "must be positive"));
        }
        Ok(Self {
            dx,
            x: (0..nx).map(|i| x_min + (i as f64 + 0.5) * dx).collect(),
            h: vec![0.0; nx],
            u: vec![0.0; nx * layers],
            z_b: vec![0.0; nx],
            t: 0.0,
            layers,
        })
    }

    pub fn nx(&self) -> usize {
        self.h.len()
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn column(&self, cell: usize) -> &[f64] {
        &self.u[cell * self.layers..(cell + 1) * self.layers]
    }

    pub fn column_mut(&mut self, cell: usize) -> &mut [f64] {
        &mut self.u[cell * self.layers..(cell + 1) * self.layers]
    }

    pub fn is_wet(&self, cell: usize) -> bool {
        self.h[cell] > H_DRY
    }

    /// Total volume per unit width, `Σ h dx`.
    pub fn mass(&self) -> f64 {
        self.h.iter().sum::<f64>() * self.dx
    }

    /// Largest layer speed over wet cells.
    pub fn max_speed(&self) -> f64 {
        (0..self.nx())
            .filter(|&i| self.is_wet(i))
            .flat_map(|i| self.column(i).iter().map(|u| u.abs()))
            .fold(0.0, f64::max)
    }

    /// Depth-averaged velocity `Σ l_α u_α` in a cell.
    pub fn mean_velocity(&self, cell: usize, partition: &LayerPartition) -> f64 {
        self.column(cell)
            .iter()
            .zip(partition.fractions())
            .map(|(u, l)| u * l)
            .sum()
    }
}

/// Derivative of `f` at `cell` from cell-centred values: centred in the
/// interior, one-sided at the ends of the mesh and next to dry cells.
pub(crate) fn cell_derivative(f: impl Fn(usize) -> f64, wet: impl Fn(usize) -> bool, cell: usize, nx: usize, dx: f64) -> f64 {
    let left = cell > 0 && wet(cell - 1);
    let right = cell + 1 < nx && wet(cell + 1);
    match (left, right) {
        (true, true) => (f(cell + 1) - f(cell - 1)) / (2.0 * dx),
        (false, true) => (f(cell + 1) - f(cell)) / dx,
        (true, false) => (f(cell) - f(cell - 1)) / dx,
        (false, false) => 0.0,
    }
}

/// Hydrostatic pressure at interface `interface` of a column of thickness `h`.
pub fn interface_pressure(
    h: f64,
    partition: &LayerPartition,
    env: &Environment,
    rho: f64,
    interface: usize,
) -> f64 {
    env.p_s + rho * env.g_n() * h * (1.0 - partition.cumulative(interface))
}

/// Order of the shear-rate estimate at the interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShearOrder {
    /// Vertical velocity jump only.
    First,
    /// Adds the downslope stretching of the interface velocity.
    Second,
}

impl ShearOrder {
    pub fn as_u8(self) -> u8 {
        match self {
            ShearOrder::First => 1,
            ShearOrder::Second => 2,
        }
    }

    pub fn from_u8(order: u8) -> Result<Self> {
        match order {
            1 => Ok(ShearOrder::First),
            2 => Ok(ShearOrder::Second),
            o => Err(Error::invalid("shear_order", format!("must be 1 or 2, got {o}"))),
        }
    }
}

/// Vertical velocity gradient `Q = (u_{α+1} − u_α) / h_{α+1/2}` at interior interface `interface`.
pub fn velocity_gradient(column: &[f64], h: f64, partition: &LayerPartition, interface: usize) -> f64 {
    (column[interface] - column[interface - 1]) / (partition.midpoint_gap(interface) * h)
}

/// Shear-rate estimates at every interface of `cell`. Entries 0 and N are
/// left at zero: the bed and the surface are handled separately.
pub fn shear_estimate(
    state: &GridState,
    partition: &LayerPartition,
    cell: usize,
    order: ShearOrder,
) -> Vec<f64> {
    let n = partition.len();
    let mut out = vec![0.0; n + 1];
    if !state.is_wet(cell) {
        return out;
    }
    let h = state.h[cell];
    let column = state.column(cell);
    for a in 1..n {
        let q = velocity_gradient(column, h, partition, a);
        out[a] = match order {
            ShearOrder::First => q.abs(),
            ShearOrder::Second => {
                let stretch = cell_derivative(
                    |i| state.column(i)[a] + state.column(i)[a - 1],
                    |i| state.is_wet(i),
                    cell,
                    state.nx(),
                    state.dx,
                );
                q.hypot(stretch)
            }
        };
    }
    out
}

/// Mass transfer through every interface of every cell (row-major `nx × (N+1)`),
/// from centred divergences of the layer discharges.
pub fn mass_transfer(state: &GridState, partition: &LayerPartition, env: &Environment) -> Vec<f64> {
    let n = partition.len();
    let nx = state.nx();
    let mut out = vec![0.0; nx * (n + 1)];
    let mut div = vec![0.0; n];
    for i in 0..nx {
        for (k, d) in div.iter_mut().enumerate() {
            *d = cell_derivative(
                |j| state.h[j] * state.column(j)[k],
                |_| true,
                i,
                nx,
                state.dx,
            );
        }
        transfer_from_divergence(partition, env.g_half, &div, &mut out[i * (n + 1)..(i + 1) * (n + 1)]);
    }
    out
}

/// `G_{a} = (1 − L_a) G_{1/2} + Σ_γ ξ_{a,γ} ∂x(h u_γ)` for one column, given the
/// layer divergences `∂x(h u_γ)`.
pub fn transfer_from_divergence(partition: &LayerPartition, g_half: f64, divergence: &[f64], out: &mut [f64]) {
    let n = partition.len();
    out[0] = g_half;
    for a in 1..n {
        out[a] = (1.0 - partition.cumulative(a)) * g_half
            + divergence
                .iter()
                .enumerate()
                .map(|(k, d)| partition.xi(a, k) * d)
                .sum::<f64>();
    }
    out[n] = 0.0;
}

/// Coulomb bound `μ ρ g_n h` of the basal friction.
pub fn bottom_friction_bound(h: f64, env: &Environment, rho: f64, mu: f64) -> f64 {
    mu * rho * env.g_n() * h.max(0.0)
}

/// Closure parameters shared by every interface evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closure {
    pub rheology: RheologyParams,
    pub law: FrictionLaw,
    pub regularization: Regularization,
    pub shear_order: ShearOrder,
}

impl Closure {
    pub fn rho(&self) -> f64 {
        self.rheology.rho()
    }

    fn mu(&self, inertial: f64) -> Result<f64> {
        match self.law {
            FrictionLaw::MuI => friction_coefficient(inertial, &self.rheology),
            FrictionLaw::Constant => Ok(constant_friction_coefficient(&self.rheology)),
        }
    }

    /// Shear rate at the bed, from the bottom layer velocity and a no-slip wall
    /// half a layer below its midpoint.
    pub fn basal_shear(&self, u_bottom: f64, h: f64, partition: &LayerPartition) -> f64 {
        if h <= H_DRY {
            return 0.0;
        }
        if partition.len() == 1 {
            u_bottom.abs() / h
        } else {
            2.0 * u_bottom.abs() / (partition.fraction(0) * h)
        }
    }

    /// Friction coefficient of the basal Coulomb law for a column.
    pub fn basal_friction_coefficient(
        &self,
        u_bottom: f64,
        h: f64,
        partition: &LayerPartition,
        env: &Environment,
    ) -> Result<f64> {
        match self.law {
            FrictionLaw::Constant => Ok(self.rheology.mu_s),
            FrictionLaw::MuI => {
                let p = interface_pressure(h, partition, env, self.rho(), 0);
                if p <= 0.0 {
                    return Ok(self.rheology.mu_s);
                }
                let i = inertial_number(self.basal_shear(u_bottom, h, partition), p, &self.rheology)?;
                self.mu(i)
            }
        }
    }

    /// Interface viscosity from a shear estimate and the local pressure.
    pub fn viscosity(&self, shear: f64, pressure: f64, h: f64) -> Result<f64> {
        viscosity_with_law(shear, pressure, &self.rheology, &self.regularization, self.law, h)
    }

    /// Friction coefficient at an interface (μ_s in constant mode).
    pub fn interface_friction(&self, shear: f64, pressure: f64) -> Result<f64> {
        if pressure <= 0.0 {
            return Ok(self.rheology.mu_s);
        }
        self.mu(inertial_number(shear, pressure, &self.rheology)?)
    }
}

/// Per-interface quantities of every cell, each stored row-major `nx × (N+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceFields {
    pub interfaces: usize,
    pub pressure: Vec<f64>,
    pub shear: Vec<f64>,
    pub viscosity: Vec<f64>,
    pub mass_transfer: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl InterfaceFields {
    pub fn at(&self, field: &[f64], cell: usize, interface: usize) -> f64 {
        field[cell * self.interfaces + interface]
    }
}

/// Coupling `K = −η Q` at interior interfaces; the bed and surface entries are zero.
pub fn viscous_coupling(
    column: &[f64],
    h: f64,
    partition: &LayerPartition,
    viscosity: &[f64],
) -> Vec<f64> {
    let n = partition.len();
    let mut k = vec![0.0; n + 1];
    if h <= H_DRY {
        return k;
    }
    for a in 1..n {
        k[a] = -viscosity[a] * velocity_gradient(column, h, partition, a);
    }
    k
}

/// Evaluates pressure, shear, viscosity, mass transfer and coupling everywhere.
pub fn interface_fields(
    state: &GridState,
    partition: &LayerPartition,
    env: &Environment,
    closure: &Closure,
) -> Result<InterfaceFields> {
    let n = partition.len();
    let nx = state.nx();
    let m = n + 1;
    let mut f = InterfaceFields {
        interfaces: m,
        pressure: vec![0.0; nx * m],
        shear: vec![0.0; nx * m],
        viscosity: vec![0.0; nx * m],
        mass_transfer: mass_transfer(state, partition, env),
        coupling: vec![0.0; nx * m],
    };
    for i in 0..nx {
        let h = state.h[i];
        for a in 0..m {
            f.pressure[i * m + a] = interface_pressure(h, partition, env, closure.rho(), a);
        }
        if !state.is_wet(i) {
            continue;
        }
        let shear = shear_estimate(state, partition, i, closure.shear_order);
        f.shear[i * m..(i + 1) * m].copy_from_slice(&shear);
        f.shear[i * m] = closure.basal_shear(state.column(i)[0], h, partition);
        for a in 1..n {
            f.viscosity[i * m + a] = closure.viscosity(shear[a], f.pressure[i * m + a], h)?;
        }
        let k = viscous_coupling(state.column(i), h, partition, &f.viscosity[i * m..(i + 1) * m]);
        f.coupling[i * m..(i + 1) * m].copy_from_slice(&k);
        let u1 = state.column(i)[0];
        if u1 != 0.0 {
            let mu = closure.basal_friction_coefficient(u1, h, partition, env)?;
            f.coupling[i * m] = -bottom_friction_bound(h, env, closure.rho(), mu) * u1.signum();
        }
    }
    Ok(f)
}

/// Vertical velocity at the bottom and top of each layer (row-major `nx × N`
/// pairs), reconstructed from the continuity equation.
pub fn vertical_velocity(
    state: &GridState,
    partition: &LayerPartition,
    env: &Environment,
) -> Vec<(f64, f64)> {
    let n = partition.len();
    let nx = state.nx();
    let wet = |j: usize| state.is_wet(j);
    let mut out = vec![(0.0, 0.0); nx * n];
    for i in 0..nx {
        if !state.is_wet(i) {
            continue;
        }
        let column = state.column(i);
        let dzb = cell_derivative(|j| state.z_b[j], |_| true, i, nx, state.dx);
        let mut w_plus = column[0] * dzb - env.g_half;
        for k in 0..n {
            let du = cell_derivative(|j| state.column(j)[k], wet, i, nx, state.dx);
            let w_minus = w_plus - partition.fraction(k) * state.h[i] * du;
            out[i * n + k] = (w_plus, w_minus);
            if k + 1 < n {
                let l_top = partition.cumulative(k + 1);
                let dz_interface =
                    cell_derivative(|j| state.z_b[j] + l_top * state.h[j], |_| true, i, nx, state.dx);
                w_plus = (column[k + 1] - column[k]) * dz_interface + w_minus;
            }
        }
    }
    out
}

/// `ρ Σ_cells Σ_α h_α (|u_α|²/2 + p_S/ρ + g_n (z_b + h/2)) dx`.
pub fn total_energy(state: &GridState, partition: &LayerPartition, env: &Environment, rho: f64) -> f64 {
    let g_n = env.g_n();
    let mut total = 0.0;
    for i in 0..state.nx() {
        let h = state.h[i];
        if h <= 0.0 {
            continue;
        }
        let potential = env.p_s / rho + g_n * (state.z_b[i] + 0.5 * h);
        let cell: f64 = state
            .column(i)
            .iter()
            .zip(partition.fractions())
            .map(|(u, l)| l * h * (0.5 * u * u + potential))
            .sum();
        total += cell;
    }
    rho * total * state.dx
}

/// Total energy including the downslope potential `−ρ g_t x h`, which is the
/// quantity the dissipation estimate applies to on an inclined bed.
pub fn mechanical_energy(state: &GridState, partition: &LayerPartition, env: &Environment, rho: f64) -> f64 {
    let slope: f64 = state.x.iter().zip(&state.h).map(|(x, h)| x * h).sum();
    total_energy(state, partition, env, rho) - rho * env.g_t() * slope * state.dx
}
