//! Inter-layer momentum exchange and basal Coulomb friction.

use crate::error::Result;
use crate::multilayer::{
    bottom_friction_bound, interface_pressure, shear_estimate, Closure, Environment, GridState,
    LayerPartition, H_DRY,
};

use super::tridiag::solve_in_place;

#[derive(Debug, Default, Clone)]
pub struct ExchangeWorkspace {
    viscosity: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
    response: Vec<f64>,
    bounds: Vec<f64>,
}

/// Interface viscosities of every wet cell (row-major `nx × (N+1)`), frozen
/// from the current state.
pub fn frozen_viscosity(
    state: &GridState,
    partition: &LayerPartition,
    env: &Environment,
    closure: &Closure,
    out: &mut Vec<f64>,
) -> Result<()> {
    let n = partition.len();
    let m = n + 1;
    out.clear();
    out.resize(state.nx() * m, 0.0);
    if n == 1 {
        return Ok(());
    }
    for i in 0..state.nx() {
        if !state.is_wet(i) {
            continue;
        }
        let h = state.h[i];
        let shear = shear_estimate(state, partition, i, closure.shear_order);
        for a in 1..n {
            let p = interface_pressure(h, partition, env, closure.rho(), a);
            out[i * m + a] = closure.viscosity(shear[a], p, h)?;
        }
    }
    Ok(())
}

/// Implicit viscous coupling, mass-transfer momentum and basal Coulomb
/// friction between the layers of every column, with viscosities `viscosity`
/// and transfers `transfer` held fixed over the step (both row-major
/// `nx × (N+1)`) and the Coulomb bound `μ ρ g_n h` of each cell in `friction`.
///
/// Per column this solves
///
/// ```text
/// ρ l_α h (u*_α − u_α)/dt = K*_{α−1/2} − K*_{α+1/2}
///     + ½ρ G_{α+1/2}(u*_{α+1} + u*_α) − ½ρ G_{α−1/2}(u*_α + u*_{α−1})
/// ```
///
/// with `K*_{α+1/2} = −η_{α+1/2}(u*_{α+1} − u*_α)/h_{α+1/2}` at interior
/// interfaces and no surface stress. The basal stress `K*_{1/2} = f` is the
/// Coulomb reaction: `f` stops the bottom layer when `|f| ≤ bound` suffices,
/// and is `−bound·sign(u_1)` otherwise. Since the system is linear, both cases
/// follow from the unforced solution and the response to a unit basal force.
#[allow(clippy::too_many_arguments)]
pub fn exchange_step(
    state: &mut GridState,
    partition: &LayerPartition,
    rho: f64,
    viscosity: &[f64],
    transfer: &[f64],
    friction: &[f64],
    dt: f64,
    ws: &mut ExchangeWorkspace,
) -> Result<()> {
    let n = partition.len();
    let m = n + 1;
    for v in [&mut ws.lower, &mut ws.diag, &mut ws.upper, &mut ws.rhs, &mut ws.scratch, &mut ws.response] {
        v.resize(n, 0.0);
    }
    for i in 0..state.nx() {
        let h = state.h[i];
        if h <= H_DRY {
            continue;
        }
        let eta = &viscosity[i * m..(i + 1) * m];
        let g = &transfer[i * m..(i + 1) * m];
        let bound = friction[i];
        if n == 1 && g[0] == 0.0 && bound == 0.0 {
            continue;
        }
        // a[α] = η_{α}/h_{α} at interior interfaces, zero at bed and surface.
        let coupling = |a: usize| {
            if a == 0 || a == n {
                0.0
            } else {
                eta[a] / (partition.midpoint_gap(a) * h)
            }
        };
        let column = state.column(i);
        for k in 0..n {
            let (below, above) = (coupling(k), coupling(k + 1));
            let mass = rho * partition.fraction(k) * h / dt;
            ws.diag[k] = mass + below + above - 0.5 * rho * g[k + 1] + 0.5 * rho * g[k];
            ws.upper[k] = -(above + 0.5 * rho * g[k + 1]);
            ws.lower[k] = -(below - 0.5 * rho * g[k]);
            ws.rhs[k] = mass * column[k];
        }
        solve_in_place(&ws.lower, &ws.diag, &ws.upper, &mut ws.rhs, &mut ws.scratch, i)?;
        if bound > 0.0 {
            ws.response.fill(0.0);
            ws.response[0] = 1.0;
            solve_in_place(&ws.lower, &ws.diag, &ws.upper, &mut ws.response, &mut ws.scratch, i)?;
            let (u1, z1) = (ws.rhs[0], ws.response[0]);
            let force = if u1.abs() <= bound * z1 {
                -u1 / z1
            } else {
                -bound * u1.signum()
            };
            for (u, z) in ws.rhs.iter_mut().zip(&ws.response) {
                *u += force * z;
            }
            if u1.abs() <= bound * z1 {
                ws.rhs[0] = 0.0;
            }
        }
        state.column_mut(i).copy_from_slice(&ws.rhs);
    }
    Ok(())
}

/// Basal friction coefficient of every cell, from the bottom velocity of `state`.
pub fn basal_friction_coefficients(
    state: &GridState,
    partition: &LayerPartition,
    env: &Environment,
    closure: &Closure,
    out: &mut Vec<f64>,
) -> Result<()> {
    out.clear();
    for i in 0..state.nx() {
        out.push(closure.basal_friction_coefficient(state.column(i)[0], state.h[i], partition, env)?);
    }
    Ok(())
}

/// Turns friction coefficients into Coulomb bounds `μ ρ g_n h` in place.
pub fn friction_bounds(state: &GridState, env: &Environment, rho: f64, mu: &mut [f64]) {
    for (b, &h) in mu.iter_mut().zip(&state.h) {
        *b = if h > H_DRY {
            bottom_friction_bound(h, env, rho, *b)
        } else {
            0.0
        };
    }
}

/// Convenience wrapper that freezes the viscosities and friction bounds from `state` and applies
/// [`exchange_step`].
#[allow(clippy::too_many_arguments)]
pub fn exchange_with_closure(
    state: &mut GridState,
    partition: &LayerPartition,
    env: &Environment,
    closure: &Closure,
    transfer: &[f64],
    dt: f64,
    ws: &mut ExchangeWorkspace,
) -> Result<()> {
    let mut viscosity = std::mem::take(&mut ws.viscosity);
    let mut bounds = std::mem::take(&mut ws.bounds);
    frozen_viscosity(state, partition, env, closure, &mut viscosity)?;
    basal_friction_coefficients(state, partition, env, closure, &mut bounds)?;
    friction_bounds(state, env, closure.rho(), &mut bounds);
    let r = exchange_step(state, partition, closure.rho(), &viscosity, transfer, &bounds, dt, ws);
    ws.viscosity = viscosity;
    ws.bounds = bounds;
    r
}

/// Coulomb friction on the bottom layer as an exact projection: the bottom
/// velocity stops when the friction impulse over `dt` exceeds its momentum,
/// and is otherwise reduced without changing sign.
pub fn friction_step(
    state: &mut GridState,
    partition: &LayerPartition,
    env: &Environment,
    closure: &Closure,
    dt: f64,
) -> Result<()> {
    let rho = closure.rho();
    let l1 = partition.fraction(0);
    for i in 0..state.nx() {
        let h = state.h[i];
        if h <= H_DRY {
            continue;
        }
        let u1 = state.column(i)[0];
        if u1 == 0.0 {
            continue;
        }
        let mu = closure.basal_friction_coefficient(u1, h, partition, env)?;
        let impulse = dt * bottom_friction_bound(h, env, rho, mu);
        let momentum = rho * l1 * h * u1.abs();
        state.column_mut(i)[0] = if momentum <= impulse {
            0.0
        } else {
            u1.signum() * (momentum - impulse) / (rho * l1 * h)
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilayer::ShearOrder;
    use crate::rheology::{FrictionLaw, Regularization, RheologyParams};
    use proptest::prelude::*;

    fn closure(law: FrictionLaw) -> Closure {
        Closure {
            rheology: RheologyParams::new(0.48, 0.74, 0.279, 7e-4, 2500.0, 0.62).unwrap(),
            law,
            regularization: Regularization::default(),
            shear_order: ShearOrder::First,
        }
    }

    fn column_momentum(s: &GridState, p: &LayerPartition, i: usize) -> f64 {
        s.h[i] * s.mean_velocity(i, p)
    }

    #[test]
    fn two_layer_matches_cramer() {
        // Oracle: the 2×2 system solved by Cramer's rule.
        let p = LayerPartition::uniform(2).unwrap();
        let (rho, h, dt, eta) = (1550.0, 1.0, 0.01, 3000.0);
        let nu = eta / (0.5 * h);
        let m = rho * 0.5 * h / dt;
        let (a11, a12, a21, a22) = (m + nu, -nu, -nu, m + nu);
        let (b1, b2) = (m * 0.0, m * 1.0);
        let det = a11 * a22 - a12 * a21;
        let x1 = (b1 * a22 - a12 * b2) / det;
        let x2 = (a11 * b2 - a21 * b1) / det;

        let mut s = GridState::new(1, 0.0, 1.0, 2).unwrap();
        s.h[0] = h;
        s.column_mut(0).copy_from_slice(&[0.0, 1.0]);
        let viscosity = [0.0, eta, 0.0];
        let transfer = [0.0; 3];
        let mut ws = ExchangeWorkspace::default();
        exchange_step(&mut s, &p, rho, &viscosity, &transfer, &[0.0], dt, &mut ws).unwrap();
        let u = s.column(0);
        assert!((u[0] - x1).abs() < 1e-12);
        assert!((u[1] - x2).abs() < 1e-12);
        // Closed form of the decay of the jump.
        let jump = 1.0 / (1.0 + nu * dt * (2.0 / (rho * 0.5 * h)));
        assert!((u[1] - u[0] - jump).abs() < 1e-12);
        assert!((u[0] + u[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_layer_and_inviscid_are_identity() {
        let mut s = GridState::new(3, 0.0, 1.0, 1).unwrap();
        s.h.fill(0.5);
        s.u = vec![1.0, -2.0, 0.5];
        let before = s.clone();
        let p1 = LayerPartition::uniform(1).unwrap();
        let mut ws = ExchangeWorkspace::default();
        exchange_step(&mut s, &p1, 1550.0, &[0.0; 6], &[0.0; 6], &[0.0; 3], 0.1, &mut ws).unwrap();
        assert_eq!(s, before);

        let p = LayerPartition::uniform(3).unwrap();
        let mut s = GridState::new(2, 0.0, 1.0, 3).unwrap();
        s.h.fill(0.5);
        s.u = vec![1.0, 2.0, 3.0, -1.0, 0.0, 4.0];
        let before = s.clone();
        exchange_step(&mut s, &p, 1550.0, &[0.0; 8], &[0.0; 8], &[0.0; 2], 0.1, &mut ws).unwrap();
        for (a, b) in s.u.iter().zip(&before.u) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn friction_projection() {
        let p = LayerPartition::uniform(1).unwrap();
        let env = crate::multilayer::Environment::new(0.0).unwrap();
        let c = closure(FrictionLaw::Constant);
        // μ g_n dt / l_1 = 0.1.
        let dt = 0.1 / (0.48 * 9.81);
        let mut s = GridState::new(1, 0.0, 1.0, 1).unwrap();
        s.h[0] = 0.2;
        s.u[0] = 1.0;
        friction_step(&mut s, &p, &env, &c, dt).unwrap();
        assert!((s.u[0] - 0.9).abs() < 1e-14);
        s.u[0] = -0.05;
        friction_step(&mut s, &p, &env, &c, dt).unwrap();
        assert_eq!(s.u[0], 0.0);
        friction_step(&mut s, &p, &env, &c, dt).unwrap();
        assert_eq!(s.u[0], 0.0);
    }

    proptest! {
        #[test]
        fn exchange_conserves_column_momentum(
            n in 2usize..12,
            u in prop::collection::vec(-3.0f64..3.0, 12),
            eta in prop::collection::vec(0.0f64..1e5, 13),
            h in 0.001f64..1.0,
            dt in 1e-5f64..1.0,
        ) {
            let p = LayerPartition::uniform(n).unwrap();
            let mut s = GridState::new(1, 0.0, 1.0, n).unwrap();
            s.h[0] = h;
            s.u.copy_from_slice(&u[..n]);
            let mut viscosity = eta[..n + 1].to_vec();
            viscosity[0] = 0.0;
            viscosity[n] = 0.0;
            let before = column_momentum(&s, &p, 0);
            let mut ws = ExchangeWorkspace::default();
            exchange_step(&mut s, &p, 1550.0, &viscosity, &vec![0.0; n + 1], &[0.0], dt, &mut ws).unwrap();
            let after = column_momentum(&s, &p, 0);
            // Round-off grows with the stiffness ratio of coupling to inertia.
            let stiffness = eta.iter().fold(0.0f64, |m, &e| m.max(e)) * n as f64 * n as f64 * dt / (1550.0 * h * h);
            let scale = u[..n].iter().fold(0.0f64, |m, x| m.max(x.abs())) * h;
            prop_assert!((after - before).abs() <= 1e-14 * scale * (1.0 + stiffness), "{} vs {}", after, before);
            // Implicit diffusion cannot create new extrema.
            let (lo, hi) = u[..n].iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            for &x in s.column(0) {
                prop_assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
            }
        }

        #[test]
        fn friction_never_flips_sign(u in -5.0f64..5.0, h in 1e-6f64..1.0, dt in 1e-5f64..0.5) {
            let p = LayerPartition::uniform(4).unwrap();
            let env = crate::multilayer::Environment::new(0.2).unwrap();
            let c = closure(FrictionLaw::MuI);
            let mut s = GridState::new(1, 0.0, 1.0, 4).unwrap();
            s.h[0] = h;
            s.u[0] = u;
            friction_step(&mut s, &p, &env, &c, dt).unwrap();
            prop_assert!(s.u[0] * u >= 0.0);
            prop_assert!(s.u[0].abs() <= u.abs());
        }
    }
}
