//! Transport part of the split step.
//!
//! Each layer is advanced as a shallow-water system that shares the total
//! thickness `h`: the layer discharge `q_α = h u_α` sees the full hydrostatic
//! pressure `g_n h²/2`, while `h` moves with the partition-weighted mass flux.
//! Interface fluxes are Rusanov fluxes on hydrostatically reconstructed states,
//! which keeps the scheme positive and exact on lakes at rest. The discrete
//! layer mass-flux divergences give the inter-layer transfers `G`, which are
//! returned for the exchange step.

use crate::error::{Error, Result};
use crate::multilayer::{transfer_from_divergence, Environment, GridState, LayerPartition, H_DRY};

use super::{Boundary, BoundaryPair};

/// Per-face reconstructed states and fluxes, reused across steps.
#[derive(Debug, Default, Clone)]
pub struct TransportWorkspace {
    mass_flux: Vec<f64>,
    layer_mass_flux: Vec<f64>,
    momentum_flux: Vec<f64>,
    /// Thickness seen from the left / right cell after reconstruction.
    h_left: Vec<f64>,
    h_right: Vec<f64>,
    divergence: Vec<f64>,
}

struct Ghost<'a> {
    state: &'a GridState,
    boundary: BoundaryPair,
}

impl Ghost<'_> {
    /// Thickness, bed and velocity sign of extended cell `j` (`0` and `nx+1` are ghosts).
    fn cell(&self, j: usize) -> (usize, f64) {
        let nx = self.state.nx();
        if j == 0 {
            (0, self.boundary.left.velocity_sign())
        } else if j == nx + 1 {
            (nx - 1, self.boundary.right.velocity_sign())
        } else {
            (j - 1, 1.0)
        }
    }
}

impl Boundary {
    fn velocity_sign(self) -> f64 {
        match self {
            Boundary::Open => 1.0,
            Boundary::Wall => -1.0,
        }
    }
}

/// Advances `state` by `dt` through the transport terms and the downslope
/// gravity source, and writes the interface mass transfers (row-major
/// `nx × (N+1)`) into `transfer`.
pub fn hyperbolic_step(
    state: &mut GridState,
    env: &Environment,
    partition: &LayerPartition,
    boundary: BoundaryPair,
    dt: f64,
    ws: &mut TransportWorkspace,
    transfer: &mut Vec<f64>,
) -> Result<()> {
    let nx = state.nx();
    let n = partition.len();
    let nf = nx + 1;
    let g_n = env.g_n();
    let g_t = env.g_t();

    ws.mass_flux.resize(nf, 0.0);
    ws.layer_mass_flux.resize(nf * n, 0.0);
    ws.momentum_flux.resize(nf * n, 0.0);
    ws.h_left.resize(nf, 0.0);
    ws.h_right.resize(nf, 0.0);
    ws.divergence.resize(n, 0.0);
    transfer.resize(nx * (n + 1), 0.0);

    {
        let ghost = Ghost {
            state: &*state,
            boundary,
        };
        for f in 0..nf {
            // Face f separates extended cells f and f+1.
            let (il, sl) = ghost.cell(f);
            let (ir, sr) = ghost.cell(f + 1);
            let (hl, hr) = (state.h[il], state.h[ir]);
            let (zl, zr) = (state.z_b[il], state.z_b[ir]);
            let z_face = zl.max(zr);
            let hls = (hl + zl - z_face).max(0.0);
            let hrs = (hr + zr - z_face).max(0.0);
            ws.h_left[f] = hls;
            ws.h_right[f] = hrs;

            let ul = state.column(il);
            let ur = state.column(ir);
            let (cl, cr) = ((g_n * hls).sqrt(), (g_n * hrs).sqrt());
            let mut lambda = 0.0f64;
            for k in 0..n {
                lambda = lambda
                    .max((sl * ul[k]).abs() + cl)
                    .max((sr * ur[k]).abs() + cr);
            }

            let pressure = 0.5 * g_n * (hls * hls + hrs * hrs) * 0.5;
            let mut total = 0.0;
            for k in 0..n {
                let (vl, vr) = (sl * ul[k], sr * ur[k]);
                let (ql, qr) = (hls * vl, hrs * vr);
                let fm = 0.5 * (ql + qr) - 0.5 * lambda * (hrs - hls);
                let fq = 0.5 * (ql * vl + qr * vr) + pressure - 0.5 * lambda * (qr - ql);
                ws.layer_mass_flux[f * n + k] = fm;
                ws.momentum_flux[f * n + k] = fq;
                total += partition.fraction(k) * fm;
            }
            ws.mass_flux[f] = total;
        }
    }

    let ratio = dt / state.dx;
    for i in 0..nx {
        let (fl, fr) = (i, i + 1);
        let h_old = state.h[i];
        let mut h_new = h_old - ratio * (ws.mass_flux[fr] - ws.mass_flux[fl]) - dt * env.g_half;
        if h_new < 0.0 {
            if h_new < -1e-12 {
                return Err(Error::NegativeThickness {
                    cell: i,
                    value: h_new,
                    time: state.t,
                });
            }
            h_new = 0.0;
        }
        if !h_new.is_finite() {
            return Err(Error::NonFinite {
                what: "thickness",
                cell: i,
            });
        }

        // Pressure corrections of the hydrostatic reconstruction.
        let corr_right = 0.5 * g_n * (h_old * h_old - ws.h_left[fr] * ws.h_left[fr]);
        let corr_left = 0.5 * g_n * (h_old * h_old - ws.h_right[fl] * ws.h_right[fl]);

        for k in 0..n {
            ws.divergence[k] =
                (ws.layer_mass_flux[fr * n + k] - ws.layer_mass_flux[fl * n + k]) / state.dx;
        }
        transfer_from_divergence(
            partition,
            env.g_half,
            &ws.divergence,
            &mut transfer[i * (n + 1)..(i + 1) * (n + 1)],
        );

        let column = state.column_mut(i);
        for (k, u) in column.iter_mut().enumerate() {
            let q_old = h_old * *u;
            let q_new = q_old
                - ratio
                    * ((ws.momentum_flux[fr * n + k] + corr_right)
                        - (ws.momentum_flux[fl * n + k] + corr_left))
                + dt * g_t * h_old;
            *u = if h_new > H_DRY { q_new / h_new } else { 0.0 };
            if !u.is_finite() {
                return Err(Error::NonFinite {
                    what: "velocity",
                    cell: i,
                });
            }
        }
        state.h[i] = h_new;
    }
    Ok(())
}
