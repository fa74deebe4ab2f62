//! Multilayer shallow model for dry granular flows with a μ(I) rheology.
//!
//! The flow is split into `N` layers of fixed relative thickness, each with its
//! own downslope velocity. Layers exchange mass and momentum through their
//! interfaces, where the viscosity follows from the μ(I) law evaluated with a
//! hydrostatic pressure. The bed applies Coulomb friction.
//!
//! - [`rheology`]: friction law, inertial number, regularized viscosity.
//! - [`multilayer`]: layer partition, grid state and interface closures.
//! - [`solver`]: split finite-volume time integration.
//! - [`scenarios`]: closed-form uniform flow, column collapse set-up, deposit diagnostics.
//! - [`runs`]: the uniform-flow and collapse drivers.
//! - [`cli`]: configuration files, commands and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod multilayer;
pub mod rheology;
pub mod runs;
pub mod scenarios;
pub mod solver;

pub use error::{Error, Result};
