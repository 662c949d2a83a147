//! Simulation and verification toolkit for the kinetic Fokker–Planck–Alignment
//! equation with Rayleigh friction / self-propulsion
//!
//! ```text
//! d_t f + v . grad_x f = s_rho [ Lap_v f + div_v( (v - [u]_rho + F(v)) f ) ]
//! ```
//!
//! on a periodic 1D x 1D phase-space grid.
//!
//! * [`force`]: force, potential, coercivity constants, Gibbs equilibrium.
//! * [`averaging`]: environmental averaging models and assumption checks.
//! * [`solver`]: Strang-split semi-Lagrangian / Chang–Cooper solver.
//! * [`particles`]: Euler–Maruyama simulator of the agent system.
//! * [`diagnostics`]: entropy, Fisher and dissipation functionals, monitors,
//!   decay fits.
//!
//! Hot loops honour an [`exec::Exec`] policy; the `parallel` feature (on by
//! default) runs them on rayon.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod averaging;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod force;
pub mod grid;
pub mod particles;
pub mod quadrature;
pub mod rng;
pub mod solver;

pub use error::{FpaError, Result};
pub use exec::Exec;
pub use grid::Grid;
