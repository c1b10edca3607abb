//! Numerical toolkit for collective spontaneous emission in dilute clouds of
//! initially inverted atoms with one or several decay channels.
//!
//! The crate provides four ways to compute the same physics at different cost
//! and fidelity:
//!
//! * [`master`]: numerically exact master-equation evolution in a truncated
//!   Liouville basis that exploits permutation structure of the initial state
//!   (small atom numbers only).
//! * [`correlations`]: a factorized equation of motion for second-order
//!   atom-pair correlations, polynomial in atom number.
//! * [`semiclassical`]: closed-form rate equations driven by a single
//!   cloud-shape parameter.
//! * [`eigenmodes`]: decay-rate spectrum of the linearized (early-time)
//!   emission problem.
//!
//! Geometry comes from [`cloud`], pairwise couplings from [`couplings`], and
//! ensemble averaging with deterministic seeding from [`ensemble`]. All
//! solvers share the adaptive integrator in [`ode`] and report results as
//! [`trajectory::Trajectory`] values.
//!
//! Internally everything is dimensionless: the reference transition has unit
//! decay rate and unit wavelength, and time is measured in inverse reference
//! linewidths. Callers working in SI units convert once at the boundary.

pub mod basis;
pub mod cloud;
pub mod correlations;
pub mod couplings;
pub mod eigenmodes;
pub mod ensemble;
pub mod master;
pub mod ode;
pub mod semiclassical;
pub mod trajectory;

mod error;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
