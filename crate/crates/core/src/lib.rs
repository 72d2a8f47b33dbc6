//! Simulator and analysis library for collective photon emission in 3D
//! waveguide arrays.
//!
//! An ensemble of system waveguides couples to a long linear array of bath
//! waveguides that acts as an engineered common reservoir. Because the
//! coupled-mode Hamiltonian is quadratic, first and second operator moments
//! are a complete state description for every observable handled here; the
//! crate propagates them exactly and compares the result against the
//! closed-form predictions of the weak-coupling effective model in which
//! only a single collective mode decays.
//!
//! Module map:
//!
//! * [`model`] — specs, validation, moment states, collective quantities
//! * [`coupling`] — the reference coupling set and a distance-to-rate model
//! * [`states`] — bright/normal/dark constructors and splitter networks
//! * [`analytic`] — closed-form decay, intensity, correlations, thermal bath
//! * [`numeric`] — exact coupled-mode propagation on a truncated bath
//! * [`harness`] — config-driven experiment runner behind the `wgsr` binary
//!
//! Rates are dimensionless multiples of the bath-bath rate; time is in
//! inverse bath-bath rates.

pub mod analytic;
pub mod coupling;
pub mod error;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod states;

pub use error::{Error, Result};
