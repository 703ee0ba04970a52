//! Thermal transport through a single bosonic mode coupled to an emitter and a
//! collector reservoir.
//!
//! [`analytic`] holds the closed forms (occupation, current, transport
//! factor), [`lindblad`] integrates the master equation in a truncated Fock
//! space, and [`fokker_planck`] covers the P-representation. [`validate`]
//! cross-checks them.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod exec;
pub mod fock;
pub mod fokker_planck;
pub mod lindblad;
pub mod output;
pub mod params;
pub mod validate;

pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{summarize, thermal_occupation, SystemParams, ThermalSummary};
