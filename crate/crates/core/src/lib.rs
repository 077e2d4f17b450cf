//! Simulation toolkit for dissipative reset of many qubits through a chain
//! of coupled lossy resonators.
//!
//! Layers, bottom-up: [`ops`] (operators and states), [`circuit`] (the
//! network Hamiltonian and its rotated-frame quantities), [`dynamics`]
//! (master-equation and trajectory solvers), [`rates`] (closed-form rate
//! model) and [`experiment`] (configuration, scenarios and output).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod ops;
pub mod rates;

pub use error::{Error, Result};
