//! Two two-level atoms crossing a single-mode cavity with delayed Gaussian
//! couplings: adiabatic spectrum, dynamics, mixing angle and gate protocols.

pub mod error;
pub mod model;
pub mod ode;
pub mod quadrature;
pub mod spectrum;
pub mod dynamics;
pub mod angle;
pub mod gates;

pub use error::{Error, Result};
pub use model::{AtomQubit, BareState, Level, PulseConfig, SystemState};
