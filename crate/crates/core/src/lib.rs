//! Floquet analysis of periodically driven two-level qubits.
//!
//! The crate is organised around the driven fluxonium: [`circuit`] reduces the
//! full circuit to an effective two-level model, [`floquet`] solves for the
//! quasi-energies and periodic modes, [`noise`] turns those into filter weights
//! and decoherence rates, [`sweetspot`] locates first-order insensitive drive
//! points and [`dynamics`] simulates gates and readout on the driven qubit.
//!
//! Configuration quantities are ordinary frequencies in GHz and fluxes in units
//! of 2π. Everything internal is angular frequency in rad/ns with ħ = 1.

pub mod circuit;
pub mod dynamics;
mod error;
pub mod floquet;
pub mod linalg;
pub mod noise;
pub mod ode;
pub mod special;
pub mod sweetspot;
pub mod units;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
