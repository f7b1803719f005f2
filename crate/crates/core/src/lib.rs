//! Numerically exact simulation of the two-qubit spin-boson model.
//!
//! Two backends share one model description ([`config::ModelConfig`]):
//! the hierarchical equations of motion ([`heom`]) and the
//! reaction-coordinate mapping ([`rcm`]). Observables in [`observables`]
//! work on the reduced trajectories either one produces.
//!
//! Units: `ħ = k_B = 1`. Energies, frequencies and temperatures share one
//! unit and time is measured in its inverse.

pub mod bath;
pub mod config;
pub mod error;
pub mod heom;
pub mod krylov;
pub mod observables;
pub mod ode;
pub mod qops;
pub mod quadrature;
pub mod rcm;

pub use config::{build_system_hamiltonian, InitialState, Method, ModelConfig, Numerics, Qubit};
pub use error::{Error, Result};
pub use qops::{ComplexOperator, DensityMatrix, C64};
