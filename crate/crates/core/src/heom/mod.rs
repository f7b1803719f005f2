//! Hierarchical equations of motion for two qubits coupled through `σ_z`
//! to independent Drude-Lorentz baths.
//!
//! The hierarchy is truncated hard at tier `L`: ADOs above it are zero.

mod hierarchy;
mod liouvillian;
mod rhs;
mod solve;

pub use hierarchy::{ado_count, binomial, estimated_bytes, AdoIndex, Hierarchy, HierarchyOptions, Mode};
pub use liouvillian::{assemble_liouvillian, estimated_nnz, SparseLiouvillian};
pub use rhs::{heom_rhs, HeomGenerator, HierarchyState, ADO_LEN};
pub use solve::{
    first_tier_expectation, first_tier_sum, propagate, propagate_state, steady_state, steady_state_density,
    LinearSolver, PropagationOptions, SteadyState, STEADY_STATE_TOL,
};
