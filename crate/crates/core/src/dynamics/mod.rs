//! Flows of b-Hamiltonian fields, period lattices and uniformization.

pub mod integrator;
pub mod lattice;
pub mod uniformize;

pub use integrator::{joint_flow, Integrator, Trajectory};
pub use lattice::{period_lattice, LatticeOptions, PeriodLatticeBasis};
pub use uniformize::{Interpolation, LatticeField, TorusLayout, Uniformization, UniformizedField};
