//! b-symplectic geometry on a single chart: exterior calculus with
//! logarithmic singularities, non-commutative b-integrable systems, and a
//! numerical construction of action-angle coordinates.

pub mod action_angle;
pub mod bfunction;
pub mod chart;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod form;
pub mod gallery;
pub mod observable;
pub mod poisson;
pub mod report;
pub mod sampling;
pub mod systems;

pub use bfunction::{BFunction, DefiningFunction, PreparedFunction};
pub use chart::Chart;
pub use error::{Error, Result};
pub use expr::Expr;
pub use form::{BForm, BVectorField, VectorField};
pub use observable::Observable;
pub use poisson::BSymplecticStructure;
pub use report::CheckReport;
pub use sampling::SamplePlan;
