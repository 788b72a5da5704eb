//! Action-angle coordinates near a Liouville torus meeting `Z`, and local
//! Darboux–Carathéodory charts.

pub mod chart;
pub mod darboux;
pub mod homotopy;
pub mod verify;

pub use chart::{ActionAngleChart, ChartExport, NormalCoordinates, PipelineOptions};
pub use darboux::{DarbouxChart, DarbouxReport};
pub use homotopy::HomotopyOperator;
pub use verify::{verify_normal_form, NormalFormMap, NormalFormReport};
