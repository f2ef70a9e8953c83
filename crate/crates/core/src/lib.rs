//! Differential greybox fuzzing for timing and space side channels.
//!
//! A [`driver`] runs a target twice on one public input and two secrets and
//! reports the cost difference measured by [`metering`]. The [`campaign`]
//! evolves inputs with [`mutation`] under [`coverage`] guidance to maximize
//! that difference, and the [`oracle`] computes the true maximum on small
//! domains by enumeration.

pub mod benchmarks;
pub mod campaign;
pub mod coverage;
pub mod driver;
pub mod error;
pub mod metering;
pub mod mutation;
pub mod oracle;
pub mod queue;
pub mod report;

pub use driver::{run_driver, Constraints, Decoded, DiffResult, DriverSpec, Outcome};
pub use metering::{CostDimension, CostReading, Meter};
