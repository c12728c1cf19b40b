//! Verification suites for the `aktorus` engine: scenario configuration, named checks with
//! tolerances, JSON/CSV reports and the drivers behind the `aktorus` command.

pub mod config;
pub mod error;
pub mod quadrature;
pub mod report;
pub mod suites;

pub use config::{Format, ScenarioConfig, Suite};
pub use error::{HarnessError, Result};
pub use report::{Check, VerificationReport};
pub use suites::{run_convergence, run_descent, run_suite};
