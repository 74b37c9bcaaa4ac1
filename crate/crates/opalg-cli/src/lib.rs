//! Instance loading, suite orchestration and report emission for the
//! operator-algebra verification CLI.

pub mod instance;
pub mod report;
pub mod suites;

pub use instance::{load_instance, Instance, LoadError};
pub use report::{CheckResult, Report, SuiteResult};
pub use suites::{resolve_suites, run_suite};
