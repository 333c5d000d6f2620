//! Scenario runner and verification suites.

pub mod appendix;
pub mod estimates;
pub mod config;
pub mod fit;
pub mod kernel_bounds;
pub mod norms;
pub mod parabolic;
pub mod run;
pub mod report;

pub use config::{Scenario, SuiteName, SCHEMA_VERSION};
pub use fit::{fit_decay_exponent, fit_log_log, SlopeFit};
pub use report::{Check, RatioReport, SuiteOutcome, Table, Verdict};
