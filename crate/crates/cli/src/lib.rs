//! Command-line driver for `irrper-core`: configuration, mode runners,
//! reports and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod run;

/// Bad flags, config file or parameters (exit code 1).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

/// Exit code for a core error: numerical failures are 2, the rest 1.
pub fn exit_code_for(e: &irrper_core::Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}
