use std::fmt;

use cfx_core::Error;

pub const USAGE: i32 = 1;
pub const ASSERTION: i32 = 2;
pub const NO_EXPLANATIONS: i32 = 3;
pub const INFEASIBLE: i32 = 4;

/// An error message with the process exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ShapleyInfeasible { .. }
            | Error::OracleInfeasible { .. }
            | Error::IrreducibilityInfeasible { .. } => INFEASIBLE,
            Error::TrainingDiverged { .. } | Error::Check { .. } | Error::Degenerate { .. } => {
                ASSERTION
            }
            _ => USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;
