//! Error classification into process exit codes.

use std::fmt::Display;

use credex::ecm::EcmError;
use credex::explain::ExplainError;
use credex::iemm::IemmError;

/// Bad usage, unreadable input, I/O failure or an unsupported request.
pub const EXIT_INPUT: u8 = 2;
/// The numerical procedure itself could not proceed.
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_INPUT, error: error.into() }
    }

    fn numeric(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_NUMERIC, error: error.into() }
    }
}

pub trait ResultExt<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Display + Send + Sync + std::fmt::Debug + 'static> ResultExt<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::input(anyhow::anyhow!("{e}")))
    }
}

pub fn ecm(e: EcmError) -> Failure {
    match e {
        EcmError::DegenerateInit(_) | EcmError::SingularCentroidSystem => Failure::numeric(e),
        _ => Failure::input(e),
    }
}

pub fn iemm(e: IemmError) -> Failure {
    match e {
        IemmError::IndistinguishableCentroids(..) => Failure::numeric(e),
        _ => Failure::input(e),
    }
}

pub fn explain(e: ExplainError) -> Failure {
    match e {
        ExplainError::Iemm(inner) => iemm(inner),
        _ => Failure::input(e),
    }
}
