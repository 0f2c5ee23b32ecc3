use std::path::PathBuf;

use afba::dataio::DataError;
use afba::momentum::ScheduleError;
use afba::solver::SolveError;
use afba::svm::SvmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error in {path}: {source}")]
    Data { path: PathBuf, source: DataError },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("reference value F_ref = {f_ref} exceeds the best final objective {best} (schedule {schedule}); run a longer reference")]
    ReferenceNotConverged { f_ref: f64, best: f64, schedule: String },
}

impl From<ScheduleError> for HarnessError {
    fn from(e: ScheduleError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl HarnessError {
    /// 1 usage/config, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data { .. } | HarnessError::Read { .. } | HarnessError::Write { .. } => 2,
            HarnessError::Svm(e) => match e {
                SvmError::InvalidGamma(_) | SvmError::InvalidLambda(_) | SvmError::ModelLength { .. } => 1,
                SvmError::Linalg(_) => 3,
                _ => 2,
            },
            HarnessError::Solve(e) => match e {
                SolveError::NonFinite { .. } => 3,
                _ => 1,
            },
            HarnessError::ReferenceNotConverged { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
