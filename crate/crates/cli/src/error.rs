use thiserror::Error;

use crate::experiments::MemberStatus;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] oldroyd_core::Error),
    #[error("blow-up at t = {t} after {steps} steps")]
    BlowUp { t: f64, steps: usize },
    #[error("sweep aborted: {}", describe(.0))]
    SweepAborted(Vec<MemberStatus>),
    #[error("acceptance check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn describe(statuses: &[MemberStatus]) -> String {
    statuses.iter().map(|s| format!("nu={:e}: {}", s.nu, s.status)).collect::<Vec<_>>().join(", ")
}

impl CliError {
    /// Process exit code: 2 configuration, 3 blow-up, 4 failed check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(oldroyd_core::Error::Config(_)) => 2,
            CliError::BlowUp { .. } | CliError::SweepAborted(_) | CliError::Core(oldroyd_core::Error::BlowUp(_)) => 3,
            CliError::CheckFailed(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
