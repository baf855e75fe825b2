use std::fmt;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments or input documents.
    Parse(String),
    /// Input parsed but violates a mathematical precondition.
    Domain(String),
    /// The charge path passes through the origin.
    OriginCrossing { t: f64 },
    /// Flow blew up or its step violates the stability bound.
    Diverged(String),
    NotConverged(String),
    /// A check ran to completion and failed.
    CheckFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::OriginCrossing { .. } => 4,
            CliError::Diverged(_) => 5,
            CliError::NotConverged(_) => 6,
            CliError::CheckFailed(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::OriginCrossing { t } => write!(f, "charge path crosses the origin at t = {t}"),
            CliError::Diverged(m) => write!(f, "diverged: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<dhym_core::spectral::SpectralError> for CliError {
    fn from(e: dhym_core::spectral::SpectralError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<dhym_core::charge::ChargeError> for CliError {
    fn from(e: dhym_core::charge::ChargeError) -> Self {
        use dhym_core::charge::ChargeError;
        match e {
            ChargeError::OriginCrossing { t } => CliError::OriginCrossing { t },
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<dhym_core::syz::SyzError> for CliError {
    fn from(e: dhym_core::syz::SyzError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<dhym_core::flow::FlowError> for CliError {
    fn from(e: dhym_core::flow::FlowError) -> Self {
        use dhym_core::flow::FlowError;
        match e {
            FlowError::Diverged { .. } | FlowError::CflViolation { .. } => CliError::Diverged(e.to_string()),
            FlowError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            FlowError::InvalidConfig(_) | FlowError::ShapeMismatch { .. } => CliError::Parse(e.to_string()),
            FlowError::InvalidBackground(_) | FlowError::Spectral(_) => CliError::Domain(e.to_string()),
        }
    }
}
