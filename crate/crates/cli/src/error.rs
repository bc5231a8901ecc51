use physioedge::budget::BudgetError;
use physioedge::embedding::EmbeddingError;
use physioedge::metrics::MetricsError;
use physioedge::prmd::{CodecError, PrmdError};
use physioedge::prng::PrngError;
use physioedge::recon::ReconError;
use physioedge::signal::SignalError;
use physioedge::sync::SyncError;
use thiserror::Error;

/// Two classes, mapped to exit codes 2 and 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<SignalError> for CliError {
    fn from(e: SignalError) -> Self {
        match e {
            SignalError::NotFound(_)
            | SignalError::ChannelOutOfRange { .. }
            | SignalError::UnsupportedBitDepth(_)
            | SignalError::ZeroChunkLen => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PrngError> for CliError {
    fn from(e: PrngError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<PrmdError> for CliError {
    fn from(e: PrmdError) -> Self {
        match e {
            PrmdError::Prng(_) | PrmdError::ZeroChunkLen => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::Runtime(format!("bad record: {e}"))
    }
}

impl From<ReconError> for CliError {
    fn from(e: ReconError) -> Self {
        match e {
            ReconError::ZeroSparsity
            | ReconError::IllPosed { .. }
            | ReconError::FrameTooShort { .. }
            | ReconError::ZeroIterations
            | ReconError::NegativeTolerance
            | ReconError::ExternalAlgorithm => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::ZeroEmbeddings | EmbeddingError::GridTooShort(_) | EmbeddingError::Prng(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SyncError> for CliError {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::EmptyTrace => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Wraps an I/O failure with the path involved.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}
