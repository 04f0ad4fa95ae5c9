use farm_core::align::AlignError;
use farm_core::fragment::FgGraphError;
use farm_core::gnn::GnnError;
use farm_core::kg::TripleError;
use farm_core::kge::KgeError;
use farm_core::pipeline::PipelineError;
use farm_core::tokenize::TokenError;

/// Exit codes: 2 usage, 3 data, 4 numeric failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<KgeError> for CliError {
    fn from(e: KgeError) -> Self {
        match e {
            KgeError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            KgeError::Config(_) | KgeError::Dim { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        match e {
            GnnError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            GnnError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        match e {
            AlignError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            AlignError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Kge(k) => k.into(),
            PipelineError::Gnn(g) => g.into(),
            PipelineError::Empty => CliError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(TripleError, FgGraphError, TokenError, serde_json::Error);
