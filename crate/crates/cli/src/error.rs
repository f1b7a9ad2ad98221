use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {message}")]
    Config { message: String, key: Option<String> },

    #[error(transparent)]
    Core(#[from] socweave::Error),

    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(message: impl Into<String>, key: Option<String>) -> Self {
        CliError::Config {
            message: message.into(),
            key,
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Config { message, key } => json!({
                "error": "config",
                "key": key,
                "message": message,
            }),
            CliError::Core(e) => json!({
                "error": core_kind(e),
                "message": e.to_string(),
            }),
            CliError::Runtime(m) => json!({
                "error": "runtime",
                "message": m,
            }),
        }
    }
}

fn core_kind(e: &socweave::Error) -> &'static str {
    use socweave::Error::*;
    match e {
        Io { .. } => "io",
        Parse { .. } => "parse",
        UnknownEdgeType { .. } => "unknown_edge_type",
        InvalidArgument(_) => "invalid_argument",
        DimensionMismatch { .. } => "dimension_mismatch",
        ZeroVariance(_) => "zero_variance",
        NonFinite(_) => "non_finite",
        InsufficientData(_) => "insufficient_data",
        Format(_) => "format",
        SeedFailed { .. } => "seed_failed",
    }
}

pub fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}
