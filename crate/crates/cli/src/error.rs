//! Error classification behind the process exit codes: 1 for usage
//! problems, 2 for bad input data, 3 for runtime failures.

use std::fmt;

use substan::corpus::CorpusError;
use substan::encoder::EncoderError;
use substan::linker::LinkerError;
use substan::metrics::MetricsError;
use substan::render::RenderError;
use substan::scoring::ScoringError;
use substan::tagger::TaggerError;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong: bad flag values, unknown names,
    /// invalid configuration.
    Usage(String),
    /// Inputs were read but are unusable: parse failures, invariant
    /// violations, empty or mismatched corpora.
    Data(String),
    /// The environment failed underneath us: I/O, image encoding.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Runtime(msg) => {
                write!(f, "{msg}")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<substan::agreement::AgreementError> for CliError {
    fn from(e: substan::agreement::AgreementError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<TaggerError> for CliError {
    fn from(e: TaggerError) -> Self {
        match e {
            TaggerError::BadConfig(_) => CliError::Usage(e.to_string()),
            TaggerError::Encoder(EncoderError::UnknownEncoder { .. }) => {
                CliError::Usage(e.to_string())
            }
            TaggerError::EmptyCorpus
            | TaggerError::WrongTask { .. }
            | TaggerError::ClassOrder { .. }
            | TaggerError::Json(_)
            | TaggerError::Encoder(_) => CliError::Data(e.to_string()),
            TaggerError::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<LinkerError> for CliError {
    fn from(e: LinkerError) -> Self {
        match e {
            LinkerError::BadConfig(_) => CliError::Usage(e.to_string()),
            LinkerError::Encoder(EncoderError::UnknownEncoder { .. }) => {
                CliError::Usage(e.to_string())
            }
            LinkerError::Io(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
