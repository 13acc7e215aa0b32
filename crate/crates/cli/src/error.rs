//! Exit codes and the JSON error written to stderr.

use std::fmt::Display;
use std::path::Path;

use serde_json::json;
use snomed_kg::dataset::{CaseError, ConvertError};
use snomed_kg::graph::CsvError;
use snomed_kg::parser::ParseError;
use snomed_kg::pipeline::PipelineError;
use snomed_kg::snowstorm::FetchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Io,
    Backend,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Io => 4,
            Kind::Backend => 5,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Io => "io",
            Kind::Backend => "backend",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Display) -> Self {
        CliError { kind, message: message.to_string() }
    }

    pub fn usage(message: impl Display) -> Self {
        CliError::new(Kind::Usage, message)
    }

    pub fn data(message: impl Display) -> Self {
        CliError::new(Kind::Data, message)
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::new(Kind::Io, format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self, command: &str) -> String {
        json!({
            "error": {
                "kind": self.kind.name(),
                "command": command,
                "message": self.message,
                "exit_code": self.kind.exit_code(),
            }
        })
        .to_string()
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        let kind = match e {
            ParseError::Io { .. } | ParseError::Missing { .. } => Kind::Io,
            _ => Kind::Data,
        };
        CliError::new(kind, e)
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        let kind = if matches!(e, CsvError::Io { .. }) { Kind::Io } else { Kind::Data };
        CliError::new(kind, e)
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        let kind = if matches!(e, CaseError::Io { .. }) { Kind::Io } else { Kind::Data };
        CliError::new(kind, e)
    }
}

impl From<ConvertError> for CliError {
    fn from(e: ConvertError) -> Self {
        let kind = if matches!(e, ConvertError::Io { .. }) { Kind::Io } else { Kind::Data };
        CliError::new(kind, e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Parse(e) => e.into(),
            PipelineError::Csv(e) => e.into(),
            PipelineError::Case(e) => e.into(),
            other => CliError::data(other),
        }
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        let kind = if matches!(e, FetchError::Config(_)) { Kind::Usage } else { Kind::Backend };
        CliError::new(kind, e)
    }
}
