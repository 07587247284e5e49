//! Exit-code discipline: 0 success, 2 config/validation, 3 training
//! abort, 4 missing prerequisite, 5 quality-gate exhaustion.

use ganforge_gan::GanError;
use ganforge_harness::HarnessError;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;
pub const EXIT_MISSING: i32 = 4;
pub const EXIT_GATE: i32 = 5;

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_VALIDATION, message: msg.into() }
    }

    pub fn missing(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_MISSING, message: msg.into() }
    }
}

fn io_code(e: &std::io::Error) -> i32 {
    if e.kind() == std::io::ErrorKind::NotFound {
        EXIT_MISSING
    } else {
        EXIT_VALIDATION
    }
}

impl From<ganforge_data::DataError> for CliError {
    fn from(e: ganforge_data::DataError) -> Self {
        let code = match &e {
            ganforge_data::DataError::Io(io) => io_code(io),
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<GanError> for CliError {
    fn from(e: GanError) -> Self {
        let code = match &e {
            GanError::Training { .. } => EXIT_TRAINING,
            GanError::Io(io) => io_code(io),
            GanError::Checkpoint(_) => EXIT_MISSING,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<ganforge_metrics::MetricError> for CliError {
    fn from(e: ganforge_metrics::MetricError) -> Self {
        let code = match &e {
            ganforge_metrics::MetricError::ExtractorUntrained(_) => EXIT_MISSING,
            ganforge_metrics::MetricError::Io(io) => io_code(io),
            ganforge_metrics::MetricError::Gan(g) => return CliError::from_gan_ref(g),
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl CliError {
    fn from_gan_ref(e: &GanError) -> Self {
        let code = match e {
            GanError::Training { .. } => EXIT_TRAINING,
            GanError::Checkpoint(_) => EXIT_MISSING,
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<ganforge_embed::EmbedError> for CliError {
    fn from(e: ganforge_embed::EmbedError) -> Self {
        let code = match &e {
            ganforge_embed::EmbedError::Io(io) => io_code(io),
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::GateExhausted { .. } => EXIT_GATE,
            HarnessError::Gan(GanError::Training { .. }) => EXIT_TRAINING,
            HarnessError::Io(io) => io_code(io),
            _ => EXIT_VALIDATION,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<ganforge_core::TensorError> for CliError {
    fn from(e: ganforge_core::TensorError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError { code: io_code(&e), message: e.to_string() }
    }
}
