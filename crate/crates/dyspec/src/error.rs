use serde_json::json;
use thiserror::Error;

/// Failures of a run, each with a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", field.as_ref().map(|f| format!(" at `{f}`")).unwrap_or_default())]
    Config { field: Option<String>, message: String },
    #[error("integration blew up after t = {last_good_time}")]
    Integration { last_good_time: f64 },
    #[error("QR stepping lost conditioning at t = {time} (|r_ii| = {value:e})")]
    Conditioning { time: f64, value: f64 },
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Integration { .. } => 3,
            CliError::Conditioning { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let detail = match self {
            CliError::Config { field, .. } => json!({ "kind": "config", "field": field }),
            CliError::Integration { last_good_time } => json!({ "kind": "integration", "last_good_time": last_good_time }),
            CliError::Conditioning { time, value } => json!({ "kind": "conditioning", "time": time, "value": value }),
            CliError::Io(_) => json!({ "kind": "io" }),
        };
        let mut v = json!({ "error": detail, "exit_code": self.exit_code() });
        v["error"]["message"] = json!(self.to_string());
        v
    }
}

impl From<dyspec_core::Error> for CliError {
    fn from(e: dyspec_core::Error) -> Self {
        match e {
            dyspec_core::Error::Integration { last_good_time } => CliError::Integration { last_good_time },
            dyspec_core::Error::Conditioning { time, value } => CliError::Conditioning { time, value },
            other => CliError::Config { field: None, message: other.to_string() },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
