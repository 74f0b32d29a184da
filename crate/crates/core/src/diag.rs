use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
}

/// One structured diagnostic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub operation: String,
    pub severity: Severity,
    pub message: String,
}

/// Collector for non-fatal conditions raised while processing.
///
/// Records are also forwarded to the `log` facade as they arrive.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    records: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn warn(&mut self, operation: &str, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{operation}: {message}");
        self.records.push(Diagnostic {
            operation: operation.to_string(),
            severity: Severity::Warning,
            message,
        });
    }

    pub fn info(&mut self, operation: &str, message: impl Into<String>) {
        let message = message.into();
        log::info!("{operation}: {message}");
        self.records.push(Diagnostic {
            operation: operation.to_string(),
            severity: Severity::Info,
            message,
        });
    }

    pub fn records(&self) -> &[Diagnostic] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has(&self, operation: &str) -> bool {
        self.records.iter().any(|r| r.operation == operation)
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.records.extend(other.records);
    }
}
