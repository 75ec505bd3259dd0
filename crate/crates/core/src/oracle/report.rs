use std::collections::BTreeMap;

use serde::Serialize;

/// One oracle outcome, serialized as a JSON record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRecord {
    pub check_name: String,
    pub parameters: BTreeMap<String, f64>,
    /// Residual or relative error, depending on the check.
    pub residual: f64,
    pub converged: bool,
}

impl OracleRecord {
    pub fn new(check_name: impl Into<String>, residual: f64, converged: bool) -> Self {
        Self {
            check_name: check_name.into(),
            parameters: BTreeMap::new(),
            residual,
            converged,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_owned(), value);
        self
    }
}
