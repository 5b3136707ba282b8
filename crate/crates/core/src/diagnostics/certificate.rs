use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Verdict for one quantitative estimate checked along simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Short identifier, e.g. `absorbing-ball`.
    pub name: String,
    /// The inequality being checked, written out.
    pub estimate: String,
    /// Fitted or measured constants by name.
    pub constants: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub passed: bool,
    /// Number of samples (or pairs) that entered the verdict.
    pub samples: usize,
    /// Worst signed slack; positive values are violations.
    pub worst_margin: f64,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(name: &str, estimate: &str) -> Self {
        Self {
            name: name.to_string(),
            estimate: estimate.to_string(),
            constants: BTreeMap::new(),
            tolerance: 0.0,
            passed: false,
            samples: 0,
            worst_margin: f64::NAN,
            notes: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.constants.insert(key.to_string(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// One-line human summary.
    pub fn summary_line(&self) -> String {
        let consts: Vec<String> = self.constants.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
        format!(
            "{} {} [{}] margin={:.3e} n={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            consts.join(", "),
            self.worst_margin,
            self.samples
        )
    }
}
