use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one verification.
///
/// `passed` holds exactly when `discrepancy <= tolerance`; for statistical
/// checks the tolerance is the critical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub exact: bool,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn exact(check: &str, discrepancy: f64, tolerance: f64) -> Self {
        CheckReport {
            check: check.to_string(),
            exact: true,
            discrepancy,
            tolerance,
            passed: discrepancy.is_finite() && discrepancy <= tolerance,
            replicates: None,
            seed: None,
            details: BTreeMap::new(),
        }
    }

    pub fn statistical(check: &str, statistic: f64, critical: f64, replicates: usize, seed: u64) -> Self {
        CheckReport {
            exact: false,
            replicates: Some(replicates),
            seed: Some(seed),
            ..Self::exact(check, statistic, critical)
        }
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.details.insert(key.to_string(), value);
        }
        self
    }
}
