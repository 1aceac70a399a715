use serde::Serialize;
use serde_json::Value;

/// Largest observed ratio for one inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantRecord {
    pub name: String,
    /// The inequality the ratio measures, in words.
    pub property: String,
    /// Exact `p/q` form, when every input to the ratio was exact.
    pub max_ratio_exact: Option<String>,
    pub max_ratio: f64,
    pub extremizer: Value,
    pub seed: u64,
    /// Task index within the suite that produced the extremizer.
    pub task: u64,
    pub samples: usize,
}

/// A violated property together with the input that violates it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub property: String,
    pub seed: u64,
    pub task: u64,
    pub detail: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: Value,
    pub checks: usize,
    /// Instances left out because an enumeration cap was hit.
    pub skipped: usize,
    pub records: Vec<ConstantRecord>,
    pub failures: Vec<Counterexample>,
    /// Raw data series, e.g. the full ratio list of `lp-ratio`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Value>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn record(&self, name: &str) -> Option<&ConstantRecord> {
        self.records.iter().find(|r| r.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub config: Value,
    pub suites: Vec<SuiteReport>,
}

impl ConstantsReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}
