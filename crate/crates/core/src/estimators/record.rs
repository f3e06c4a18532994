use serde::{Deserialize, Serialize};
use serde_json::Value;

/// JSON record emitted by every estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRecord {
    pub operation: String,
    pub params: Value,
    pub seed: u64,
    pub values: Value,
    pub std_errors: Value,
    pub replicates: usize,
    pub runtime_ms: u64,
    pub metadata: Value,
}

impl EstimatorRecord {
    /// The record without its wall-clock field, for reproducibility checks.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("record serialises");
        if let Value::Object(m) = &mut v {
            m.remove("runtime_ms");
        }
        v
    }
}
