//! Serializable result shapes shared by the library and the CLI.

use serde::{Deserialize, Serialize};

use crate::ce::SelectionResult;
use crate::data::DiscretizedDataset;
use crate::eval::delta_ir;
use crate::infotheory;

/// JSON encoding of +/-infinity as null; finite values pass through.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// The documented selection-result object.
///
/// `delta_ir` is computed on the same data the selection ran on; an
/// information ratio of +infinity (zero mutual information) serializes as
/// null.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected_indices: Vec<usize>,
    pub selected_names: Vec<String>,
    pub final_p: Vec<f64>,
    pub gamma_trace: Vec<f64>,
    pub iterations: usize,
    pub objective_bits: f64,
    pub entropy_y_bits: f64,
    #[serde(with = "inf_as_null")]
    pub delta_ir: f64,
    pub elapsed_seconds: f64,
    pub converged: bool,
}

impl SelectionReport {
    pub fn new(result: &SelectionResult, ddata: &DiscretizedDataset) -> Self {
        let selected_indices = result.mask.selected_indices();
        let selected_names = selected_indices
            .iter()
            .map(|&i| ddata.column_names[i].clone())
            .collect();
        let y = infotheory::joint_encode(&[ddata.label_codes.as_slice()]).expect("non-empty");
        SelectionReport {
            selected_indices,
            selected_names,
            final_p: result.final_p.probabilities().to_vec(),
            gamma_trace: result.gamma_trace.clone(),
            iterations: result.iterations,
            objective_bits: result.objective.bits(),
            entropy_y_bits: infotheory::entropy(&y).bits(),
            delta_ir: delta_ir(&result.mask, ddata),
            elapsed_seconds: result.elapsed_seconds,
            converged: result.converged,
        }
    }
}

/// One (method, classifier) evaluation. `mce` is None when the classifier
/// was not evaluable on the selected columns (singular pooled covariance),
/// rendered as `//` in textual reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRecord {
    pub method: String,
    pub classifier: String,
    pub cardinality: usize,
    pub mce: Option<f64>,
    #[serde(with = "inf_as_null")]
    pub delta_ir: f64,
    /// Selection wall-clock seconds, not classification time.
    pub delta_t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub seed: u64,
    pub records: Vec<MetricRecord>,
    pub ce: Option<SelectionReport>,
    /// Which mRMR formulation produced the mrmr records.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrmr_variant: Option<String>,
}
