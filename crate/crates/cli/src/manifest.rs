//! Run manifests: enough metadata to reproduce any run byte-for-byte,
//! excluding wall-clock fields.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cefs_core::ce::CEConfig;
use cefs_core::data::SplitSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepInfo {
    pub method: String,
    pub classifier: String,
    pub ks: Vec<usize>,
}

/// Configuration snapshot embedded in every output artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub bins: usize,
    pub label_bins: usize,
    pub label: String,
    pub header: bool,
    pub ce: CEConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub seed: u64,
    pub dataset: String,
    pub dataset_sha256: String,
    pub config: ManifestConfig,
    /// Wall-clock timestamp; masked when comparing runs for reproducibility.
    pub created_utc: String,
}

impl RunManifest {
    pub fn new(
        command: Vec<String>,
        seed: u64,
        dataset_path: &Path,
        config: ManifestConfig,
    ) -> std::io::Result<Self> {
        let bytes = std::fs::read(dataset_path)?;
        let digest = Sha256::digest(&bytes);
        let dataset_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(RunManifest {
            tool: "cefs".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            seed,
            dataset: dataset_path.display().to_string(),
            dataset_sha256,
            config,
            created_utc: chrono::Utc::now().to_rfc3339(),
        })
    }
}
