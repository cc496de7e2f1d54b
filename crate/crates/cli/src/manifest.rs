use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unilogic::extract::ExtractionConfig;
use unilogic::network::{LogicNetwork, NetworkConfig};
use unilogic::training::TrainConfig;

use crate::{CliError, CliResult};

/// Every setting a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_id: String,
    pub data_sha256: String,
    pub schema_sha256: String,
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub extraction: ExtractionConfig,
    pub seed: u64,
    pub version: String,
}

/// Optional overrides read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub extraction: ExtractionConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_input(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Network and training share one seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.network.seed = seed;
        self.training.seed = seed;
        self
    }
}

/// `v<crate version>`, or the value of `UNILOGIC_GIT_DESCRIBE` at build time.
pub fn version() -> String {
    option_env!("UNILOGIC_GIT_DESCRIBE")
        .map(String::from)
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Reads a file, reporting absence as an input error.
pub fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Dataset id from a data file name: `data/kr-vs-kp.data` -> `kr-vs-kp`.
pub fn dataset_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// A trained network with the names needed to read it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub network: LogicNetwork,
    #[serde(default)]
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub class_names: Vec<String>,
}

impl ModelFile {
    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Accepts a model file or a bare network.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let model = match serde_json::from_str::<ModelFile>(text) {
            Ok(m) => m,
            Err(_) => ModelFile {
                network: LogicNetwork::from_json(text)
                    .map_err(|e| CliError::Other(format!("model file: {e}")))?,
                feature_names: Vec::new(),
                class_names: Vec::new(),
            },
        };
        model
            .network
            .validate()
            .map_err(|e| CliError::Other(format!("model file: {e}")))?;
        Ok(model)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&read_input(path)?)
    }
}
