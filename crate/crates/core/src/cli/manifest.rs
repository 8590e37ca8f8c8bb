use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::config_hash;
use crate::game::GameConfig;

pub(crate) fn now_secs() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Everything needed to rerun a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: GameConfig,
    pub seed: u64,
    pub config_hash: String,
    pub out_dir: String,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
    pub crate_version: String,
}

impl RunManifest {
    pub fn new(config: &GameConfig, out_dir: &Path, started_at: u64) -> Self {
        Self {
            config: config.clone(),
            seed: config.seed,
            config_hash: config_hash(config),
            out_dir: out_dir.display().to_string(),
            started_at,
            finished_at: now_secs(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}
