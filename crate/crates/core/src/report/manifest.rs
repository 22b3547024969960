use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheState {
    /// Every response came from the cache.
    Warm,
    Cold,
}

impl CacheState {
    pub fn from_network_calls(calls: u64) -> Self {
        if calls == 0 {
            CacheState::Warm
        } else {
            CacheState::Cold
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub fetched: u64,
    pub classified: u64,
    pub scraped: u64,
    pub probed: u64,
    pub failed: u64,
}

/// One subcommand invocation against a run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRun {
    pub command: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub cache_state: CacheState,
    pub network_calls: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub endpoints: Vec<String>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub cache_state: CacheState,
    pub counts: StageCounts,
    #[serde(default)]
    pub stages: Vec<StageRun>,
    /// Report files written into the run directory, relative paths.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(run_id: impl Into<String>, started_at: DateTime<Utc>) -> Self {
        RunManifest {
            run_id: run_id.into(),
            tool_version: crate::VERSION.to_string(),
            dataset: None,
            endpoints: Vec::new(),
            from: None,
            to: None,
            started_at,
            finished_at: started_at,
            cache_state: CacheState::Warm,
            counts: StageCounts::default(),
            stages: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.counts.classified <= self.counts.fetched && self.started_at <= self.finished_at
    }

    /// Append a stage and fold its cache state into the run's.
    pub fn push_stage(&mut self, stage: StageRun) {
        if stage.cache_state == CacheState::Cold {
            self.cache_state = CacheState::Cold;
        }
        self.finished_at = self.finished_at.max(stage.finished_at);
        self.stages.push(stage);
    }

    pub fn add_output(&mut self, rel: impl Into<String>) {
        let rel = rel.into();
        if !self.outputs.contains(&rel) {
            self.outputs.push(rel);
            self.outputs.sort();
        }
    }
}
