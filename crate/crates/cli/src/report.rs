//! Run reports: config echo, counters and per-stage wall clock.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use maskfault_core::campaign::CampaignCounters;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub command: String,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<CampaignCounters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities_written: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverReport>,
    pub stage_seconds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverReport {
    pub inequalities: u64,
    pub iterations: u32,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_fraction: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value) -> RunReport {
        RunReport {
            version: 1,
            command: command.to_string(),
            config,
            counters: None,
            inequalities_written: None,
            solver: None,
            stage_seconds: BTreeMap::new(),
        }
    }

    pub fn stage(&mut self, name: &str, seconds: f64) {
        self.stage_seconds.insert(name.to_string(), seconds);
    }
}
