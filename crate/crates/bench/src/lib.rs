//! Shared fixtures for the criterion benchmarks.

use capdeep_core::{IntegrationConfig, Model, ScenarioSpec};

pub fn scenario_b() -> ScenarioSpec {
    ScenarioSpec::new("b", 0.07)
}

pub fn default_inputs() -> (Model, IntegrationConfig) {
    (Model::default(), IntegrationConfig::default())
}
