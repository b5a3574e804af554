//! Stock-flow simulation of AI-driven capital deepening and its effect on
//! labour underutilisation, disposable income and consumption.
//!
//! The engine integrates population, underutilised persons, the
//! underutilisation onset rate, the capital-to-labour ratio and multifactor
//! productivity with a fixed-step scheme. On top of it sit the experiment
//! drivers: paired scenario comparisons, Latin hypercube uncertainty
//! ensembles, an (α, job-creation fold) grid sweep and a threshold search.

pub mod config;
pub mod error;
pub mod integrator;
pub mod model;
pub mod output;
pub mod scenario;
pub mod sensitivity;
pub mod sweep;
pub mod table;

pub use config::{parse_config, render_config, ModelConfig, DEFAULT_CONFIG};
pub use error::{Error, Result};
pub use integrator::{
    ramp_multiplier, simulate, IntegrationConfig, Method, RampShape, RampSpec, Sample, Trajectory,
};
pub use model::{
    aggregate_disposable_income, consumption_index, derivatives, split_underutilised,
    ConverterInput, DerivedOutputs, Forcing, Model, ModelParameters, Rates, SimState,
};
pub use scenario::{
    builtin_scenarios, calibrate, compare_at, run_pair, CalibrationBounds, CalibrationQuantity,
    CalibrationResult, CalibrationTarget, ComparisonSummary, FreeParameters, Metric, QuantityKind,
    ScenarioSpec,
};
pub use sensitivity::{
    bands, horizon_rows, lhs_sample, run_ensemble, summarize, Arm, DistributionSummary, Ensemble,
    LhsDesign, ParameterSpace,
};
pub use sweep::{
    grid_sweep, threshold_search, GridSpec, Heatmap, ThresholdCriterion, ThresholdQuery,
    ThresholdResult,
};
pub use table::{Converters, TableFunction};
