//! Latin hypercube uncertainty analysis over paired baseline/scenario runs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{IntegrationConfig, Trajectory};
use crate::model::{Model, ModelParameters};
use crate::scenario::{compare_at, run_pair, ComparisonSummary, Metric, ScenarioSpec};

/// Parameters varied in the uncertainty analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertainParameter {
    Lambda,
    Omega,
    Beta,
    R,
}

impl UncertainParameter {
    pub fn key(self) -> &'static str {
        match self {
            UncertainParameter::Lambda => "lambda",
            UncertainParameter::Omega => "omega",
            UncertainParameter::Beta => "beta",
            UncertainParameter::R => "r",
        }
    }

    pub fn apply(self, params: &mut ModelParameters, value: f64) {
        match self {
            UncertainParameter::Lambda => params.lambda = value,
            UncertainParameter::Omega => params.omega = value,
            UncertainParameter::Beta => params.beta = value,
            UncertainParameter::R => params.r = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    pub parameter: UncertainParameter,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    pub dims: Vec<Dimension>,
}

impl ParameterSpace {
    /// λ, β and r at ±10% of `params`, ω over [0.3, 0.7].
    pub fn around(params: &ModelParameters) -> Self {
        let pm10 = |parameter, v: f64| Dimension {
            parameter,
            lower: v * 0.9,
            upper: v * 1.1,
        };
        Self {
            dims: vec![
                pm10(UncertainParameter::Lambda, params.lambda),
                Dimension {
                    parameter: UncertainParameter::Omega,
                    lower: 0.30,
                    upper: 0.70,
                },
                pm10(UncertainParameter::Beta, params.beta),
                pm10(UncertainParameter::R, params.r),
            ],
        }
    }

    /// Every dimension pinned to the value in `params`.
    pub fn degenerate(params: &ModelParameters) -> Self {
        let mut space = Self::around(params);
        for d in &mut space.dims {
            let v = params.get(d.parameter.key()).unwrap_or(d.lower);
            d.lower = v;
            d.upper = v;
        }
        space
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::input("parameter space has no dimensions"));
        }
        for d in &self.dims {
            if !(d.lower.is_finite() && d.upper.is_finite()) || d.lower > d.upper {
                return Err(Error::input(format!(
                    "dimension `{}`: lower {} must not exceed upper {}",
                    d.parameter.key(),
                    d.lower,
                    d.upper
                )));
            }
        }
        Ok(())
    }
}

impl Default for ParameterSpace {
    fn default() -> Self {
        Self::around(&ModelParameters::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhsDesign {
    pub n: usize,
    pub seed: u64,
    pub space: ParameterSpace,
    /// `n` rows of unit-cube coordinates, one column per dimension.
    pub unit: Vec<Vec<f64>>,
    /// `unit` mapped onto the dimension bounds.
    pub values: Vec<Vec<f64>>,
}

impl LhsDesign {
    /// Parameters of draw `row` applied on top of `base`.
    pub fn params_for(&self, row: usize, base: &ModelParameters) -> ModelParameters {
        let mut p = base.clone();
        for (d, &v) in self.space.dims.iter().zip(&self.values[row]) {
            d.parameter.apply(&mut p, v);
        }
        p
    }
}

/// Stratified design: each dimension gets an independent random permutation of
/// its `n` strata and samples sit at stratum midpoints.
pub fn lhs_sample(space: &ParameterSpace, n: usize, seed: u64) -> Result<LhsDesign> {
    space.validate()?;
    if n == 0 {
        return Err(Error::input("draw count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = space.dims.len();
    let mut unit = vec![vec![0.0; k]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..k {
        perm.shuffle(&mut rng);
        for (row, &stratum) in perm.iter().enumerate() {
            unit[row][j] = (stratum as f64 + 0.5) / n as f64;
        }
    }
    let values = unit
        .iter()
        .map(|row| {
            row.iter()
                .zip(&space.dims)
                .map(|(&u, d)| d.lower + u * (d.upper - d.lower))
                .collect()
        })
        .collect();
    Ok(LhsDesign {
        n,
        seed,
        space: space.clone(),
        unit,
        values,
    })
}

/// Per-draw metric paths retained for band export.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    /// Indexed like [`Metric::ALL`].
    pub values: [Vec<f64>; 3],
}

impl MetricSeries {
    fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            times: traj.times().collect(),
            values: Metric::ALL.map(|m| traj.samples.iter().map(|s| m.value(s)).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub params: ModelParameters,
    /// Horizon comparison, one entry per metric in [`Metric::ALL`] order.
    pub horizon: Vec<ComparisonSummary>,
    pub baseline: MetricSeries,
    pub scenario: MetricSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawOutcome {
    pub index: usize,
    pub result: std::result::Result<PairedRun, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub scenario_id: String,
    pub draws: Vec<DrawOutcome>,
}

impl Ensemble {
    pub fn successes(&self) -> impl Iterator<Item = &PairedRun> {
        self.draws.iter().filter_map(|d| d.result.as_ref().ok())
    }

    pub fn failure_count(&self) -> usize {
        self.draws.iter().filter(|d| d.result.is_err()).count()
    }
}

/// Runs baseline and scenario for every draw. Draws run in parallel and are
/// collected in index order.
pub fn run_ensemble(
    model: &Model,
    design: &LhsDesign,
    scenario: &ScenarioSpec,
    cfg: &IntegrationConfig,
) -> Result<Ensemble> {
    cfg.steps()?;
    scenario.validate()?;
    let draws = (0..design.n)
        .into_par_iter()
        .map(|index| {
            let result = run_draw(model, design, index, scenario, cfg).map_err(|e| e.to_string());
            DrawOutcome { index, result }
        })
        .collect();
    Ok(Ensemble {
        scenario_id: scenario.id.clone(),
        draws,
    })
}

fn run_draw(
    model: &Model,
    design: &LhsDesign,
    index: usize,
    scenario: &ScenarioSpec,
    cfg: &IntegrationConfig,
) -> Result<PairedRun> {
    let params = design.params_for(index, &model.params);
    let draw_model = Model {
        params: params.clone(),
        ..model.clone()
    };
    let (baseline, run) = run_pair(&draw_model, scenario, cfg)?;
    let horizon = compare_at(&baseline, &run, cfg.t_end)?;
    Ok(PairedRun {
        params,
        horizon,
        baseline: MetricSeries::from_trajectory(&baseline),
        scenario: MetricSeries::from_trajectory(&run),
    })
}

/// Mean and linear-interpolated percentiles of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSummary {
    pub count: usize,
    pub mean: f64,
    pub p2_5: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p97_5: f64,
}

/// Quantile of sorted data: linear interpolation between the order statistics
/// at position `p·(n−1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<DistributionSummary> {
    if values.is_empty() {
        return Err(Error::input("cannot summarise an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("sample contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(DistributionSummary {
        count: values.len(),
        mean,
        p2_5: quantile_sorted(&sorted, 0.025),
        p25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        p75: quantile_sorted(&sorted, 0.75),
        p97_5: quantile_sorted(&sorted, 0.975),
    })
}

/// Horizon row in the shape of the published comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonRow {
    pub scenario_id: String,
    pub metric: Metric,
    pub abs_change: DistributionSummary,
    pub pct_change: DistributionSummary,
}

pub fn horizon_rows(ensemble: &Ensemble) -> Result<Vec<HorizonRow>> {
    let runs: Vec<&PairedRun> = ensemble.successes().collect();
    if runs.is_empty() {
        return Err(Error::domain(format!(
            "no successful draws ({} failed)",
            ensemble.failure_count()
        )));
    }
    Metric::ALL
        .iter()
        .enumerate()
        .map(|(j, &metric)| {
            let abs: Vec<f64> = runs.iter().map(|r| r.horizon[j].abs_change).collect();
            let pct: Vec<f64> = runs.iter().map(|r| r.horizon[j].pct_change).collect();
            Ok(HorizonRow {
                scenario_id: ensemble.scenario_id.clone(),
                metric,
                abs_change: summarize(&abs)?,
                pct_change: summarize(&pct)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Baseline,
    Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub t: f64,
    pub metric: Metric,
    pub summary: DistributionSummary,
}

/// Percentile bands of metric levels across draws, per recorded time.
/// Rows are ordered by metric, then time.
pub fn bands(ensemble: &Ensemble, arm: Arm) -> Result<Vec<BandRow>> {
    let runs: Vec<&PairedRun> = ensemble.successes().collect();
    let Some(first) = runs.first() else {
        return Err(Error::domain("no successful draws"));
    };
    fn series(r: &PairedRun, arm: Arm) -> &MetricSeries {
        match arm {
            Arm::Baseline => &r.baseline,
            Arm::Scenario => &r.scenario,
        }
    }
    let times = &series(first, arm).times;
    let mut rows = Vec::with_capacity(times.len() * Metric::ALL.len());
    for (j, &metric) in Metric::ALL.iter().enumerate() {
        for (k, &t) in times.iter().enumerate() {
            let sample: Vec<f64> = runs.iter().map(|r| series(r, arm).values[j][k]).collect();
            rows.push(BandRow {
                t,
                metric,
                summary: summarize(&sample)?,
            });
        }
    }
    Ok(rows)
}
