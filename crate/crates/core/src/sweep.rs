//! Capital-deepening × job-creation grid sweep and the minimal-fold threshold
//! search.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{simulate, IntegrationConfig, Trajectory};
use crate::model::Model;
use crate::scenario::ScenarioSpec;

/// `steps` evenly spaced values from `min` to `max`, both endpoints exact.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let span = max - min;
    let last = steps - 1;
    (0..steps)
        .map(|k| {
            if k == last {
                max
            } else {
                min + span * k as f64 / last as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    pub fold_min: f64,
    pub fold_max: f64,
    pub fold_steps: usize,
    pub horizon: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            alpha_min: 0.02,
            alpha_max: 0.10,
            alpha_steps: 30,
            fold_min: 0.5,
            fold_max: 12.0,
            fold_steps: 30,
            horizon: 2050.5,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_steps < 2 || self.fold_steps < 2 {
            return Err(Error::input("grid axes need at least 2 steps"));
        }
        if !(self.alpha_min < self.alpha_max) || !(self.fold_min < self.fold_max) {
            return Err(Error::input("grid axis minimum must be below its maximum"));
        }
        if self.alpha_min < 0.0 || self.fold_min < 0.0 {
            return Err(Error::input("grid axes must be non-negative"));
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        linspace(self.alpha_min, self.alpha_max, self.alpha_steps)
    }

    pub fn folds(&self) -> Vec<f64> {
        linspace(self.fold_min, self.fold_max, self.fold_steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub alpha: f64,
    pub fold: f64,
    /// Percent change of the consumption index against the baseline at the
    /// horizon (positive = above baseline), or the failure message.
    pub pct_change: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub alphas: Vec<f64>,
    pub folds: Vec<f64>,
    /// Row-major: alpha outer, fold inner.
    pub cells: Vec<Cell>,
}

/// A row where a fold passes (non-negative change) but a higher fold fails.
#[derive(Debug, Clone, PartialEq)]
pub struct PassSetViolation {
    pub alpha: f64,
    pub passing_fold: f64,
    pub failing_fold: f64,
}

impl Heatmap {
    pub fn row(&self, alpha_index: usize) -> &[Cell] {
        let w = self.folds.len();
        &self.cells[alpha_index * w..(alpha_index + 1) * w]
    }

    pub fn invalid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.pct_change.is_err()).count()
    }

    /// Checks that in every α row the passing folds form an up-set.
    pub fn pass_set_violations(&self) -> Vec<PassSetViolation> {
        let mut out = Vec::new();
        for a in 0..self.alphas.len() {
            let mut first_pass: Option<f64> = None;
            for cell in self.row(a) {
                let Ok(v) = cell.pct_change else { continue };
                match (v >= 0.0, first_pass) {
                    (true, None) => first_pass = Some(cell.fold),
                    (false, Some(p)) => out.push(PassSetViolation {
                        alpha: cell.alpha,
                        passing_fold: p,
                        failing_fold: cell.fold,
                    }),
                    _ => {}
                }
            }
        }
        out
    }
}

fn horizon_consumption(traj: &Trajectory, t: f64) -> Result<f64> {
    Ok(traj.at(t)?.derived.consumption_index)
}

/// Runs every (α, fold) cell against the single default baseline.
pub fn grid_sweep(model: &Model, grid: &GridSpec, cfg: &IntegrationConfig) -> Result<Heatmap> {
    grid.validate()?;
    let baseline = simulate(model, &ScenarioSpec::baseline(model.params.alpha), cfg)?;
    let base_c = horizon_consumption(&baseline, grid.horizon)?;
    let alphas = grid.alphas();
    let folds = grid.folds();
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| folds.iter().map(move |&f| (a, f)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(alpha, fold)| {
            let scenario = ScenarioSpec::new("cell", alpha).with_job_fold(fold);
            let pct_change = simulate(model, &scenario, cfg)
                .and_then(|t| horizon_consumption(&t, grid.horizon))
                .map(|c| 100.0 * (c - base_c) / base_c)
                .map_err(|e| e.to_string());
            Cell {
                alpha,
                fold,
                pct_change,
            }
        })
        .collect();
    Ok(Heatmap {
        alphas,
        folds,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdCriterion {
    /// Scenario consumption index at or above baseline at every grid time in the window.
    #[default]
    AllTimes,
    /// Only at the last grid time of the window.
    AtWindowEnd,
}

impl ThresholdCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            ThresholdCriterion::AllTimes => "all_times",
            ThresholdCriterion::AtWindowEnd => "at_window_end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all_times" | "all-times" => Some(ThresholdCriterion::AllTimes),
            "at_window_end" | "at-window-end" => Some(ThresholdCriterion::AtWindowEnd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdQuery {
    pub alpha: f64,
    pub window: (f64, f64),
    pub fold_bounds: (f64, f64),
    pub criterion: ThresholdCriterion,
    pub tolerance: f64,
}

impl Default for ThresholdQuery {
    fn default() -> Self {
        Self {
            alpha: 0.11,
            window: (2025.0, 2045.0),
            fold_bounds: (1.0, 12.0),
            criterion: ThresholdCriterion::AllTimes,
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    Bisection,
    LinearScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Smallest passing fold, or `None` when even the upper bound fails.
    pub fold: Option<f64>,
    pub strategy: SearchStrategy,
    /// The monotonicity probe found a pass followed by a fail.
    pub non_monotone: bool,
    pub evaluations: usize,
}

impl ThresholdResult {
    pub fn found(&self) -> bool {
        self.fold.is_some()
    }
}

/// Evaluates the "scenario keeps up with baseline" predicate for one fold.
pub struct ThresholdPredicate<'a> {
    model: &'a Model,
    query: &'a ThresholdQuery,
    cfg: &'a IntegrationConfig,
    baseline: Trajectory,
    /// Indices of the recorded samples inside the window.
    window_idx: Vec<usize>,
}

impl<'a> ThresholdPredicate<'a> {
    pub fn new(
        model: &'a Model,
        query: &'a ThresholdQuery,
        cfg: &'a IntegrationConfig,
    ) -> Result<Self> {
        let (w0, w1) = query.window;
        if !(w0 <= w1) || w0 < cfg.t_start || w1 > cfg.t_end {
            return Err(Error::input(format!(
                "window {w0}:{w1} must lie within the simulation horizon {}:{}",
                cfg.t_start, cfg.t_end
            )));
        }
        let (f0, f1) = query.fold_bounds;
        if !(f0 >= 0.0 && f0 < f1 && f1.is_finite()) {
            return Err(Error::input(format!("invalid fold bounds [{f0}, {f1}]")));
        }
        if !(query.tolerance > 0.0) {
            return Err(Error::input("tolerance must be > 0"));
        }
        let baseline = simulate(model, &ScenarioSpec::baseline(model.params.alpha), cfg)?;
        let eps = 1e-9;
        let mut window_idx: Vec<usize> = baseline
            .times()
            .enumerate()
            .filter(|&(_, t)| t >= w0 - eps && t <= w1 + eps)
            .map(|(k, _)| k)
            .collect();
        if window_idx.is_empty() {
            return Err(Error::input("window contains no recorded times"));
        }
        if query.criterion == ThresholdCriterion::AtWindowEnd {
            window_idx = vec![*window_idx.last().unwrap()];
        }
        Ok(Self {
            model,
            query,
            cfg,
            baseline,
            window_idx,
        })
    }

    pub fn passes(&self, fold: f64) -> Result<bool> {
        let scenario = ScenarioSpec::new("threshold", self.query.alpha).with_job_fold(fold);
        let run = simulate(self.model, &scenario, self.cfg)?;
        Ok(self.window_idx.iter().all(|&k| {
            run.samples[k].derived.consumption_index
                >= self.baseline.samples[k].derived.consumption_index
        }))
    }
}

/// Bisection on a predicate assumed monotone; returns the smallest passing
/// fold to within `tolerance`.
pub fn bisect_threshold(pred: &ThresholdPredicate, evaluations: &mut usize) -> Result<Option<f64>> {
    let (mut lo, mut hi) = pred.query.fold_bounds;
    *evaluations += 1;
    if pred.passes(lo)? {
        return Ok(Some(lo));
    }
    *evaluations += 1;
    if !pred.passes(hi)? {
        return Ok(None);
    }
    while hi - lo > pred.query.tolerance {
        let mid = 0.5 * (lo + hi);
        *evaluations += 1;
        if pred.passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Scans folds upward in steps of `tolerance` and returns the first pass.
pub fn scan_threshold(pred: &ThresholdPredicate, evaluations: &mut usize) -> Result<Option<f64>> {
    let (lo, hi) = pred.query.fold_bounds;
    let n = ((hi - lo) / pred.query.tolerance).ceil() as usize;
    for k in 0..=n {
        let fold = (lo + k as f64 * pred.query.tolerance).min(hi);
        *evaluations += 1;
        if pred.passes(fold)? {
            return Ok(Some(fold));
        }
    }
    Ok(None)
}

const PROBE_POINTS: usize = 23;

/// Minimal job-creation fold keeping the scenario's consumption index at or
/// above the baseline over the window. The predicate is probed for
/// monotonicity first; a non-monotone probe switches to a linear scan.
pub fn threshold_search(
    model: &Model,
    query: &ThresholdQuery,
    cfg: &IntegrationConfig,
) -> Result<ThresholdResult> {
    let pred = ThresholdPredicate::new(model, query, cfg)?;
    let mut evaluations = 0;
    let probes = linspace(query.fold_bounds.0, query.fold_bounds.1, PROBE_POINTS);
    let outcomes = probes
        .par_iter()
        .map(|&f| pred.passes(f))
        .collect::<Result<Vec<bool>>>()?;
    evaluations += outcomes.len();
    let non_monotone = outcomes.windows(2).any(|w| w[0] && !w[1]);
    let (fold, strategy) = if non_monotone {
        (
            scan_threshold(&pred, &mut evaluations)?,
            SearchStrategy::LinearScan,
        )
    } else {
        (
            bisect_threshold(&pred, &mut evaluations)?,
            SearchStrategy::Bisection,
        )
    };
    Ok(ThresholdResult {
        fold,
        strategy,
        non_monotone,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> IntegrationConfig {
        IntegrationConfig::default().with_dt(0.25)
    }

    #[test]
    fn linspace_endpoints_and_spacing() {
        let g = GridSpec::default();
        let a = g.alphas();
        let f = g.folds();
        assert_eq!(a.len(), 30);
        assert_eq!((a[0], a[29]), (0.02, 0.10));
        assert_eq!((f[0], f[29]), (0.5, 12.0));
        for axis in [&a, &f] {
            let step = (axis[29] - axis[0]) / 29.0;
            for w in axis.windows(2) {
                assert!(((w[1] - w[0]) - step).abs() < 1e-12);
            }
        }
        assert!(((a[1] - a[0]) * 100.0 - 0.2759).abs() < 1e-4);
        assert!(((f[1] - f[0]) - 0.3966).abs() < 1e-4);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::default();
        g.alpha_steps = 1;
        assert!(g.validate().is_err());
        let mut g = GridSpec::default();
        g.fold_min = 13.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn small_sweep_shape_and_alpha_monotonicity() {
        let grid = GridSpec {
            alpha_steps: 5,
            fold_steps: 4,
            ..Default::default()
        };
        let map = grid_sweep(&Model::default(), &grid, &coarse()).unwrap();
        assert_eq!(map.cells.len(), 20);
        assert_eq!(map.invalid_count(), 0);
        assert_eq!((map.cells[0].alpha, map.cells[0].fold), (0.02, 0.5));
        assert_eq!((map.cells[19].alpha, map.cells[19].fold), (0.10, 12.0));
        for w in map.row(0).windows(2) {
            assert!(w[0].fold < w[1].fold);
        }
    }

    #[test]
    fn pass_set_detection() {
        let cell = |fold: f64, v: f64| Cell {
            alpha: 0.05,
            fold,
            pct_change: Ok(v),
        };
        let map = Heatmap {
            alphas: vec![0.05],
            folds: vec![1.0, 2.0, 3.0],
            cells: vec![cell(1.0, -1.0), cell(2.0, 0.5), cell(3.0, -0.1)],
        };
        let v = map.pass_set_violations();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].passing_fold, v[0].failing_fold), (2.0, 3.0));
    }

    #[test]
    fn window_validation() {
        let model = Model::default();
        let cfg = coarse();
        let q = ThresholdQuery {
            window: (2045.0, 2025.0),
            ..Default::default()
        };
        assert!(ThresholdPredicate::new(&model, &q, &cfg).is_err());
        let q = ThresholdQuery {
            window: (2020.0, 2045.0),
            ..Default::default()
        };
        assert!(threshold_search(&model, &q, &cfg).is_err());
    }

    #[test]
    fn lower_bound_pass_returns_lower_bound() {
        // at the baseline alpha the scenario equals the baseline, so fold 1 passes
        let model = Model::default();
        let q = ThresholdQuery {
            alpha: model.params.alpha,
            ..Default::default()
        };
        let res = threshold_search(&model, &q, &coarse()).unwrap();
        assert_eq!(res.fold, Some(1.0));
    }

    #[test]
    fn upper_bound_failure_is_not_found() {
        // a huge onset growth with barely any job creation cannot keep up
        let mut model = Model::default();
        model.params.beta = 0.012;
        let q = ThresholdQuery {
            alpha: 0.11,
            fold_bounds: (1.0, 1.2),
            ..Default::default()
        };
        let res = threshold_search(&model, &q, &coarse()).unwrap();
        assert_eq!(res.fold, None);
        assert!(!res.found());
    }

    #[test]
    fn bisection_agrees_with_scan() {
        let mut model = Model::default();
        model.params.beta = 0.012;
        let q = ThresholdQuery::default();
        let cfg = coarse();
        let res = threshold_search(&model, &q, &cfg).unwrap();
        let pred = ThresholdPredicate::new(&model, &q, &cfg).unwrap();
        let mut n = 0;
        let scanned = scan_threshold(&pred, &mut n).unwrap();
        match (res.fold, scanned) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 0.05 + 1e-12, "{a} vs {b}"),
            (None, None) => {}
            other => panic!("strategies disagree: {other:?}"),
        }
    }
}
