//! Named experiments, scenario-vs-baseline comparison, and calibration of
//! under-determined parameters.

use crate::error::{Error, Result};
use crate::integrator::{simulate, IntegrationConfig, RampSpec, Sample, Trajectory};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: String,
    pub alpha: f64,
    /// Multiplier on the job creation rate once the ramp completes.
    pub job_fold: f64,
    /// Ramp start; `None` means the start of the simulation.
    pub ramp_start: Option<f64>,
    pub ramp_duration: f64,
    pub notes: String,
}

impl ScenarioSpec {
    pub fn new(id: impl Into<String>, alpha: f64) -> Self {
        Self {
            id: id.into(),
            alpha,
            job_fold: 1.0,
            ramp_start: None,
            ramp_duration: 2.0,
            notes: String::new(),
        }
    }

    pub fn baseline(alpha: f64) -> Self {
        Self::new("baseline", alpha).with_notes("historic K-L ratio growth")
    }

    pub fn with_job_fold(mut self, fold: f64) -> Self {
        self.job_fold = fold;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        // zero growth is admitted for fixed-point runs
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::input(format!(
                "scenario `{}`: alpha must be >= 0, got {}",
                self.id, self.alpha
            )));
        }
        if !(self.job_fold >= 0.0 && self.job_fold.is_finite()) {
            return Err(Error::input(format!(
                "scenario `{}`: job_fold must be >= 0, got {}",
                self.id, self.job_fold
            )));
        }
        if !(self.ramp_duration > 0.0 && self.ramp_duration.is_finite()) {
            return Err(Error::input(format!(
                "scenario `{}`: ramp_duration must be > 0",
                self.id
            )));
        }
        Ok(())
    }

    pub fn ramp(&self, t_start: f64) -> RampSpec {
        RampSpec {
            duration: self.ramp_duration,
            ..RampSpec::new(self.job_fold, self.ramp_start.unwrap_or(t_start))
        }
    }
}

/// Built-in experiments: the baseline, capital-deepening scenarios a/b/c, the
/// job-creation threshold case and the high-jobs fan-chart case.
pub fn builtin_scenarios(baseline_alpha: f64) -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec::baseline(baseline_alpha),
        ScenarioSpec::new("a", 0.04).with_notes("K-L ratio 4% increase per annum"),
        ScenarioSpec::new("b", 0.07).with_notes("K-L ratio 7% increase per annum"),
        ScenarioSpec::new("c", 0.10).with_notes("K-L ratio 10% increase per annum"),
        ScenarioSpec::new("rq3", 0.11).with_notes("K-L ratio 11% increase per annum"),
        ScenarioSpec::new("fig5", 0.07)
            .with_job_fold(6.0)
            .with_notes("K-L ratio 7% with 6-fold job creation"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    IncomePc,
    ConsumptionIndex,
    UnderutilisedPersons,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::IncomePc,
        Metric::ConsumptionIndex,
        Metric::UnderutilisedPersons,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::IncomePc => "income_pc",
            Metric::ConsumptionIndex => "consumption_index",
            Metric::UnderutilisedPersons => "underutilised_persons",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn value(self, sample: &Sample) -> f64 {
        match self {
            Metric::IncomePc => sample.derived.income_pc,
            Metric::ConsumptionIndex => sample.derived.consumption_index,
            Metric::UnderutilisedPersons => sample.state.u,
        }
    }

    /// Adverse change of `scenario` relative to `baseline`: a reduction for
    /// income and consumption, an increase for underutilisation.
    pub fn adverse_change(self, baseline: f64, scenario: f64) -> f64 {
        match self {
            Metric::IncomePc | Metric::ConsumptionIndex => baseline - scenario,
            Metric::UnderutilisedPersons => scenario - baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSummary {
    pub metric: Metric,
    pub baseline_value: f64,
    pub scenario_value: f64,
    /// Positive means the scenario is worse off (see [`Metric::adverse_change`]).
    pub abs_change: f64,
    pub pct_change: f64,
}

impl ComparisonSummary {
    pub fn new(metric: Metric, baseline_value: f64, scenario_value: f64) -> Self {
        let abs_change = metric.adverse_change(baseline_value, scenario_value);
        let pct_change = if baseline_value != 0.0 {
            100.0 * abs_change / baseline_value
        } else {
            0.0
        };
        Self {
            metric,
            baseline_value,
            scenario_value,
            abs_change,
            pct_change,
        }
    }
}

/// Runs the baseline (parameter `alpha`, no job-creation change) and `scenario`
/// on the same grid.
pub fn run_pair(
    model: &Model,
    scenario: &ScenarioSpec,
    cfg: &IntegrationConfig,
) -> Result<(Trajectory, Trajectory)> {
    let baseline = simulate(model, &ScenarioSpec::baseline(model.params.alpha), cfg)?;
    let run = simulate(model, scenario, cfg)?;
    Ok((baseline, run))
}

pub fn compare_at(
    baseline: &Trajectory,
    scenario: &Trajectory,
    t: f64,
) -> Result<Vec<ComparisonSummary>> {
    if !baseline.same_grid(scenario) {
        return Err(Error::input("trajectories do not share a time grid"));
    }
    let b = baseline.at(t)?;
    let s = scenario.at(t)?;
    Ok(Metric::ALL
        .iter()
        .map(|&m| ComparisonSummary::new(m, m.value(b), m.value(s)))
        .collect())
}

/// Published Table 1 row (mean reduction, mean %, median %, lower and upper 95%).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub mean_reduction: f64,
    pub mean_pct: f64,
    pub median_pct: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Reported ensemble results for scenarios a, b and c, kept for side-by-side output.
pub fn published_row(scenario_id: &str, metric: Metric) -> Option<PublishedRow> {
    let row = |mean_reduction, mean_pct, median_pct, lo95, hi95| PublishedRow {
        mean_reduction,
        mean_pct,
        median_pct,
        lo95,
        hi95,
    };
    Some(match (scenario_id, metric) {
        ("a", Metric::IncomePc) => row(5_035.1, 12.74, 12.73, 7.29, 18.06),
        ("b", Metric::IncomePc) => row(10_244.8, 25.96, 25.82, 20.61, 31.76),
        ("c", Metric::IncomePc) => row(12_630.6, 25.96, 32.06, 26.06, 37.84),
        ("a", Metric::ConsumptionIndex) => row(0.0674, 7.34, 7.59, -0.23, 14.79),
        ("b", Metric::ConsumptionIndex) => row(0.1939, 21.21, 21.03, 13.56, 28.33),
        ("c", Metric::ConsumptionIndex) => row(0.2527, 27.66, 27.92, 20.14, 34.80),
        ("a", Metric::UnderutilisedPersons) => row(1_036_650.0, 37.63, 36.76, 21.03, 57.97),
        ("b", Metric::UnderutilisedPersons) => row(2_758_013.0, 99.76, 98.38, 70.61, 137.52),
        ("c", Metric::UnderutilisedPersons) => row(3_808_004.0, 137.69, 136.99, 98.13, 179.70),
        _ => return None,
    })
}

/// Minimal job-creation fold reported for the 11% scenario over 2025-2045.
pub const PUBLISHED_THRESHOLD_FOLD: f64 = 10.8;

// ---------------------------------------------------------------------------
// Calibration

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    /// Metric level in the scenario run.
    Level,
    /// Percent adverse change against the paired baseline.
    PctChangeVsBaseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationQuantity {
    pub metric: Metric,
    pub scenario: ScenarioSpec,
    pub time: f64,
    pub kind: QuantityKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub quantity: CalibrationQuantity,
    pub target_value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParameters {
    Beta,
    /// β plus a uniform scale on the η table's y-values.
    BetaAndEtaScale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBounds {
    pub beta: (f64, f64),
    pub eta_scale: (f64, f64),
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        Self {
            beta: (0.0005, 0.05),
            eta_scale: (0.5, 4.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: Model,
    pub beta: f64,
    pub eta_scale: f64,
    pub objective: f64,
    /// Set when the optimum sits on a search bound.
    pub at_boundary: bool,
    /// Best objective after each iteration; never increases.
    pub history: Vec<f64>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn evaluate_quantity(
    model: &Model,
    q: &CalibrationQuantity,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let run = simulate(model, &q.scenario, cfg)?;
    let s = run.at(q.time)?;
    match q.kind {
        QuantityKind::Level => Ok(q.metric.value(s)),
        QuantityKind::PctChangeVsBaseline => {
            let base = simulate(model, &ScenarioSpec::baseline(model.params.alpha), cfg)?;
            let b = base.at(q.time)?;
            Ok(ComparisonSummary::new(q.metric, q.metric.value(b), q.metric.value(s)).pct_change)
        }
    }
}

/// Weighted sum of squared errors over all targets.
pub fn calibration_objective(
    model: &Model,
    targets: &[CalibrationTarget],
    cfg: &IntegrationConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for target in targets {
        let v = evaluate_quantity(model, &target.quantity, cfg)?;
        total += target.weight * (v - target.target_value).powi(2);
    }
    Ok(total)
}

fn with_free(base: &Model, beta: f64, eta_scale: f64) -> Model {
    let mut m = base.clone();
    m.params.beta = beta;
    if eta_scale != 1.0 {
        m.converters.eta = base.converters.eta.scale_y(eta_scale);
    }
    m
}

struct Search<'a> {
    base: &'a Model,
    targets: &'a [CalibrationTarget],
    cfg: &'a IntegrationConfig,
    best: (f64, f64, f64),
    history: Vec<f64>,
}

impl Search<'_> {
    /// Parameter sets that leave the model's domain score as +inf.
    fn objective(&mut self, beta: f64, eta_scale: f64) -> Result<f64> {
        let f = match calibration_objective(
            &with_free(self.base, beta, eta_scale),
            self.targets,
            self.cfg,
        ) {
            Ok(f) => f,
            Err(Error::Domain { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if f < self.best.2 {
            self.best = (beta, eta_scale, f);
        }
        Ok(f)
    }

    /// Golden-section minimisation of one coordinate over `[lo, hi]`.
    fn golden(&mut self, lo: f64, hi: f64, eval: impl Fn(f64) -> (f64, f64)) -> Result<()> {
        let x_tol = 1e-12 * hi.abs().max(1.0);
        let (mut a, mut b) = (lo, hi);
        let (pa, pb) = eval(a);
        self.objective(pa, pb)?;
        let (pa, pb) = eval(b);
        self.objective(pa, pb)?;
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let (pc, qc) = eval(c);
        let mut fc = self.objective(pc, qc)?;
        let (pd, qd) = eval(d);
        let mut fd = self.objective(pd, qd)?;
        self.history.push(self.best.2);
        for _ in 0..200 {
            if (b - a) <= x_tol || self.best.2 == 0.0 {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                let (p, q) = eval(c);
                fc = self.objective(p, q)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                let (p, q) = eval(d);
                fd = self.objective(p, q)?;
            }
            self.history.push(self.best.2);
        }
        Ok(())
    }
}

/// Fits the free parameters to `targets` by bounded golden-section search
/// (coordinate-wise when two parameters are free).
pub fn calibrate(
    model: &Model,
    targets: &[CalibrationTarget],
    free: FreeParameters,
    bounds: CalibrationBounds,
    cfg: &IntegrationConfig,
) -> Result<CalibrationResult> {
    if targets.is_empty() {
        return Err(Error::input("calibration needs at least one target"));
    }
    for t in targets {
        if !(t.weight > 0.0) {
            return Err(Error::input("calibration weights must be > 0"));
        }
    }
    for (name, (lo, hi)) in [("beta", bounds.beta), ("eta_scale", bounds.eta_scale)] {
        if !(lo < hi && lo >= 0.0 && hi.is_finite()) {
            return Err(Error::input(format!("invalid {name} bounds [{lo}, {hi}]")));
        }
    }

    let current = calibration_objective(model, targets, cfg)?;
    if current == 0.0 {
        return Ok(CalibrationResult {
            model: model.clone(),
            beta: model.params.beta,
            eta_scale: 1.0,
            objective: 0.0,
            at_boundary: false,
            history: vec![0.0],
        });
    }

    let mut search = Search {
        base: model,
        targets,
        cfg,
        best: (f64::NAN, 1.0, f64::INFINITY),
        history: Vec::new(),
    };
    match free {
        FreeParameters::Beta => {
            search.golden(bounds.beta.0, bounds.beta.1, |b| (b, 1.0))?;
        }
        FreeParameters::BetaAndEtaScale => {
            let mut scale = 1.0_f64.clamp(bounds.eta_scale.0, bounds.eta_scale.1);
            let mut previous = f64::INFINITY;
            for _ in 0..20 {
                search.golden(bounds.beta.0, bounds.beta.1, |b| (b, scale))?;
                let beta = search.best.0;
                search.golden(bounds.eta_scale.0, bounds.eta_scale.1, |s| (beta, s))?;
                scale = search.best.1;
                if previous - search.best.2 <= 1e-12 * previous.max(1.0) {
                    break;
                }
                previous = search.best.2;
            }
        }
    }

    let (beta, eta_scale, objective) = search.best;
    if !objective.is_finite() {
        return Err(Error::domain(
            "no parameter set within bounds keeps the model in its domain",
        ));
    }
    let near = |v: f64, (lo, hi): (f64, f64)| {
        let tol = 1e-9 * (hi - lo);
        (v - lo).abs() <= tol || (hi - v).abs() <= tol
    };
    let at_boundary = near(beta, bounds.beta)
        || (free == FreeParameters::BetaAndEtaScale && near(eta_scale, bounds.eta_scale));
    Ok(CalibrationResult {
        model: with_free(model, beta, eta_scale),
        beta,
        eta_scale,
        objective,
        at_boundary,
        history: search.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::IntegrationConfig;

    fn coarse() -> IntegrationConfig {
        IntegrationConfig::default().with_dt(0.25)
    }

    #[test]
    fn identical_runs_compare_to_zero() {
        let model = Model::default();
        let cfg = coarse();
        let (b, s) = run_pair(&model, &ScenarioSpec::baseline(0.018), &cfg).unwrap();
        assert_eq!(b, s);
        for t in [2023.5, 2030.0, 2050.5] {
            for c in compare_at(&b, &s, t).unwrap() {
                assert_eq!(c.abs_change, 0.0);
                assert_eq!(c.pct_change, 0.0);
            }
        }
    }

    #[test]
    fn comparison_arithmetic() {
        let c = ComparisonSummary::new(Metric::IncomePc, 100.0, 74.0);
        assert_eq!(c.abs_change, 26.0);
        assert_eq!(c.pct_change, 26.0);
        let u = ComparisonSummary::new(Metric::UnderutilisedPersons, 200.0, 300.0);
        assert_eq!(u.abs_change, 100.0);
        assert_eq!(u.pct_change, 50.0);
    }

    #[test]
    fn compare_rejects_off_grid_time() {
        let model = Model::default();
        let (b, s) = run_pair(&model, &ScenarioSpec::new("b", 0.07), &coarse()).unwrap();
        assert!(compare_at(&b, &s, 2030.1).is_err());
        let other = simulate(
            &model,
            &ScenarioSpec::new("b", 0.07),
            &IntegrationConfig::default(),
        )
        .unwrap();
        assert!(compare_at(&b, &other, 2030.0).is_err());
    }

    #[test]
    fn scenario_b_raises_underutilisation() {
        let model = Model::default();
        let (b, s) = run_pair(&model, &ScenarioSpec::new("b", 0.07), &coarse()).unwrap();
        assert!(s.last().state.u > b.last().state.u);
    }

    #[test]
    fn published_rows_present_for_abc() {
        for id in ["a", "b", "c"] {
            for m in Metric::ALL {
                assert!(published_row(id, m).is_some());
            }
        }
        assert!(published_row("baseline", Metric::IncomePc).is_none());
        assert_eq!(
            published_row("b", Metric::IncomePc).unwrap().mean_pct,
            25.96
        );
    }

    #[test]
    fn empty_targets_rejected() {
        let err = calibrate(
            &Model::default(),
            &[],
            FreeParameters::Beta,
            CalibrationBounds::default(),
            &coarse(),
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    fn level_target(model: &Model, cfg: &IntegrationConfig) -> CalibrationTarget {
        let quantity = CalibrationQuantity {
            metric: Metric::UnderutilisedPersons,
            scenario: ScenarioSpec::new("b", 0.07),
            time: 2050.5,
            kind: QuantityKind::Level,
        };
        let target_value = evaluate_quantity(model, &quantity, cfg).unwrap();
        CalibrationTarget {
            quantity,
            target_value,
            weight: 1.0,
        }
    }

    #[test]
    fn matching_targets_leave_params_unchanged() {
        let model = Model::default();
        let cfg = coarse();
        let target = level_target(&model, &cfg);
        let res = calibrate(
            &model,
            &[target],
            FreeParameters::Beta,
            CalibrationBounds::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(res.model, model);
        assert_eq!(res.objective, 0.0);
    }

    #[test]
    fn recovers_synthetic_beta() {
        let cfg = coarse();
        let mut truth = Model::default();
        truth.params.beta = 0.003;
        let target = level_target(&truth, &cfg);
        let res = calibrate(
            &Model::default(),
            &[target],
            FreeParameters::Beta,
            CalibrationBounds {
                beta: (0.001, 0.01),
                ..Default::default()
            },
            &cfg,
        )
        .unwrap();
        assert!((res.beta - 0.003).abs() < 1e-4, "{}", res.beta);
        assert!(!res.at_boundary);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn unreachable_target_reports_boundary() {
        let cfg = coarse();
        let mut target = level_target(&Model::default(), &cfg);
        target.target_value = 1.0e9;
        let res = calibrate(
            &Model::default(),
            &[target],
            FreeParameters::Beta,
            CalibrationBounds {
                beta: (0.001, 0.002),
                ..Default::default()
            },
            &cfg,
        )
        .unwrap();
        assert!(res.at_boundary);
        assert!((res.beta - 0.002).abs() < 1e-9);
    }

    #[test]
    fn two_parameter_search_never_worsens() {
        let cfg = coarse();
        let mut truth = Model::default();
        truth.params.beta = 0.004;
        let target = level_target(&truth, &cfg);
        let res = calibrate(
            &Model::default(),
            &[target],
            FreeParameters::BetaAndEtaScale,
            CalibrationBounds::default(),
            &cfg,
        )
        .unwrap();
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(res.objective < 1.0, "{}", res.objective);
    }
}
