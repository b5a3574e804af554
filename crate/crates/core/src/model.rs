//! Domain types and the pure equations of the stock-flow model.
//!
//! Stocks are population `P`, underutilised persons `U`, the underutilisation
//! onset rate `O` (target underutilised share of the labour force), the
//! capital-to-labour ratio `K`, and the multifactor productivity level `M`.

use crate::error::{Error, Result};
use crate::table::Converters;

/// Scalar constants of the model. Defaults are the published Australian values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    /// Initial population (persons).
    pub p0: f64,
    /// Initial underutilised persons.
    pub u0: f64,
    /// Initial underutilisation onset rate (fraction of labour force).
    pub o0: f64,
    /// Initial K-L ratio (index, 2021 = 100).
    pub k0: f64,
    /// Net population growth (fraction per year).
    pub g: f64,
    /// Labour force at the start year (persons).
    pub i: f64,
    /// Population at the start year (persons); `i / mu` is the participation share.
    pub mu: f64,
    /// Delay in onset-rate adjustment (years).
    pub d: f64,
    /// New job creation rate per capita of the labour force (per year).
    pub lambda: f64,
    /// Working-age mortality (per year).
    pub m: f64,
    /// Base growth of the onset rate (per year).
    pub beta: f64,
    /// K-L ratio growth (per year).
    pub alpha: f64,
    /// Base MFP growth (per year).
    pub nu: f64,
    /// Underemployed to unemployed ratio.
    pub r: f64,
    /// Disposable income of an underemployed person relative to a fully employed one.
    pub underemployed_income_ratio: f64,
    /// Income scaling factor (currency per effective earner-year).
    pub tau: f64,
    /// Share of disposable income exposed to productivity-driven price changes.
    pub omega: f64,
    /// Initial MFP level.
    pub m0: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self {
            p0: 26_638_544.0,
            u0: 1_445_000.0,
            o0: 0.099,
            k0: 94.6,
            g: 0.011,
            i: 14_585_316.0,
            mu: 26_638_544.0,
            d: 5.0,
            lambda: 0.0021,
            m: 0.0015,
            beta: 0.0015,
            alpha: 0.018,
            // 0.56298 percent per year
            nu: 0.0056298,
            r: 1.6,
            underemployed_income_ratio: 0.77,
            tau: 86_985.0,
            omega: 0.5,
            m0: 1.0,
        }
    }
}

impl ModelParameters {
    /// Field names in declaration order; the config format uses the same keys.
    pub const KEYS: [&'static str; 18] = [
        "p0",
        "u0",
        "o0",
        "k0",
        "g",
        "i",
        "mu",
        "d",
        "lambda",
        "m",
        "beta",
        "alpha",
        "nu",
        "r",
        "underemployed_income_ratio",
        "tau",
        "omega",
        "m0",
    ];

    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "p0" => self.p0,
            "u0" => self.u0,
            "o0" => self.o0,
            "k0" => self.k0,
            "g" => self.g,
            "i" => self.i,
            "mu" => self.mu,
            "d" => self.d,
            "lambda" => self.lambda,
            "m" => self.m,
            "beta" => self.beta,
            "alpha" => self.alpha,
            "nu" => self.nu,
            "r" => self.r,
            "underemployed_income_ratio" => self.underemployed_income_ratio,
            "tau" => self.tau,
            "omega" => self.omega,
            "m0" => self.m0,
            _ => return None,
        })
    }

    pub fn get_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "p0" => &mut self.p0,
            "u0" => &mut self.u0,
            "o0" => &mut self.o0,
            "k0" => &mut self.k0,
            "g" => &mut self.g,
            "i" => &mut self.i,
            "mu" => &mut self.mu,
            "d" => &mut self.d,
            "lambda" => &mut self.lambda,
            "m" => &mut self.m,
            "beta" => &mut self.beta,
            "alpha" => &mut self.alpha,
            "nu" => &mut self.nu,
            "r" => &mut self.r,
            "underemployed_income_ratio" => &mut self.underemployed_income_ratio,
            "tau" => &mut self.tau,
            "omega" => &mut self.omega,
            "m0" => &mut self.m0,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for key in Self::KEYS {
            let v = self.get(key).unwrap_or(f64::NAN);
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        for (name, v) in [
            ("p0", self.p0),
            ("u0", self.u0),
            ("i", self.i),
            ("mu", self.mu),
        ] {
            if v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.u0 >= self.i {
            return Err(Error::param("u0", "must be below the labour force `i`"));
        }
        if self.i > self.mu {
            return Err(Error::param(
                "i",
                "labour force cannot exceed population `mu`",
            ));
        }
        if self.mu != self.p0 {
            return Err(Error::param("mu", "must equal the initial population `p0`"));
        }
        for (name, v) in [("o0", self.o0), ("omega", self.omega)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("k0", self.k0),
            ("d", self.d),
            ("r", self.r),
            ("tau", self.tau),
            ("m0", self.m0),
        ] {
            if v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("m", self.m),
            (
                "underemployed_income_ratio",
                self.underemployed_income_ratio,
            ),
        ] {
            if v < 0.0 {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Share of the population in the labour force.
    pub fn participation(&self) -> f64 {
        self.i / self.mu
    }

    pub fn initial_labour_force(&self) -> f64 {
        self.p0 * self.participation()
    }
}

/// What the K-L ratio converters (η and MFP) take as input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConverterInput {
    /// `K(t) / K0`
    #[default]
    RelativeToInitial,
    /// `K(t) / K_baseline(t)`, with the baseline growing at the parameter `alpha`.
    RelativeToBaseline,
}

impl ConverterInput {
    pub fn as_str(self) -> &'static str {
        match self {
            ConverterInput::RelativeToInitial => "initial",
            ConverterInput::RelativeToBaseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "initial" => Some(ConverterInput::RelativeToInitial),
            "baseline" => Some(ConverterInput::RelativeToBaseline),
            _ => None,
        }
    }
}

/// Parameters, converter tables and converter input mode: everything a run needs
/// apart from the scenario and the integration settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub params: ModelParameters,
    pub converters: Converters,
    pub converter_input: ConverterInput,
}

impl Model {
    pub fn new(params: ModelParameters) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            ..Self::default()
        })
    }

    pub fn initial_state(&self, t: f64) -> SimState {
        let p = &self.params;
        SimState {
            t,
            p: p.p0,
            u: p.u0,
            o: p.o0,
            k: p.k0,
            m_level: p.m0,
        }
    }

    fn kl_input(&self, k: f64, k_baseline: f64) -> f64 {
        match self.converter_input {
            ConverterInput::RelativeToInitial => k / self.params.k0,
            ConverterInput::RelativeToBaseline => k / k_baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub p: f64,
    pub u: f64,
    pub o: f64,
    pub k: f64,
    pub m_level: f64,
}

impl SimState {
    pub fn is_valid(&self) -> bool {
        self.p > 0.0 && self.u >= 0.0 && self.o >= 0.0 && self.k > 0.0 && self.m_level > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedOutputs {
    pub labour_force: f64,
    /// Aggregate disposable income ψ (currency per year).
    pub psi: f64,
    pub income_pc: f64,
    pub income_pc_ratio: f64,
    pub price_level: f64,
    pub consumption_index: f64,
}

/// Time derivatives of the integrated quantities (per year).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub dp: f64,
    pub du: f64,
    pub d_o: f64,
    pub dk: f64,
    pub dm: f64,
}

/// Exogenous inputs to the rate equations at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    /// K-L ratio growth in force.
    pub alpha: f64,
    /// Multiplier on the job creation rate (1 outside a job-creation ramp).
    pub job_multiplier: f64,
    /// Same-time K of a pure-baseline run; read only in baseline-relative mode.
    pub k_baseline: f64,
}

impl Forcing {
    pub fn baseline(params: &ModelParameters, k_baseline: f64) -> Self {
        Self {
            alpha: params.alpha,
            job_multiplier: 1.0,
            k_baseline,
        }
    }
}

/// Splits underutilised persons into (unemployed, underemployed) given the
/// underemployed-to-unemployed ratio `r`.
pub fn split_underutilised(u: f64, r: f64) -> (f64, f64) {
    let underemployed = u * r / (1.0 + r);
    (u - underemployed, underemployed)
}

/// Labour force for a population under constant participation.
pub fn labour_force(p: f64, params: &ModelParameters) -> f64 {
    p * params.participation()
}

/// Underutilisation rate relative to its initial value (θ converter input).
pub fn relative_underutilisation(state: &SimState, params: &ModelParameters) -> f64 {
    let l = labour_force(state.p, params);
    let initial_rate = params.u0 / params.initial_labour_force();
    (state.u / l) / initial_rate
}

/// Aggregate disposable income ψ.
///
/// Fully employed persons count at full weight, underemployed persons at the
/// underemployed income ratio and unemployed persons at zero; the earner count
/// is scaled by θ(relative underutilisation) and τ.
pub fn aggregate_disposable_income(state: &SimState, model: &Model) -> Result<f64> {
    let params = &model.params;
    let l = labour_force(state.p, params);
    if state.u > l {
        return Err(Error::domain(format!(
            "underutilised persons {} exceed labour force {}",
            state.u, l
        )));
    }
    let (_, underemployed) = split_underutilised(state.u, params.r);
    let earners = (l - state.u) + params.underemployed_income_ratio * underemployed;
    let theta = model
        .converters
        .theta
        .eval(relative_underutilisation(state, params));
    Ok(earners * theta * params.tau)
}

/// Consumption index: per-capita income ratio deflated by the share of spending
/// exposed to price changes.
pub fn consumption_index(income_pc_ratio: f64, price_ratio: f64, omega: f64) -> Result<f64> {
    let denom = price_ratio * omega + (1.0 - omega);
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::domain(format!(
            "consumption deflator must be positive, got {denom}"
        )));
    }
    Ok(income_pc_ratio / denom)
}

/// Reference values at the start of a run, used to normalise derived outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialReference {
    pub income_pc: f64,
    pub price_level: f64,
}

impl InitialReference {
    pub fn from_state(state: &SimState, model: &Model) -> Result<Self> {
        let psi = aggregate_disposable_income(state, model)?;
        Ok(Self {
            income_pc: psi / state.p,
            price_level: model.converters.prices.eval(state.m_level),
        })
    }
}

pub fn derived_outputs(
    state: &SimState,
    model: &Model,
    reference: &InitialReference,
) -> Result<DerivedOutputs> {
    let psi = aggregate_disposable_income(state, model)?;
    let income_pc = psi / state.p;
    let income_pc_ratio = income_pc / reference.income_pc;
    let price_level = model.converters.prices.eval(state.m_level);
    let consumption_index = consumption_index(
        income_pc_ratio,
        price_level / reference.price_level,
        model.params.omega,
    )?;
    Ok(DerivedOutputs {
        labour_force: labour_force(state.p, &model.params),
        psi,
        income_pc,
        income_pc_ratio,
        price_level,
        consumption_index,
    })
}

/// Rate equations of the five integrated quantities.
///
/// The underutilisation inflow `(L·O − U)/d` is goal-seeking and may be
/// negative; flooring `U` at zero is left to the integrator.
pub fn derivatives(state: &SimState, model: &Model, forcing: &Forcing) -> Rates {
    let params = &model.params;
    let l = labour_force(state.p, params);
    let x_k = model.kl_input(state.k, forcing.k_baseline);
    let inflow = (l * state.o - state.u) / params.d;
    let hires = l * params.lambda * forcing.job_multiplier;
    let deaths = state.u * params.m;
    Rates {
        dp: state.p * params.g,
        du: inflow - hires - deaths,
        d_o: state.o * params.beta * model.converters.eta.eval(x_k),
        dk: state.k * forcing.alpha,
        dm: state.m_level * params.nu * model.converters.mfp.eval(x_k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn start() -> (Model, SimState) {
        let model = Model::default();
        let s = model.initial_state(2023.5);
        (model, s)
    }

    #[test]
    fn defaults_validate() {
        ModelParameters::default().validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut p = ModelParameters::default();
        p.u0 = p.i;
        assert!(p.validate().is_err());
        let mut p = ModelParameters::default();
        p.omega = 1.2;
        assert!(p.validate().is_err());
        let mut p = ModelParameters::default();
        p.d = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParameters::default();
        p.mu = p.p0 + 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_underutilised(2_600_000.0, 1.6),
            (1_000_000.0, 1_600_000.0)
        );
        assert_eq!(split_underutilised(0.0, 3.0), (0.0, 0.0));
        assert_eq!(split_underutilised(1000.0, 1.0), (500.0, 500.0));
    }

    #[test]
    fn initial_income_per_capita() {
        let (model, s) = start();
        let psi = aggregate_disposable_income(&s, &model).unwrap();
        // effective earners 13,825,023.69 by hand
        let earners = (14_585_316.0 - 1_445_000.0) + 0.77 * 1_445_000.0 * 1.6 / 2.6;
        assert_relative_eq!(earners, 13_825_023.692307692, max_relative = 1e-12);
        let income_pc = psi / s.p;
        assert!(
            (income_pc - 45_144.0).abs() / 45_144.0 < 1e-4,
            "{income_pc}"
        );
    }

    #[test]
    fn zero_underutilisation_uses_theta_at_zero() {
        let (model, mut s) = start();
        s.u = 0.0;
        let psi = aggregate_disposable_income(&s, &model).unwrap();
        let l = labour_force(s.p, &model.params);
        assert_relative_eq!(psi, l * 1.359 * model.params.tau, max_relative = 1e-15);
    }

    #[test]
    fn income_is_linear_in_tau() {
        let (mut model, s) = start();
        let a = aggregate_disposable_income(&s, &model).unwrap();
        model.params.tau *= 2.0;
        let b = aggregate_disposable_income(&s, &model).unwrap();
        assert_eq!(b, 2.0 * a);
    }

    #[test]
    fn underutilisation_above_labour_force_is_domain_error() {
        let (model, mut s) = start();
        s.u = labour_force(s.p, &model.params) * 1.01;
        assert!(matches!(
            aggregate_disposable_income(&s, &model),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn consumption_index_examples() {
        assert_eq!(consumption_index(1.0, 1.0, 0.5).unwrap(), 1.0);
        assert!((consumption_index(1.0, 0.8, 0.5).unwrap() - 1.0 / 0.9).abs() < 1e-12);
        for omega in [0.0, 0.3, 0.7, 1.0] {
            assert_eq!(consumption_index(0.9, 1.0, omega).unwrap(), 0.9);
        }
        assert!(consumption_index(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn initial_rates() {
        let (model, s) = start();
        let f = Forcing::baseline(&model.params, model.params.k0);
        let r = derivatives(&s, &model, &f);
        // 26,638,544 × 0.011 = 293,023.984
        assert_relative_eq!(r.dp, 293_023.984, max_relative = 1e-12);
        assert!((r.dp - 293_024.0).abs() < 0.02);
        assert_relative_eq!(r.dk, 1.7028, max_relative = 1e-12);
        let expected_du = (14_585_316.0 * 0.099 - 1_445_000.0) / 5.0
            - 14_585_316.0 * 0.0021
            - 1_445_000.0 * 0.0015;
        assert_relative_eq!(r.du, expected_du, max_relative = 1e-12);
        assert!((r.du - (-33_007.0)).abs() < 1.0);
        assert_relative_eq!(r.d_o, 1.485e-4, max_relative = 1e-12);
        assert_relative_eq!(r.dm, 0.0056298, max_relative = 1e-12);
    }

    #[test]
    fn derived_outputs_at_start() {
        let (model, s) = start();
        let reference = InitialReference::from_state(&s, &model).unwrap();
        let out = derived_outputs(&s, &model, &reference).unwrap();
        assert_eq!(out.consumption_index, 1.0);
        assert_eq!(out.income_pc_ratio, 1.0);
        assert_eq!(out.price_level, 1.0);
        assert_eq!(out.labour_force, model.params.i);
    }

    #[test]
    fn baseline_relative_mode_reads_k_baseline() {
        let (mut model, mut s) = start();
        model.converter_input = ConverterInput::RelativeToBaseline;
        s.k = 2.0 * model.params.k0;
        let f = Forcing::baseline(&model.params, s.k);
        // ratio to baseline is 1, so η = 1 regardless of K/K0
        let r = derivatives(&s, &model, &f);
        assert_relative_eq!(r.d_o, s.o * model.params.beta, max_relative = 1e-15);
    }

    fn valid_state() -> impl Strategy<Value = SimState> {
        (
            1.0e6..1.0e8f64,
            0.0..1.0f64,
            0.0..1.0f64,
            1.0..2000.0f64,
            0.01..50.0f64,
        )
            .prop_map(|(p, u_share, o, k, m_level)| {
                let l = p * ModelParameters::default().participation();
                SimState {
                    t: 2030.0,
                    p,
                    u: u_share * l,
                    o,
                    k,
                    m_level,
                }
            })
    }

    proptest! {
        #[test]
        fn rates_are_finite(s in valid_state(), kb in 1.0..2000.0f64, mode in any::<bool>()) {
            let mut model = Model::default();
            if mode {
                model.converter_input = ConverterInput::RelativeToBaseline;
            }
            let f = Forcing { alpha: 0.1, job_multiplier: 12.0, k_baseline: kb };
            let r = derivatives(&s, &model, &f);
            prop_assert!(r.dp.is_finite() && r.du.is_finite() && r.d_o.is_finite());
            prop_assert!(r.dk.is_finite() && r.dm.is_finite());
        }

        #[test]
        fn income_decreases_in_underutilisation(s in valid_state(), bump in 1.0..1.0e5f64) {
            let model = Model::default();
            let l = labour_force(s.p, &model.params);
            prop_assume!(s.u + bump <= l);
            let lower = aggregate_disposable_income(&s, &model).unwrap();
            let more = SimState { u: s.u + bump, ..s };
            let higher = aggregate_disposable_income(&more, &model).unwrap();
            prop_assert!(higher < lower);
        }

        #[test]
        fn split_sums_to_input(u in 0.0..1.0e8f64, r in 0.01..100.0f64) {
            let (a, b) = split_underutilised(u, r);
            prop_assert!(((a + b) - u).abs() <= f64::EPSILON * u);
        }

        #[test]
        fn consumption_monotone(inc in 0.01..3.0f64, pr in 0.5..1.5f64, omega in 0.01..1.0f64, dp in 0.001..0.3f64) {
            let base = consumption_index(inc, pr, omega).unwrap();
            prop_assert!(consumption_index(inc, pr + dp, omega).unwrap() < base);
            prop_assert!(consumption_index(inc + dp, pr, omega).unwrap() > base);
        }
    }
}
