//! Fixed-step time integration of the model and trajectory recording.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{
    derivatives, derived_outputs, DerivedOutputs, Forcing, InitialReference, Model, SimState,
};
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Euler,
    Rk4,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "euler" => Some(Method::Euler),
            "rk4" => Some(Method::Rk4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            t_start: 2023.5,
            t_end: 2050.5,
            dt: 1.0 / 32.0,
            method: Method::Euler,
            record_stride: 1,
        }
    }
}

impl IntegrationConfig {
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Number of integration steps; validates the configuration.
    pub fn steps(&self) -> Result<usize> {
        if !(self.t_start.is_finite() && self.t_end.is_finite()) || self.t_end <= self.t_start {
            return Err(Error::input(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::input(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        let exact = (self.t_end - self.t_start) / self.dt;
        let n = exact.round();
        if (exact - n).abs() > 1e-9 || n < 1.0 {
            return Err(Error::input(format!(
                "horizon {}..{} is not a whole number of steps of {}",
                self.t_start, self.t_end, self.dt
            )));
        }
        let n = n as usize;
        if self.record_stride == 0 || n % self.record_stride != 0 {
            return Err(Error::input(format!(
                "record_stride {} must divide the step count {n}",
                self.record_stride
            )));
        }
        Ok(n)
    }

    /// Time of step `k` on the integration grid.
    pub fn time_at(&self, k: usize, n: usize) -> f64 {
        if k == n {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RampShape {
    #[default]
    Smoothstep,
}

/// S-shaped transition of the job-creation multiplier from 1 to `fold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub fold: f64,
    pub t0: f64,
    pub duration: f64,
    pub shape: RampShape,
}

impl RampSpec {
    pub fn new(fold: f64, t0: f64) -> Self {
        Self {
            fold,
            t0,
            duration: 2.0,
            shape: RampShape::Smoothstep,
        }
    }
}

pub fn ramp_multiplier(spec: &RampSpec, t: f64) -> f64 {
    if t <= spec.t0 {
        return 1.0;
    }
    if t >= spec.t0 + spec.duration {
        return spec.fold;
    }
    let u = (t - spec.t0) / spec.duration;
    let s = match spec.shape {
        RampShape::Smoothstep => u * u * (3.0 - 2.0 * u),
    };
    1.0 + (spec.fold - 1.0) * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: SimState,
    pub derived: DerivedOutputs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub scenario_id: String,
    pub params_hash: String,
    pub dt: f64,
    pub method: Method,
    pub t_start: f64,
    /// Time between recorded samples.
    pub sample_interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.t)
    }

    /// Index of the recorded sample at exactly `t`; off-grid times are an error.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let pos = (t - self.meta.t_start) / self.meta.sample_interval;
        let k = pos.round();
        if !pos.is_finite() || (pos - k).abs() > 1e-9 || k < 0.0 || k as usize >= self.samples.len()
        {
            return Err(Error::input(format!(
                "t={t} is not a recorded time of trajectory `{}`",
                self.meta.scenario_id
            )));
        }
        Ok(k as usize)
    }

    pub fn at(&self, t: f64) -> Result<&Sample> {
        Ok(&self.samples[self.index_of(t)?])
    }

    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.samples.len() == other.samples.len()
            && self.times().zip(other.times()).all(|(a, b)| a == b)
    }
}

/// Short content hash of the model, used to tag trajectories.
pub fn params_hash(model: &Model) -> String {
    let doc = crate::config::render_model(model);
    let digest = Sha256::digest(doc.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

// P, U, O, K, M, K_baseline
type Vector = [f64; 6];

fn to_state(t: f64, y: &Vector) -> SimState {
    SimState {
        t,
        p: y[0],
        u: y[1],
        o: y[2],
        k: y[3],
        m_level: y[4],
    }
}

struct Rhs<'a> {
    model: &'a Model,
    alpha: f64,
    ramp: Option<RampSpec>,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &Vector) -> Vector {
        let job_multiplier = self.ramp.map_or(1.0, |r| ramp_multiplier(&r, t));
        let forcing = Forcing {
            alpha: self.alpha,
            job_multiplier,
            k_baseline: y[5],
        };
        let r = derivatives(&to_state(t, y), self.model, &forcing);
        [
            r.dp,
            r.du,
            r.d_o,
            r.dk,
            r.dm,
            y[5] * self.model.params.alpha,
        ]
    }
}

fn axpy(y: &Vector, h: f64, k: &Vector) -> Vector {
    std::array::from_fn(|j| y[j] + h * k[j])
}

fn step(rhs: &Rhs, method: Method, t: f64, y: &Vector, dt: f64) -> Vector {
    match method {
        Method::Euler => axpy(y, dt, &rhs.eval(t, y)),
        Method::Rk4 => {
            let k1 = rhs.eval(t, y);
            let k2 = rhs.eval(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1));
            let k3 = rhs.eval(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2));
            let k4 = rhs.eval(t + dt, &axpy(y, dt, &k3));
            std::array::from_fn(|j| y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        }
    }
}

/// Integrates one scenario over the configured horizon.
pub fn simulate(
    model: &Model,
    scenario: &ScenarioSpec,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    model.params.validate()?;
    scenario.validate()?;
    let n = cfg.steps()?;

    let rhs = Rhs {
        model,
        alpha: scenario.alpha,
        ramp: (scenario.job_fold != 1.0).then(|| scenario.ramp(cfg.t_start)),
    };

    let init = model.initial_state(cfg.t_start);
    let reference =
        InitialReference::from_state(&init, model).map_err(|e| e.at_time(cfg.t_start))?;
    let mut y: Vector = [
        init.p,
        init.u,
        init.o,
        init.k,
        init.m_level,
        model.params.k0,
    ];

    let mut samples = Vec::with_capacity(n / cfg.record_stride + 1);
    for k in 0..=n {
        let t = cfg.time_at(k, n);
        if k % cfg.record_stride == 0 {
            let state = to_state(t, &y);
            let derived = derived_outputs(&state, model, &reference).map_err(|e| e.at_time(t))?;
            samples.push(Sample { state, derived });
        }
        if k == n {
            break;
        }
        y = step(&rhs, cfg.method, t, &y, cfg.dt);
        y[1] = y[1].max(0.0);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                message: "non-finite state".into(),
                time: Some(cfg.time_at(k + 1, n)),
            });
        }
    }

    Ok(Trajectory {
        meta: TrajectoryMeta {
            scenario_id: scenario.id.clone(),
            params_hash: params_hash(model),
            dt: cfg.dt,
            method: cfg.method,
            t_start: cfg.t_start,
            sample_interval: cfg.dt * cfg.record_stride as f64,
        },
        samples,
    })
}
