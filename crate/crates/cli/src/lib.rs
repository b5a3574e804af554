//! Subcommand dispatch for the `capdeep` binary.
//!
//! Exit status: 0 on success, 1 on input errors (bad flags, bad config,
//! invalid values), 2 on runtime or model-domain errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use capdeep_core::output::{self, ThresholdReport};
use capdeep_core::scenario::{published_row, PUBLISHED_THRESHOLD_FOLD};
use capdeep_core::{
    bands, calibrate, compare_at, grid_sweep, horizon_rows, lhs_sample, parse_config,
    render_config, run_ensemble, run_pair, simulate, Arm, CalibrationBounds, CalibrationQuantity,
    CalibrationTarget, Error, FreeParameters, GridSpec, IntegrationConfig, Method, Metric,
    ModelConfig, ParameterSpace, QuantityKind, ScenarioSpec, ThresholdCriterion, ThresholdQuery,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "capdeep",
    version,
    about = "Capital-deepening stock-flow model experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Model configuration file merged over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `sensitivity`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Integration step in years.
    #[arg(long, global = true, default_value_t = 1.0 / 32.0)]
    dt: f64,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Euler)]
    method: MethodArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    AllTimes,
    AtWindowEnd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FreeArg {
    Beta,
    BetaAndEtaScale,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one scenario's trajectory as CSV.
    Simulate {
        #[arg(long, default_value = "baseline")]
        scenario: String,
        /// Override the scenario's K-L ratio growth.
        #[arg(long)]
        alpha: Option<f64>,
        /// Override the scenario's job-creation fold.
        #[arg(long)]
        fold: Option<f64>,
    },
    /// Compare scenarios against the baseline at the horizon.
    Scenarios {
        #[arg(long, value_delimiter = ',', default_value = "a,b,c")]
        scenario: Vec<String>,
    },
    /// Latin hypercube ensemble: summary, bands and published anchors.
    Sensitivity {
        #[arg(long, default_value = "b")]
        scenario: String,
        #[arg(long, default_value_t = 200)]
        draws: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// K-L ratio growth × job-creation fold grid of consumption-index change.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Minimal job-creation fold keeping consumption at or above baseline.
    Threshold {
        #[arg(long, default_value_t = 0.11)]
        alpha: f64,
        /// Window as `start:end` in years.
        #[arg(long, default_value = "2025:2045")]
        window: String,
        #[arg(long, default_value_t = 1.0)]
        fold_min: f64,
        #[arg(long, default_value_t = 12.0)]
        fold_max: f64,
        #[arg(long, value_enum, default_value_t = CriterionArg::AllTimes)]
        criterion: CriterionArg,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Fit β (and optionally an η scale) to horizon targets; writes the fitted config.
    Calibrate {
        /// `scenario:metric:pct` percent change against baseline at the horizon.
        #[arg(long = "target", default_value = "b:underutilised_persons:99.76")]
        targets: Vec<String>,
        #[arg(long, value_enum, default_value_t = FreeArg::Beta)]
        free: FreeArg,
        #[arg(long, default_value_t = 0.0005)]
        beta_min: f64,
        #[arg(long, default_value_t = 0.05)]
        beta_max: f64,
        #[arg(long, default_value_t = 0.5)]
        eta_scale_min: f64,
        #[arg(long, default_value_t = 4.0)]
        eta_scale_max: f64,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.02)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.10)]
    alpha_max: f64,
    #[arg(long, default_value_t = 30)]
    alpha_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    fold_min: f64,
    #[arg(long, default_value_t = 12.0)]
    fold_max: f64,
    #[arg(long, default_value_t = 30)]
    fold_steps: usize,
}

struct Context<'a> {
    config: ModelConfig,
    cfg: IntegrationConfig,
    out: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Context<'_> {
    fn emit(&mut self, text: &str) -> Result<(), Error> {
        match &self.out {
            Some(path) => fs::write(path, text)?,
            None => self.stdout.write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn note(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.stderr, "{}", text.as_ref());
    }

    fn scenario(&self, id: &str) -> Result<ScenarioSpec, Error> {
        self.config.scenario(id).cloned().ok_or_else(|| {
            let known: Vec<&str> = self
                .config
                .scenarios
                .iter()
                .map(|s| s.id.as_str())
                .collect();
            Error::InvalidInput(format!(
                "unknown scenario `{id}` (known: {})",
                known.join(", ")
            ))
        })
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err((e, code)) => {
            let _ = writeln!(stderr, "error: {e}");
            code
        }
    }
}

fn classify(e: Error) -> (Error, i32) {
    let code = if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_RUNTIME
    };
    (e, code)
}

fn load_config(path: Option<&Path>) -> Result<ModelConfig, Error> {
    match path {
        None => parse_config(""),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                Error::InvalidInput(format!("cannot read config {}: {e}", p.display()))
            })?;
            parse_config(&text)
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), (Error, i32)> {
    let config = load_config(cli.common.config.as_deref()).map_err(classify)?;
    let method = match cli.common.method {
        MethodArg::Euler => Method::Euler,
        MethodArg::Rk4 => Method::Rk4,
    };
    let cfg = IntegrationConfig::default()
        .with_dt(cli.common.dt)
        .with_method(method);
    cfg.steps().map_err(classify)?;
    let mut ctx = Context {
        config,
        cfg,
        out: cli.common.out,
        stdout,
        stderr,
    };
    let result = match cli.command {
        Command::Simulate {
            scenario,
            alpha,
            fold,
        } => cmd_simulate(&mut ctx, &scenario, alpha, fold),
        Command::Scenarios { scenario } => cmd_scenarios(&mut ctx, &scenario),
        Command::Sensitivity {
            scenario,
            draws,
            seed,
        } => cmd_sensitivity(&mut ctx, &scenario, draws, seed),
        Command::Sweep { grid } => cmd_sweep(&mut ctx, &grid),
        Command::Threshold {
            alpha,
            window,
            fold_min,
            fold_max,
            criterion,
            tolerance,
        } => {
            let criterion = match criterion {
                CriterionArg::AllTimes => ThresholdCriterion::AllTimes,
                CriterionArg::AtWindowEnd => ThresholdCriterion::AtWindowEnd,
            };
            parse_window(&window).and_then(|window| {
                let query = ThresholdQuery {
                    alpha,
                    window,
                    fold_bounds: (fold_min, fold_max),
                    criterion,
                    tolerance,
                };
                cmd_threshold(&mut ctx, &query)
            })
        }
        Command::Calibrate {
            targets,
            free,
            beta_min,
            beta_max,
            eta_scale_min,
            eta_scale_max,
        } => {
            let free = match free {
                FreeArg::Beta => FreeParameters::Beta,
                FreeArg::BetaAndEtaScale => FreeParameters::BetaAndEtaScale,
            };
            let bounds = CalibrationBounds {
                beta: (beta_min, beta_max),
                eta_scale: (eta_scale_min, eta_scale_max),
            };
            cmd_calibrate(&mut ctx, &targets, free, bounds)
        }
    };
    result.map_err(classify)
}

fn parse_window(text: &str) -> Result<(f64, f64), Error> {
    let bad = || Error::InvalidInput(format!("window must be `start:end`, got `{text}`"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn cmd_simulate(
    ctx: &mut Context,
    id: &str,
    alpha: Option<f64>,
    fold: Option<f64>,
) -> Result<(), Error> {
    let mut scenario = ctx.scenario(id)?;
    if let Some(a) = alpha {
        scenario.alpha = a;
    }
    if let Some(f) = fold {
        scenario.job_fold = f;
    }
    let traj = simulate(&ctx.config.model, &scenario, &ctx.cfg)?;
    ctx.emit(&output::trajectory_csv(&traj))
}

fn cmd_scenarios(ctx: &mut Context, ids: &[String]) -> Result<(), Error> {
    let mut rows = Vec::new();
    for id in ids {
        let scenario = ctx.scenario(id)?;
        let (baseline, run) = run_pair(&ctx.config.model, &scenario, &ctx.cfg)?;
        for c in compare_at(&baseline, &run, ctx.cfg.t_end)? {
            rows.push((id.clone(), c));
        }
    }
    ctx.emit(&output::comparison_csv(&rows))
}

fn cmd_sensitivity(ctx: &mut Context, id: &str, draws: usize, seed: u64) -> Result<(), Error> {
    let dir = ctx
        .out
        .clone()
        .ok_or_else(|| Error::InvalidInput("sensitivity needs --out <directory>".into()))?;
    let scenario = ctx.scenario(id)?;
    let space = ParameterSpace::around(&ctx.config.model.params);
    let design = lhs_sample(&space, draws, seed)?;
    let ensemble = run_ensemble(&ctx.config.model, &design, &scenario, &ctx.cfg)?;
    if ensemble.failure_count() > 0 {
        ctx.note(format!(
            "{} of {draws} draws failed and were excluded",
            ensemble.failure_count()
        ));
    }
    let rows = horizon_rows(&ensemble)?;
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("summary.csv"), output::summary_csv(&rows))?;
    fs::write(dir.join("anchors.csv"), output::anchors_csv(&rows))?;
    fs::write(
        dir.join("bands.csv"),
        output::bands_csv(&bands(&ensemble, Arm::Scenario)?),
    )?;
    fs::write(
        dir.join("bands_baseline.csv"),
        output::bands_csv(&bands(&ensemble, Arm::Baseline)?),
    )?;
    for r in &rows {
        let published = published_row(id, r.metric)
            .map(|p| format!(" (published {})", p.mean_pct))
            .unwrap_or_default();
        ctx.note(format!(
            "{id} {}: mean % change {:.2}{published}",
            r.metric.as_str(),
            r.pct_change.mean
        ));
    }
    Ok(())
}

fn cmd_sweep(ctx: &mut Context, g: &GridArgs) -> Result<(), Error> {
    let grid = GridSpec {
        alpha_min: g.alpha_min,
        alpha_max: g.alpha_max,
        alpha_steps: g.alpha_steps,
        fold_min: g.fold_min,
        fold_max: g.fold_max,
        fold_steps: g.fold_steps,
        horizon: ctx.cfg.t_end,
    };
    let map = grid_sweep(&ctx.config.model, &grid, &ctx.cfg)?;
    if map.invalid_count() > 0 {
        ctx.note(format!("{} cells failed", map.invalid_count()));
    }
    for v in map.pass_set_violations() {
        ctx.note(format!(
            "finding: alpha={} passes at fold {} but fails at fold {}",
            v.alpha, v.passing_fold, v.failing_fold
        ));
    }
    ctx.emit(&output::heatmap_csv(&map))
}

fn cmd_threshold(ctx: &mut Context, query: &ThresholdQuery) -> Result<(), Error> {
    let result = capdeep_core::threshold_search(&ctx.config.model, query, &ctx.cfg)?;
    if result.non_monotone {
        ctx.note("predicate not monotone in fold; used a linear scan");
    }
    ctx.note(match result.fold {
        Some(f) => format!("minimal fold {f} (published {PUBLISHED_THRESHOLD_FOLD})"),
        None => format!(
            "no fold up to {} suffices (published {PUBLISHED_THRESHOLD_FOLD})",
            query.fold_bounds.1
        ),
    });
    ctx.emit(&output::threshold_json(&ThresholdReport::new(
        query, &result,
    )))
}

fn parse_target(ctx: &Context, text: &str) -> Result<CalibrationTarget, Error> {
    let bad = || {
        Error::InvalidInput(format!(
            "target must be `scenario:metric:pct`, got `{text}`"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let [id, metric, value] = parts.as_slice() else {
        return Err(bad());
    };
    let metric = Metric::parse(metric).ok_or_else(bad)?;
    let target_value: f64 = value.parse().map_err(|_| bad())?;
    Ok(CalibrationTarget {
        quantity: CalibrationQuantity {
            metric,
            scenario: ctx.scenario(id)?,
            time: ctx.cfg.t_end,
            kind: QuantityKind::PctChangeVsBaseline,
        },
        target_value,
        weight: 1.0,
    })
}

fn cmd_calibrate(
    ctx: &mut Context,
    targets: &[String],
    free: FreeParameters,
    bounds: CalibrationBounds,
) -> Result<(), Error> {
    let targets = targets
        .iter()
        .map(|t| parse_target(ctx, t))
        .collect::<Result<Vec<_>, _>>()?;
    let res = calibrate(&ctx.config.model, &targets, free, bounds, &ctx.cfg)?;
    ctx.note(format!(
        "beta = {}, eta_scale = {}, objective = {}{}",
        res.beta,
        res.eta_scale,
        res.objective,
        if res.at_boundary {
            " (at search bound)"
        } else {
            ""
        }
    ));
    let fitted = ModelConfig {
        model: res.model,
        scenarios: ctx.config.scenarios.clone(),
    };
    ctx.emit(&render_config(&fitted))
}
