//! Config-driven experiments and their JSON reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kernel::{StateVector, TransitionKernel, MAX_INDEX};
use crate::lookahead::{self, PathCouplingSettings, ScalarPlan};
use crate::markovian::{simulate_bck, simulate_mu_t};
use crate::moments::covariance_check;
use crate::noise::GaussianSource;
use crate::parallel::{resolve_threads, run_replicates};
use crate::survival::{
    estimate_survival, fit_rate, log_grid, wilson_interval, EventTime, FitWindow, RateFit,
    SurvivalCurve,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the build that produced a report.
pub const BUILD_ID: &str = env!("KOLCOUPLE_BUILD_ID");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Bck,
    MuT,
    LookaheadScalar,
    LookaheadPaths,
    BoundedHorizon,
    TvTable,
    HyperplaneCheck,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub k: Option<usize>,
    pub x1: Option<Vec<f64>>,
    pub x2: Option<Vec<f64>>,
    pub z: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub target_t: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub dt0: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points_per_decade: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub modes: Option<usize>,
    pub grid_per_block: Option<usize>,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub replicates: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub alpha: Option<f64>,
}

/// Pass condition evaluated by `--check`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    pub slope: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_slope: Option<f64>,
    /// Require the 99% interval for survival at the horizon to exclude 0.
    pub survives: Option<bool>,
}

impl CheckSection {
    /// The rate each experiment kind is expected to show.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut c = Self::default();
        match kind {
            ExperimentKind::Bck => c.slope = Some(-1.0 / 3.0),
            ExperimentKind::LookaheadScalar | ExperimentKind::LookaheadPaths => c.slope = Some(-0.5),
            ExperimentKind::BoundedHorizon => c.survives = Some(true),
            ExperimentKind::TvTable => {
                c.slope = Some(-0.5);
                c.tolerance = Some(1e-3);
            }
            ExperimentKind::MuT | ExperimentKind::HyperplaneCheck => {}
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    pub sampling: SamplingSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub fit: Option<FitWindow>,
    #[serde(default)]
    pub check: Option<CheckSection>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn positive(v: Option<f64>, name: &str, errs: &mut Vec<String>) {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            errs.push(format!("{name}: must be positive and finite, got {x}"));
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("parse: {e}")]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("{}: {e}", path.display())]))?;
        Self::from_json(&text)
    }

    pub fn k(&self) -> usize {
        self.model.k.unwrap_or(1)
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.schema != SCHEMA_VERSION {
            errs.push(format!("schema: expected {SCHEMA_VERSION}, got {}", self.schema));
        }
        if self.sampling.replicates == 0 {
            errs.push("sampling.replicates: must be positive".into());
        }
        let k = self.k();
        if k > MAX_INDEX {
            errs.push(format!("model.k: {k} exceeds {MAX_INDEX}"));
        }
        let dim = k + 1;
        for (name, v) in [("model.x1", &self.model.x1), ("model.x2", &self.model.x2), ("model.z", &self.model.z)] {
            if let Some(v) = v {
                if v.len() != dim {
                    errs.push(format!("{name}: length {} but k = {k} needs {dim}", v.len()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    errs.push(format!("{name}: entries must be finite"));
                }
            }
        }
        if self.model.z.is_some() && (self.model.x1.is_some() || self.model.x2.is_some()) {
            errs.push("model: give either z or x1/x2, not both".into());
        }
        if self.model.x1.is_some() != self.model.x2.is_some() {
            errs.push("model: x1 and x2 must be given together".into());
        }
        positive(self.model.target_t, "model.target_t", &mut errs);
        positive(self.numerics.dt0, "numerics.dt0", &mut errs);
        positive(self.numerics.t_min, "numerics.t_min", &mut errs);
        positive(self.numerics.t_max, "numerics.t_max", &mut errs);
        if let (Some(a), Some(b)) = (self.numerics.t_min, self.numerics.t_max) {
            if a >= b {
                errs.push("numerics: t_min must be below t_max".into());
            }
        }
        if let Some(s) = self.model.scale {
            if s == 0.0 || !s.is_finite() {
                errs.push(format!("model.scale: must be nonzero and finite, got {s}"));
            }
        }
        if let Some(times) = &self.numerics.times {
            if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                errs.push("numerics.times: must be a nonempty list of positive times".into());
            }
        }
        if self.numerics.points_per_decade == Some(0) {
            errs.push("numerics.points_per_decade: must be positive".into());
        }
        if self.numerics.n_max == Some(0) {
            errs.push("numerics.n_max: must be positive".into());
        }
        if self.numerics.grid_per_block == Some(0) {
            errs.push("numerics.grid_per_block: must be positive".into());
        }
        if let Some(m) = self.numerics.modes {
            if m < dim {
                errs.push(format!("numerics.modes: {m} modes cannot carry {dim} orthonormal rows"));
            }
        }
        if let Some(a) = self.schedule.alpha {
            if !(a > 1.0 && a.is_finite()) {
                errs.push(format!("schedule.alpha: must exceed 1, got {a}"));
            }
        }
        let has_discrepancy = self.model.z.is_some() || self.model.x1.is_some();
        match self.kind {
            ExperimentKind::Bck => {
                if k != 1 {
                    errs.push("model.k: bck is defined for k = 1".into());
                }
            }
            ExperimentKind::MuT => {
                if k != 1 {
                    errs.push("model.k: mu_t is defined for k = 1".into());
                }
                if self.model.target_t.is_none() {
                    errs.push("model.target_t: required for mu_t".into());
                }
            }
            ExperimentKind::LookaheadScalar | ExperimentKind::BoundedHorizon | ExperimentKind::TvTable => {
                if !has_discrepancy {
                    errs.push("model.z: required (or x1 and x2)".into());
                }
                if self.kind == ExperimentKind::BoundedHorizon && k == 0 {
                    errs.push("model.k: bounded_horizon needs k >= 1".into());
                }
            }
            ExperimentKind::LookaheadPaths => {
                if self.model.x1.is_none() && self.model.z.is_none() {
                    errs.push("model.x1/x2: required for lookahead_paths (or z, with x2 = 0)".into());
                }
            }
            ExperimentKind::HyperplaneCheck => {}
        }
        if let Some(ds) = self.discrepancy_vec() {
            if ds.iter().all(|x| *x == 0.0)
                && matches!(
                    self.kind,
                    ExperimentKind::LookaheadScalar | ExperimentKind::BoundedHorizon | ExperimentKind::TvTable
                )
            {
                errs.push("model: discrepancy is zero (already coupled)".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn discrepancy_vec(&self) -> Option<Vec<f64>> {
        if let Some(z) = &self.model.z {
            return Some(z.clone());
        }
        match (&self.model.x1, &self.model.x2) {
            (Some(a), Some(b)) if a.len() == b.len() => Some(a.iter().zip(b).map(|(x, y)| x - y).collect()),
            _ => None,
        }
    }

    fn discrepancy(&self) -> StateVector {
        StateVector::new(self.discrepancy_vec().unwrap_or_default())
    }

    fn starts(&self) -> (StateVector, StateVector) {
        match (&self.model.x1, &self.model.x2) {
            (Some(a), Some(b)) => (StateVector::new(a.clone()), StateVector::new(b.clone())),
            _ => {
                let z = self.discrepancy();
                let zero = StateVector::zeros(z.len());
                (z, zero)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub config: Value,
    pub build_id: String,
    pub threads: usize,
    pub wall_time_s: f64,
    pub curve: SurvivalCurve,
    pub fit: Option<RateFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub details: Value,
}

impl Report {
    /// The curve serialized on its own; identical across thread counts.
    pub fn curve_json(&self) -> String {
        serde_json::to_string(&self.curve).expect("curve serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Evaluates the config's check section against the fit.
    pub fn check(&self, check: &CheckSection) -> std::result::Result<(), String> {
        if check.survives == Some(true) {
            let lo = self.details["ci99"][0].as_f64().unwrap_or(0.0);
            if lo <= 0.0 {
                return Err("99% interval for survival at the horizon reaches 0".into());
            }
        }
        if let Some(max) = self.details["max_relative_mismatch"].as_f64() {
            if max > 1e-9 {
                return Err(format!("density mismatch {max:e} on the hyperplane"));
            }
        }
        if check.slope.is_none() && check.max_slope.is_none() {
            return Ok(());
        }
        let fit = self
            .fit
            .as_ref()
            .ok_or_else(|| format!("no fit: {}", self.fit_error.clone().unwrap_or_default()))?;
        if let Some(target) = check.slope {
            let tol = check.tolerance.unwrap_or(0.05);
            if (fit.slope - target).abs() > tol {
                return Err(format!("slope {:.4} outside {target} +- {tol}", fit.slope));
            }
        }
        if let Some(max) = check.max_slope {
            if fit.slope > max {
                return Err(format!("slope {:.4} above {max}", fit.slope));
            }
        }
        Ok(())
    }
}

/// Runs a validated experiment on `parallelism` threads (or the default).
pub fn run_experiment(config: &ExperimentConfig, parallelism: Option<usize>) -> Result<Report> {
    config.validate()?;
    let threads = resolve_threads(parallelism)?;
    let started = Instant::now();
    let (curve, details, default_window) = match config.kind {
        ExperimentKind::Bck => run_bck(config, threads)?,
        ExperimentKind::MuT => run_mu_t(config, threads)?,
        ExperimentKind::LookaheadScalar => run_lookahead_scalar(config, threads)?,
        ExperimentKind::LookaheadPaths => run_lookahead_paths(config, threads)?,
        ExperimentKind::BoundedHorizon => run_bounded_horizon(config, threads)?,
        ExperimentKind::TvTable => run_tv_table(config)?,
        ExperimentKind::HyperplaneCheck => run_hyperplane_check(config, threads)?,
    };
    let window = config.fit.unwrap_or(default_window);
    let (fit, fit_error) = match fit_rate(&curve, window) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Report {
        schema: SCHEMA_VERSION,
        kind: config.kind,
        config: serde_json::to_value(config)?,
        build_id: BUILD_ID.to_string(),
        threads,
        wall_time_s: started.elapsed().as_secs_f64(),
        curve,
        fit,
        fit_error,
        details,
    })
}

type Outcome = (SurvivalCurve, Value, FitWindow);

fn time_grid(config: &ExperimentConfig, t_min: f64, t_max: f64) -> Vec<f64> {
    config.numerics.times.clone().unwrap_or_else(|| {
        log_grid(
            config.numerics.t_min.unwrap_or(t_min),
            t_max,
            config.numerics.points_per_decade.unwrap_or(10),
        )
    })
}

fn run_bck(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let scale = config.model.scale.unwrap_or(1.0);
    let dt0 = config.numerics.dt0.unwrap_or(1e-2);
    let t_max = config.numerics.t_max.unwrap_or(1e3);
    let outcomes = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        simulate_bck(scale, dt0, t_max, s)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let grid = time_grid(config, 1e-1 * scale * scale, t_max);
    let curve = estimate_survival(&outcomes, &grid)?;
    // ratio (S_2 - S_1) / S_1 reported for the record
    let ratios: Vec<f64> = outcomes
        .iter()
        .filter(|o| o.half_cycle_times.len() >= 2)
        .map(|o| (o.half_cycle_times[1] - o.half_cycle_times[0]) / o.half_cycle_times[0])
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied();
    let coupled = outcomes.iter().filter(|o| o.coupled).count();
    let details = json!({
        "coupled": coupled,
        "censored": outcomes.len() - coupled,
        "median_second_to_first_half_cycle": median,
    });
    Ok((curve, details, FitWindow::Times { lo: 10.0 * scale * scale, hi: t_max }))
}

fn proportion(hits: usize, n: usize) -> Value {
    let p = hits as f64 / n as f64;
    let (lo, hi) = wilson_interval(hits, n, 0.95);
    json!({"estimate": p, "stderr": (p * (1.0 - p) / n as f64).sqrt(), "ci_lo": lo, "ci_hi": hi})
}

fn run_mu_t(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let target = config.model.target_t.unwrap_or(1.0);
    let dt0 = config.numerics.dt0.unwrap_or(1e-2);
    let outcomes = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        simulate_mu_t(target, dt0, s)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n = outcomes.len();
    let mut grid = time_grid(config, target * 1e-2, 2.0 * target);
    grid.push(target + 1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let curve = estimate_survival(&outcomes, &grid)?;
    let long_stage1 = outcomes.iter().filter(|o| o.stage1_end > 1.0).count();
    let big_v = outcomes.iter().filter(|o| o.v_at_stage1_end > 2.0).count();
    let late = outcomes
        .iter()
        .filter(|o| match crate::survival::Observation::event_time(*o) {
            EventTime::Coupled(t) => t > target + 1.0,
            EventTime::Censored(_) => true,
        })
        .count();
    let p = late as f64 / n as f64;
    let details = json!({
        "target_t": target,
        "stage1_longer_than_1": proportion(long_stage1, n),
        "v_at_stage1_end_above_2": proportion(big_v, n),
        "tail_at_target_plus_1": proportion(late, n),
        "scaled_tail": target * p,
        "scaled_tail_stderr": target * (p * (1.0 - p) / n as f64).sqrt(),
    });
    Ok((curve, details, FitWindow::Auto))
}

fn block_curve(coupled: &[Option<usize>], blocks: &[usize], times: &[f64]) -> Result<SurvivalCurve> {
    let last = *times.last().unwrap_or(&0.0);
    let obs: Vec<EventTime> = coupled
        .iter()
        .map(|c| match c {
            Some(i) => EventTime::Coupled(times[*i]),
            None => EventTime::Censored(last),
        })
        .collect();
    let mut curve = estimate_survival(&obs, times)?;
    curve.blocks = Some(blocks.to_vec());
    Ok(curve)
}

fn run_lookahead_scalar(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let kernel = TransitionKernel::new(config.k())?;
    let alpha = config.schedule.alpha.unwrap_or(2.0);
    let n_max = config.numerics.n_max.unwrap_or(30);
    let plan = ScalarPlan::geometric(&kernel, &config.discrepancy(), alpha, n_max)?;
    let hits = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        plan.simulate(s)
    })?;
    let curve = block_curve(&hits, &plan.blocks, &plan.times)?;
    let exact = SurvivalCurve::exact(plan.times.clone(), plan.exact_survival());
    let exact_fit = fit_rate(&exact, config.fit.unwrap_or(FitWindow::Auto)).ok();
    let details = json!({
        "alpha": alpha,
        "g0": plan.g0,
        "exact_survival": plan.exact_survival(),
        "exact_fit": exact_fit,
    });
    Ok((curve, details, FitWindow::Auto))
}

fn run_bounded_horizon(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let kernel = TransitionKernel::new(config.k())?;
    let n_max = config.numerics.n_max.unwrap_or(10_000);
    let plan = ScalarPlan::bounded_horizon(&kernel, &config.discrepancy(), n_max)?;
    let mut checkpoints: Vec<usize> = log_grid(1.0, n_max as f64, config.numerics.points_per_decade.unwrap_or(10))
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    checkpoints.push(n_max);
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let plan = plan.coarsen(&checkpoints)?;
    let hits = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        plan.simulate(s)
    })?;
    let curve = block_curve(&hits, &plan.blocks, &plan.times)?;
    let survivors = hits.iter().filter(|h| h.is_none()).count();
    let (lo99, hi99) = wilson_interval(survivors, hits.len(), 0.99);
    let total_variance: f64 = plan.variances.iter().sum();
    let details = json!({
        "n_max": n_max,
        "survival_at_n_max": survivors as f64 / hits.len() as f64,
        "ci99": [lo99, hi99],
        "exact_survival_at_n_max": plan.exact_survival().last(),
        "total_intrinsic_variance": total_variance,
    });
    Ok((curve, details, FitWindow::Auto))
}

fn run_lookahead_paths(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let kernel = TransitionKernel::new(config.k())?;
    let modes = config.numerics.modes.unwrap_or(1024);
    let e = lookahead::build_e(&kernel, modes)?;
    let settings = PathCouplingSettings {
        alpha: config.schedule.alpha.unwrap_or(2.0),
        n_blocks: config.numerics.n_max.unwrap_or(6),
        grid_per_block: config.numerics.grid_per_block.unwrap_or(1000),
        interior_points: 0,
    };
    let (x1, x2) = config.starts();
    let runs = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        lookahead::simulate_lookahead_paths(&kernel, &x1, &x2, &e, &settings, s)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let schedule = lookahead::BlockSchedule::geometric(settings.alpha)?;
    let blocks: Vec<usize> = (1..=settings.n_blocks).collect();
    let times: Vec<f64> = blocks.iter().map(|&n| schedule.end(n)).collect();
    let hits: Vec<Option<usize>> = runs.iter().map(|r| r.coupled_block.map(|b| b - 1)).collect();
    let curve = block_curve(&hits, &blocks, &times)?;

    let tol = 10.0 / (std::f64::consts::PI.powi(2) * modes as f64);
    let mut worst: f64 = 0.0;
    for r in &runs {
        for b in r.blocks.iter().take_while(|b| b.state.coupled_at.is_none() && b.rho > 0.0) {
            let scale = 1f64.max(2.0 * b.driver_stopped.abs());
            worst = worst.max((b.f_path - b.f_scalar).abs() / scale);
        }
    }
    let mut cov = Vec::new();
    for (label, idx) in [("first_block", 1usize), ("last_block", settings.n_blocks)] {
        let t = schedule.end(idx);
        for (copy, start) in [("first", &x1), ("second", &x2)] {
            let samples: Vec<DVector<f64>> = runs
                .iter()
                .map(|r| {
                    let p = if copy == "first" { &r.first } else { &r.second };
                    p.states[idx].as_ref().clone()
                })
                .collect();
            let (mean, exact) = kernel.mean_and_covariance(start, t)?;
            let check = covariance_check(&samples, mean.as_ref(), &exact)?;
            cov.push(json!({"at": label, "time": t, "copy": copy, "check": check}));
        }
    }
    let details = json!({
        "modes": modes,
        "gram_residual": e.gram_residual(),
        "norm_tolerance": tol,
        "max_scaled_norm_error": worst,
        "covariance": cov,
    });
    Ok((curve, details, FitWindow::Auto))
}

fn run_tv_table(config: &ExperimentConfig) -> Result<Outcome> {
    let kernel = TransitionKernel::new(config.k())?;
    let z = config.discrepancy();
    let times = config.numerics.times.clone().unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
    let zero = StateVector::zeros(z.len());
    let mut values = Vec::with_capacity(times.len());
    let mut order = 0;
    for &t in &times {
        let tail = kernel.maximal_tail(&z, t)?;
        order = tail.order;
        values.push(kernel.tv_distance(&z, &zero, t)?);
    }
    let curve = SurvivalCurve::exact(times.clone(), values);
    let lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = times.iter().cloned().fold(0.0, f64::max);
    let window = FitWindow::Times { lo, hi };
    // two-point slopes between consecutive grid times
    let local: Vec<f64> = curve
        .times
        .windows(2)
        .zip(curve.estimates.windows(2))
        .map(|(t, p)| (p[1].unwrap().ln() - p[0].unwrap().ln()) / (t[1].ln() - t[0].ln()))
        .collect();
    let details = json!({
        "order": order,
        "expected_slope": -(order as f64 + 0.5),
        "local_slopes": local,
    });
    Ok((curve, details, window))
}

fn run_hyperplane_check(config: &ExperimentConfig, threads: usize) -> Result<Outcome> {
    let kernel = TransitionKernel::new(config.k())?;
    let points = config.numerics.grid_per_block.unwrap_or(10);
    let dim = kernel.dim();
    let errs = run_replicates(config.sampling.replicates, config.sampling.master_seed, Some(threads), |s| {
        hyperplane_trial(&kernel, dim, points, s)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let times: Vec<f64> = (1..=errs.len()).map(|i| i as f64).collect();
    let curve = SurvivalCurve::exact(times, errs.clone());
    let details = json!({
        "pairs": errs.len(),
        "points_per_pair": points,
        "max_relative_mismatch": worst,
    });
    Ok((curve, details, FitWindow::Auto))
}

/// Largest relative density mismatch at random points of the agreement
/// hyperplane for one random start pair.
///
/// The pair is drawn so that the whitened mean separation is a standard
/// Gaussian vector; otherwise both densities underflow on the whole
/// hyperplane for small `t`. Points are typical for the law at time `t`: a
/// draw from the midpoint Gaussian is slid along `Sigma n` onto the
/// hyperplane.
pub fn hyperplane_trial<G: GaussianSource>(
    kernel: &TransitionKernel,
    dim: usize,
    points: usize,
    s: &mut G,
) -> Result<f64> {
    let t = 0.2 + 4.8 * s.uniform();
    let xm = DVector::from_fn(dim, |_, _| s.standard_normal());
    let zeta = DVector::from_fn(dim, |_, _| s.standard_normal());
    // z = sqrt(t) D(t) H^-1 L zeta
    let hz = kernel
        .h()
        .solve_lower_triangular(&(kernel.l() * zeta))
        .ok_or_else(|| Error::InvalidArgument("singular flow matrix".into()))?;
    let z = hz.component_mul(&kernel.scaling_diagonal(t)) * t.sqrt();
    let xp = StateVector::from_vector(&xm + z);
    let xm = StateVector::from_vector(xm);
    let plane = kernel.agreement_hyperplane(&xp, &xm, t)?;
    let sigma = kernel.covariance(t);
    let chol = sigma.clone().cholesky().ok_or_else(|| Error::InvalidArgument("covariance not positive definite".into()))?;
    let sn = &sigma * &plane.normal;
    let nsn = plane.normal.dot(&sn);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let xi = DVector::from_fn(dim, |_, _| s.standard_normal());
        let w = &plane.point + chol.l() * xi;
        let w = &w - &sn * (plane.signed_distance(&w) / nsn);
        let lp = kernel.log_transition_density(xp.as_ref(), t, &w);
        let lm = kernel.log_transition_density(xm.as_ref(), t, &w);
        worst = worst.max((lp - lm).exp_m1().abs());
    }
    Ok(worst)
}
