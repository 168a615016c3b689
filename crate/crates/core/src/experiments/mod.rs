//! Benchmark engine: error metrics, single trials for the resampling,
//! denoising and CT tasks, parallel hyperparameter sweeps, and
//! minimum-generalization-error extraction.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{add_noise, sample_mask, NoiseSpec};
use crate::error::{check_len, Error, Result};
use crate::operators::{compose, make_identity_operator, make_subsample_operator, MaskSpec};
use crate::optim::{OptConfig, StopReason};
use crate::solvers::{solve, Method, SparseProblem};
use crate::transforms::DctBasis;

mod config;
pub mod ct;
pub mod report;

pub use config::{linspace, logspace, CtConfig, DenoisingConfig, Grids, ResamplingConfig, Scale};
pub use ct::{
    ct_gallery, ct_trial, fov_mse, run_ct_experiment, CtGridPoint, CtMethod, CtReport, CtResult, CtSetup, CtTrial, Gallery,
};

/// `‖target − estimate‖₂ / ‖target‖₂`.
pub fn rel_error(target: &[f64], estimate: &[f64]) -> Result<f64> {
    check_len("rel_error estimate", target.len(), estimate.len())?;
    let norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let diff = target
        .iter()
        .zip(estimate)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// Errors and solver diagnostics of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialErrors {
    pub e_train: f64,
    pub e_gen: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
}

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

/// Fits the observed samples of `signal` in the DCT domain and scores the
/// reconstruction on observed (train) and missing (generalization) indices.
pub fn resampling_trial(signal: &[f64], mask: &MaskSpec, method: &Method, cfg: &OptConfig) -> Result<TrialErrors> {
    check_len("resampling_trial mask", signal.len(), mask.len())?;
    let missing = mask.missing();
    if missing.is_empty() {
        return Err(Error::InvalidArgument(
            "sampling ratio R = 1 leaves no missing samples to score generalization on".into(),
        ));
    }
    let basis = DctBasis::new(signal.len())?;
    let theta = compose(Arc::new(make_subsample_operator(mask.clone())?), &basis)?;
    let observed = mask.observed();
    let problem = SparseProblem::new(Arc::new(theta), gather(signal, observed))?;
    let solution = solve(&problem, method, cfg)?;
    let estimate = basis.synthesize(&solution.coeffs)?;
    Ok(TrialErrors {
        e_train: rel_error(&gather(signal, observed), &gather(&estimate, observed))?,
        e_gen: rel_error(&gather(signal, &missing), &gather(&estimate, &missing))?,
        iterations: solution.diagnostics.iterations,
        stop_reason: solution.diagnostics.stop_reason,
    })
}

/// Fits a noisy copy of `clean` in the DCT domain; train error is measured
/// against the noisy observation, generalization error against `clean`.
pub fn denoising_trial(clean: &[f64], noise: &NoiseSpec, method: &Method, cfg: &OptConfig) -> Result<TrialErrors> {
    let n = clean.len();
    let basis = DctBasis::new(n)?;
    let theta = compose(Arc::new(make_identity_operator(n)?), &basis)?;
    let noisy = add_noise(clean, noise);
    let problem = SparseProblem::new(Arc::new(theta), noisy.clone())?;
    let solution = solve(&problem, method, cfg)?;
    let estimate = basis.synthesize(&solution.coeffs)?;
    Ok(TrialErrors {
        e_train: rel_error(&noisy, &estimate)?,
        e_gen: rel_error(clean, &estimate)?,
        iterations: solution.diagnostics.iterations,
        stop_reason: solution.diagnostics.stop_reason,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Lasso,
    Vg,
}

impl MethodKind {
    pub const ALL: [MethodKind; 2] = [MethodKind::Lasso, MethodKind::Vg];

    pub fn with_hyperparam(self, value: f64) -> Result<Method> {
        match self {
            Self::Lasso => Method::lasso(value),
            Self::Vg => Method::vg(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::Vg => "vg",
        }
    }

    /// Whether hyperparameter `a` regularizes more strongly than `b`
    /// (larger λ, more negative γ).
    pub fn stronger(self, a: f64, b: f64) -> bool {
        match self {
            Self::Lasso => a > b,
            Self::Vg => a < b,
        }
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lasso" => Ok(Self::Lasso),
            "vg" => Ok(Self::Vg),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}' (expected lasso or vg)"))),
        }
    }
}

/// The information bottleneck of a sound task.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "task")]
pub enum SoundTask {
    Resampling { ratio: f64 },
    Denoising { alpha: f64 },
}

impl SoundTask {
    pub fn bottleneck(&self) -> f64 {
        match *self {
            Self::Resampling { ratio } => ratio,
            Self::Denoising { alpha } => alpha,
        }
    }

    /// Runs realization `seed` of this task.
    pub fn trial(&self, signal: &[f64], method: &Method, cfg: &OptConfig, seed: u64) -> Result<TrialErrors> {
        match *self {
            Self::Resampling { ratio } => {
                let mask = sample_mask(signal.len(), ratio, seed)?;
                resampling_trial(signal, &mask, method, cfg)
            }
            Self::Denoising { alpha } => denoising_trial(signal, &NoiseSpec::new(alpha, seed)?, method, cfg),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub hyperparam: f64,
    pub e_train: f64,
    pub e_gen: f64,
    pub e_train_std: f64,
    pub e_gen_std: f64,
    pub mean_iterations: f64,
    /// Trials that hit the iteration cap instead of the learning-rate floor.
    pub max_iter_stops: usize,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: MethodKind,
    pub task: SoundTask,
    pub trials: usize,
    /// Ordered by increasing hyperparameter.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn bottleneck(&self) -> f64 {
        self.task.bottleneck()
    }
}

/// Sample mean and (n − 1)-normalized standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of realization `trial`: shared across grid points so curves differ
/// only through the hyperparameter.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

fn aggregate(hyperparam: f64, outcomes: &[Result<TrialErrors>]) -> SweepPoint {
    if let Some(Err(e)) = outcomes.iter().find(|o| o.is_err()) {
        return SweepPoint {
            hyperparam,
            e_train: f64::NAN,
            e_gen: f64::NAN,
            e_train_std: f64::NAN,
            e_gen_std: f64::NAN,
            mean_iterations: f64::NAN,
            max_iter_stops: 0,
            valid: false,
            error: Some(e.to_string()),
        };
    }
    let ok: Vec<&TrialErrors> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let (e_train, e_train_std) = mean_std(&ok.iter().map(|t| t.e_train).collect::<Vec<_>>());
    let (e_gen, e_gen_std) = mean_std(&ok.iter().map(|t| t.e_gen).collect::<Vec<_>>());
    SweepPoint {
        hyperparam,
        e_train,
        e_gen,
        e_train_std,
        e_gen_std,
        mean_iterations: ok.iter().map(|t| t.iterations as f64).sum::<f64>() / ok.len() as f64,
        max_iter_stops: ok.iter().filter(|t| t.stop_reason == StopReason::MaxIters).count(),
        valid: true,
        error: None,
    }
}

fn sorted_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::Empty("hyperparameter grid"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("hyperparameter grid must be finite".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    Ok(g)
}

/// Averages every grid value over `trials` realizations. Work items are
/// independent and evaluated in parallel; results are keyed by
/// (grid index, trial) so the output does not depend on scheduling.
/// A failing trial marks its grid point invalid without aborting the sweep.
pub fn sweep(
    signal: &[f64],
    task: &SoundTask,
    method: MethodKind,
    grid: &[f64],
    trials: usize,
    base_seed: u64,
    opt: &OptConfig,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let grid = sorted_grid(grid)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|j| (0..trials).map(move |r| (j, r)))
        .collect();
    let outcomes: Vec<Result<TrialErrors>> = jobs
        .par_iter()
        .map(|&(j, r)| {
            let seed = trial_seed(base_seed, r);
            let method = method.with_hyperparam(grid[j])?;
            task.trial(signal, &method, &opt.clone().with_seed(seed), seed)
        })
        .collect();
    let points = grid
        .iter()
        .enumerate()
        .map(|(j, &h)| aggregate(h, &outcomes[j * trials..(j + 1) * trials]))
        .collect();
    Ok(SweepResult {
        method,
        task: *task,
        trials,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mge {
    pub e_gen: f64,
    pub hyperparam: f64,
}

/// Minimum generalization error over the valid points; ties go to the
/// stronger regularization.
pub fn mge(result: &SweepResult) -> Result<Mge> {
    let mut best: Option<Mge> = None;
    for p in result.points.iter().filter(|p| p.valid) {
        let better = match best {
            None => true,
            Some(b) => p.e_gen < b.e_gen || (p.e_gen == b.e_gen && result.method.stronger(p.hyperparam, b.hyperparam)),
        };
        if better {
            best = Some(Mge {
                e_gen: p.e_gen,
                hyperparam: p.hyperparam,
            });
        }
    }
    best.ok_or(Error::NoValidPoints)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("spearman", x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::InvalidArgument("spearman needs at least two points".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_std(&rx);
    let (my, _) = mean_std(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(cov / (vx * vy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgeRow {
    pub method: MethodKind,
    pub bottleneck: f64,
    pub mge: f64,
    pub argmin: f64,
}

/// Sweeps and MGE table of one sound experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundReport {
    pub experiment: String,
    pub sweeps: Vec<SweepResult>,
    pub mge: Vec<MgeRow>,
}

fn run_sound(
    name: &str,
    signal: &[f64],
    tasks: &[SoundTask],
    methods: &[MethodKind],
    grids: &Grids,
    trials: usize,
    base_seed: u64,
    opt: &OptConfig,
) -> Result<SoundReport> {
    let mut sweeps = Vec::new();
    let mut rows = Vec::new();
    for task in tasks {
        for &method in methods {
            let result = sweep(signal, task, method, grids.for_method(method), trials, base_seed, opt)?;
            let best = mge(&result)?;
            rows.push(MgeRow {
                method,
                bottleneck: task.bottleneck(),
                mge: best.e_gen,
                argmin: best.hyperparam,
            });
            sweeps.push(result);
        }
    }
    Ok(SoundReport {
        experiment: name.to_string(),
        sweeps,
        mge: rows,
    })
}

/// Sweeps every (R, method) pair of the resampling task.
pub fn run_resampling_experiment(signal: &[f64], cfg: &ResamplingConfig) -> Result<SoundReport> {
    cfg.validate()?;
    let tasks: Vec<SoundTask> = cfg.ratios.iter().map(|&ratio| SoundTask::Resampling { ratio }).collect();
    run_sound("resample", signal, &tasks, &cfg.methods, &cfg.grids, cfg.trials, cfg.base_seed, &cfg.opt)
}

/// Sweeps every (α, method) pair of the denoising task.
pub fn run_denoising_experiment(clean: &[f64], cfg: &DenoisingConfig) -> Result<SoundReport> {
    cfg.validate()?;
    let tasks: Vec<SoundTask> = cfg.alphas.iter().map(|&alpha| SoundTask::Denoising { alpha }).collect();
    run_sound("denoise", clean, &tasks, &cfg.methods, &cfg.grids, cfg.trials, cfg.base_seed, &cfg.opt)
}
