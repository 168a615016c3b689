//! AdamW with a reduce-on-plateau learning-rate schedule and early stopping.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            // Regularization lives in the objectives.
            weight_decay: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauParams {
    pub factor: f64,
    pub patience: usize,
    pub rel_threshold: f64,
}

impl Default for PlateauParams {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 100,
            rel_threshold: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub initial_lr: f64,
    pub lr_floor: f64,
    pub max_iters: usize,
    pub adamw: AdamWParams,
    pub plateau: PlateauParams,
    pub seed: u64,
    /// Realizations averaged per loss evaluation (see [`batch_mean`]).
    pub batch: usize,
    /// Keep a per-iteration `(iteration, loss, lr)` trace.
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.3,
            lr_floor: 1e-5,
            max_iters: 50_000,
            adamw: AdamWParams::default(),
            plateau: PlateauParams::default(),
            seed: 0,
            batch: 1,
            record_trace: false,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(self.lr_floor > 0.0 && self.lr_floor < self.initial_lr) {
            return bad("need 0 < lr_floor < initial_lr");
        }
        if !(self.plateau.factor > 0.0 && self.plateau.factor < 1.0) {
            return bad("plateau factor must lie in (0, 1)");
        }
        if self.plateau.patience == 0 {
            return bad("plateau patience must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if !(0.0..1.0).contains(&self.adamw.beta1) || !(0.0..1.0).contains(&self.adamw.beta2) {
            return bad("AdamW betas must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: usize,
    pub current_lr: f64,
    pub best_loss: f64,
    pub plateau_counter: usize,
}

impl OptimizerState {
    pub fn new(dim: usize, cfg: &OptConfig) -> Self {
        Self {
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
            current_lr: cfg.initial_lr,
            best_loss: f64::INFINITY,
            plateau_counter: 0,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One bias-corrected AdamW update with decoupled weight decay.
pub fn adamw_step(
    params: &mut [f64],
    grad: &[f64],
    state: &mut OptimizerState,
    cfg: &OptConfig,
) -> Result<()> {
    check_len("adamw_step gradient", params.len(), grad.len())?;
    check_len("adamw_step state", params.len(), state.first_moment.len())?;
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            quantity: "gradient",
            iteration: state.step_count,
            param_norm: norm(params),
            index: Some(i),
        });
    }
    let AdamWParams {
        beta1,
        beta2,
        eps,
        weight_decay,
    } = cfg.adamw;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let lr = state.current_lr;
    let decay = 1.0 - lr * weight_decay;
    let step = lr / bc1;
    let inv_bc2 = 1.0 / bc2;
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grad)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p = *p * decay - step * *m / ((*v * inv_bc2).sqrt() + eps);
    }
    Ok(())
}

/// Feeds one loss value to the plateau scheduler. Returns `true` when the
/// learning rate was reduced.
///
/// A loss counts as an improvement when it beats the best so far by more
/// than `rel_threshold · |best|`.
pub fn plateau_step(loss: f64, state: &mut OptimizerState, cfg: &OptConfig) -> bool {
    let p = &cfg.plateau;
    let improved = if state.best_loss.is_finite() {
        loss < state.best_loss - p.rel_threshold * state.best_loss.abs()
    } else {
        loss < state.best_loss
    };
    if improved {
        state.best_loss = loss;
        state.plateau_counter = 0;
        return false;
    }
    state.plateau_counter += 1;
    if state.plateau_counter > p.patience {
        state.current_lr *= p.factor;
        state.plateau_counter = 0;
        return true;
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StopReason {
    LrFloor,
    MaxIters,
    NanAbort { iteration: usize, param_norm: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub params: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub initial_loss: f64,
    /// Loss at the returned parameters.
    pub final_loss: f64,
    pub final_lr: f64,
    pub trace: Vec<TraceRow>,
}

/// Minimizes `objective` from `init`. The callable writes the gradient into
/// its second argument and returns the loss.
///
/// Each iteration evaluates the loss, takes one AdamW step, then updates the
/// plateau scheduler with that loss. The loop stops once the learning rate
/// falls below `lr_floor` or after `max_iters` steps. A non-finite loss or
/// gradient stops with [`StopReason::NanAbort`] and returns the last
/// parameters whose loss was finite.
pub fn run_loop<F>(mut objective: F, init: Vec<f64>, cfg: &OptConfig) -> Result<RunOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    let dim = init.len();
    let mut params = init;
    let mut last_finite = params.clone();
    let mut grad = vec![0.0; dim];
    let mut state = OptimizerState::new(dim, cfg);
    let mut trace = Vec::new();
    let mut initial_loss = f64::NAN;
    let mut last_loss = f64::NAN;

    let stop_reason = loop {
        let loss = objective(&params, &mut grad);
        let iteration = state.step_count;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let param_norm = norm(&params);
            params.copy_from_slice(&last_finite);
            break StopReason::NanAbort {
                iteration,
                param_norm,
            };
        }
        if iteration == 0 {
            initial_loss = loss;
        }
        last_loss = loss;
        if cfg.record_trace {
            trace.push(TraceRow {
                iteration,
                loss,
                lr: state.current_lr,
            });
        }
        last_finite.copy_from_slice(&params);
        adamw_step(&mut params, &grad, &mut state, cfg)?;
        plateau_step(loss, &mut state, cfg);
        if state.current_lr < cfg.lr_floor {
            break StopReason::LrFloor;
        }
        if state.step_count >= cfg.max_iters {
            break StopReason::MaxIters;
        }
    };

    let final_loss = match stop_reason {
        StopReason::NanAbort { .. } => last_loss,
        _ => {
            let l = objective(&params, &mut grad);
            if l.is_finite() {
                l
            } else {
                params.copy_from_slice(&last_finite);
                last_loss
            }
        }
    };

    Ok(RunOutcome {
        params,
        iterations: state.step_count,
        stop_reason,
        initial_loss,
        final_loss,
        final_lr: state.current_lr,
        trace,
    })
}

/// Combines per-realization objectives sharing one parameter vector into
/// their arithmetic mean (loss and gradient), summed in a fixed order.
pub fn batch_mean<'a, F>(parts: &'a [F]) -> impl FnMut(&[f64], &mut [f64]) -> f64 + 'a
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let mut scratch = Vec::new();
    move |params, grad| {
        scratch.resize(grad.len(), 0.0);
        grad.fill(0.0);
        let mut loss = 0.0;
        for part in parts {
            loss += part(params, &mut scratch);
            for (g, s) in grad.iter_mut().zip(&scratch) {
                *g += s;
            }
        }
        let inv = 1.0 / parts.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        loss * inv
    }
}

pub fn write_trace_csv(trace: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration,loss,lr")?;
    for row in trace {
        writeln!(w, "{},{:e},{:e}", row.iteration, row.loss, row.lr)?;
    }
    w.flush()?;
    Ok(())
}
