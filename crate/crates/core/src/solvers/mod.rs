//! LASSO and Variational Garrote objectives, their gradients, and the solve
//! driver that minimizes them with [`crate::optim`].
//!
//! The garrote gates each coefficient with a Bernoulli variable whose
//! mean-field probability is `m_i = logistic(m_logit_i)`. With the noise
//! precision traced out at its optimum `β* = M / (2 E_rec)`, the objective is
//!
//! ```text
//! F(w, m) = (M/2) ln E_rec − γ Σ m_i + Σ [m_i ln m_i + (1 − m_i) ln(1 − m_i)]
//! E_rec   = ½ ‖y − Θ(w ⊙ m)‖² + ½ Σ m_i (1 − m_i) w_i² ‖Θ_i‖²
//! ```

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operators::LinearOperator;
use crate::optim::{run_loop, OptConfig, StopReason};
use crate::transforms::DctBasis;

mod l0;

pub use l0::{brute_force_l0, restricted_least_squares, L0Fit, MAX_EXHAUSTIVE_N};

/// Lower clamp applied to `E_rec` before taking its logarithm.
pub const E_REC_FLOOR: f64 = 1e-300;

/// Standard deviation of the Gaussian parameter initialization.
pub const INIT_STD: f64 = 0.01;

/// One regression instance: design Θ (as an operator) and observations y.
pub struct SparseProblem {
    theta: Arc<dyn LinearOperator>,
    y: Vec<f64>,
    /// `Θᵀy` when Θ is orthogonal; residuals then live in coefficient space.
    projected: Option<Vec<f64>>,
    col_norms: OnceLock<Vec<f64>>,
}

impl SparseProblem {
    pub fn new(theta: Arc<dyn LinearOperator>, y: Vec<f64>) -> Result<Self> {
        check_len("SparseProblem observations", theta.output_dim(), y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite".into()));
        }
        let projected = theta.is_orthogonal().then(|| {
            let mut p = vec![0.0; theta.input_dim()];
            theta.adjoint_into(&y, &mut p);
            p
        });
        Ok(Self {
            theta,
            y,
            projected,
            col_norms: OnceLock::new(),
        })
    }

    pub fn theta(&self) -> &dyn LinearOperator {
        self.theta.as_ref()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Coefficient count N.
    pub fn n(&self) -> usize {
        self.theta.input_dim()
    }

    /// Observation count M.
    pub fn m_obs(&self) -> usize {
        self.y.len()
    }

    /// `Σ_μ Θ_{iμ}²`, computed once and cached.
    pub fn column_norms_squared(&self) -> &[f64] {
        self.col_norms.get_or_init(|| self.theta.column_norms_squared())
    }

    /// `Θw − y` into `out`, or `w − Θᵀy` for orthogonal Θ. Both have the
    /// same norm, and `Θᵀ` of the first is the second.
    fn residual_into(&self, w: &[f64], out: &mut [f64]) {
        match &self.projected {
            Some(p) => {
                for ((r, wi), pi) in out.iter_mut().zip(w).zip(p) {
                    *r = wi - pi;
                }
            }
            None => {
                self.theta.apply_into(w, out);
                for (r, y) in out.iter_mut().zip(&self.y) {
                    *r -= y;
                }
            }
        }
    }

    /// `Θᵀr` for a residual produced by [`Self::residual_into`].
    fn back_project(&self, r: &[f64], out: &mut [f64]) {
        match self.projected {
            Some(_) => out.copy_from_slice(r),
            None => self.theta.adjoint_into(r, out),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub lambda: f64,
}

impl LassoParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub gamma: f64,
    /// `κ` in the data term `κ·M·ln E_rec`.
    #[serde(default = "default_data_weight")]
    pub data_weight: f64,
}

/// `κ = ½`: the noise precision maximized out of an M-sample Gaussian
/// likelihood.
pub const DEFAULT_DATA_WEIGHT: f64 = 0.5;

fn default_data_weight() -> f64 {
    DEFAULT_DATA_WEIGHT
}

impl VgParams {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_data_weight(gamma, DEFAULT_DATA_WEIGHT)
    }

    pub fn with_data_weight(gamma: f64, data_weight: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be finite, got {gamma}")));
        }
        if !(data_weight > 0.0 && data_weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "data weight must be finite and positive, got {data_weight}"
            )));
        }
        Ok(Self { gamma, data_weight })
    }

    fn data_coefficient(&self, problem: &SparseProblem) -> f64 {
        self.data_weight * problem.m_obs() as f64
    }
}

/// Garrote parameters: coefficients and unconstrained gate logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VgState {
    pub w: Vec<f64>,
    pub m_logit: Vec<f64>,
}

impl VgState {
    pub fn new(w: Vec<f64>, m_logit: Vec<f64>) -> Result<Self> {
        check_len("VgState logits", w.len(), m_logit.len())?;
        Ok(Self { w, m_logit })
    }

    /// Builds a state from gate probabilities in (0, 1).
    pub fn from_gates(w: Vec<f64>, gates: &[f64]) -> Result<Self> {
        check_len("VgState gates", w.len(), gates.len())?;
        if let Some(&m) = gates.iter().find(|&&m| !(m > 0.0 && m < 1.0)) {
            return Err(Error::InvalidArgument(format!("gate probability {m} outside (0, 1)")));
        }
        let m_logit = gates.iter().map(|&m| (m / (1.0 - m)).ln()).collect();
        Ok(Self { w, m_logit })
    }

    pub fn gates(&self) -> Vec<f64> {
        self.m_logit.iter().map(|&z| logistic(z)).collect()
    }

    /// Effective coefficients `w ⊙ m`.
    pub fn effective(&self) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.m_logit)
            .map(|(w, &z)| w * logistic(z))
            .collect()
    }
}

pub fn logistic(z: f64) -> f64 {
    GateTerms::new(z).m
}

/// Gate probability, its complement and the negative entropy for one
/// logit, sharing a single `exp` and `ln_1p`.
struct GateTerms {
    m: f64,
    one_minus_m: f64,
    /// `m ln m + (1 − m) ln(1 − m)`.
    neg_entropy: f64,
}

impl GateTerms {
    fn new(z: f64) -> Self {
        let e = (-z.abs()).exp();
        let large = 1.0 / (1.0 + e);
        let small = e * large;
        let (m, one_minus_m) = if z >= 0.0 { (large, small) } else { (small, large) };
        // ln m = −softplus(−z), ln(1 − m) = −softplus(z).
        let l = e.ln_1p();
        let neg_entropy = -(l + m * (-z).max(0.0) + one_minus_m * z.max(0.0));
        Self {
            m,
            one_minus_m,
            neg_entropy,
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `½‖y − Θw‖² + λ‖w‖₁`.
pub fn lasso_objective(problem: &SparseProblem, w: &[f64], params: &LassoParams) -> Result<f64> {
    check_len("lasso_objective", problem.n(), w.len())?;
    let mut r = vec![0.0; problem.m_obs()];
    problem.residual_into(w, &mut r);
    Ok(lasso_value(&r, w, params.lambda))
}

fn lasso_value(residual: &[f64], w: &[f64], lambda: f64) -> f64 {
    0.5 * residual.iter().map(|r| r * r).sum::<f64>() + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// `Θᵀ(Θw − y) + λ sign(w)` with `sign(0) = 0`.
pub fn lasso_gradient(problem: &SparseProblem, w: &[f64], params: &LassoParams) -> Result<Vec<f64>> {
    check_len("lasso_gradient", problem.n(), w.len())?;
    let mut r = vec![0.0; problem.m_obs()];
    let mut g = vec![0.0; problem.n()];
    lasso_eval(problem, params.lambda, w, &mut g, &mut r);
    Ok(g)
}

fn lasso_eval(problem: &SparseProblem, lambda: f64, w: &[f64], grad: &mut [f64], r: &mut [f64]) -> f64 {
    problem.residual_into(w, r);
    problem.back_project(r, grad);
    for (g, &wi) in grad.iter_mut().zip(w) {
        *g += lambda * sign(wi);
    }
    lasso_value(r, w, lambda)
}

fn check_state(problem: &SparseProblem, state: &VgState) -> Result<()> {
    check_len("VgState coefficients", problem.n(), state.w.len())?;
    check_len("VgState logits", problem.n(), state.m_logit.len())
}

/// Expected reconstruction energy under the gate distribution, including
/// the gate-variance term.
pub fn vg_e_rec(problem: &SparseProblem, state: &VgState) -> Result<f64> {
    check_state(problem, state)?;
    let mut buf = VgBuffers::new(problem);
    Ok(buf.e_rec(problem, &state.w, &state.m_logit))
}

/// Value of the traced-out garrote free energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergy {
    pub value: f64,
    pub e_rec: f64,
    /// `E_rec` fell to the floor and was clamped before the logarithm.
    pub perfect_fit: bool,
}

pub fn vg_free_energy(problem: &SparseProblem, state: &VgState, params: &VgParams) -> Result<FreeEnergy> {
    check_state(problem, state)?;
    let mut buf = VgBuffers::new(problem);
    let e_rec = buf.e_rec(problem, &state.w, &state.m_logit);
    let clamped = e_rec.max(E_REC_FLOOR);
    let value = params.data_coefficient(problem) * clamped.ln()
        + prior_and_entropy(&state.m_logit, params.gamma);
    Ok(FreeEnergy {
        value,
        e_rec,
        perfect_fit: e_rec <= E_REC_FLOOR,
    })
}

fn prior_and_entropy(m_logit: &[f64], gamma: f64) -> f64 {
    m_logit
        .iter()
        .map(|&z| {
            let g = GateTerms::new(z);
            -gamma * g.m + g.neg_entropy
        })
        .sum()
}

/// Analytic gradient of [`vg_free_energy`] with respect to `w` and `m_logit`.
pub fn vg_gradient(problem: &SparseProblem, state: &VgState, params: &VgParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_state(problem, state)?;
    let n = problem.n();
    let mut buf = VgBuffers::new(problem);
    let mut grad = vec![0.0; 2 * n];
    buf.eval(problem, params, &state.w, &state.m_logit, &mut grad);
    let gz = grad.split_off(n);
    Ok((grad, gz))
}

struct VgBuffers {
    gates: Vec<f64>,
    complements: Vec<f64>,
    neg_entropy: Vec<f64>,
    effective: Vec<f64>,
    residual: Vec<f64>,
    back: Vec<f64>,
}

impl VgBuffers {
    fn new(problem: &SparseProblem) -> Self {
        let n = problem.n();
        Self {
            gates: vec![0.0; n],
            complements: vec![0.0; n],
            neg_entropy: vec![0.0; n],
            effective: vec![0.0; n],
            residual: vec![0.0; problem.m_obs()],
            back: vec![0.0; n],
        }
    }

    /// Fills gates, effective coefficients and the residual `Θ(w⊙m) − y`;
    /// returns `E_rec`.
    fn e_rec(&mut self, problem: &SparseProblem, w: &[f64], z: &[f64]) -> f64 {
        for i in 0..w.len() {
            let g = GateTerms::new(z[i]);
            self.gates[i] = g.m;
            self.complements[i] = g.one_minus_m;
            self.neg_entropy[i] = g.neg_entropy;
            self.effective[i] = w[i] * g.m;
        }
        problem.residual_into(&self.effective, &mut self.residual);
        let c = problem.column_norms_squared();
        let fit: f64 = self.residual.iter().map(|r| r * r).sum();
        let variance: f64 = (0..w.len())
            .map(|i| self.gates[i] * self.complements[i] * w[i] * w[i] * c[i])
            .sum();
        0.5 * fit + 0.5 * variance
    }

    /// Free energy and its gradient; `grad` holds `[∂F/∂w ; ∂F/∂m_logit]`.
    fn eval(&mut self, problem: &SparseProblem, params: &VgParams, w: &[f64], z: &[f64], grad: &mut [f64]) -> f64 {
        let n = w.len();
        let gamma = params.gamma;
        let e = self.e_rec(problem, w, z);
        let data_coef = params.data_coefficient(problem);
        let (gw, gz) = grad.split_at_mut(n);
        let data_scale = if e > E_REC_FLOOR { data_coef / e } else { 0.0 };
        problem.back_project(&self.residual, &mut self.back);
        let c = problem.column_norms_squared();
        let mut value = data_coef * e.max(E_REC_FLOOR).ln();
        for i in 0..n {
            let m = self.gates[i];
            let wi = w[i];
            let spread = m * self.complements[i];
            let de_dw = m * self.back[i] + spread * wi * c[i];
            let de_dm = wi * self.back[i] + 0.5 * (1.0 - 2.0 * m) * wi * wi * c[i];
            gw[i] = data_scale * de_dw;
            // d/dm [m ln m + (1-m) ln(1-m)] = logit(m) = z.
            let df_dm = data_scale * de_dm - gamma + z[i];
            gz[i] = df_dm * spread;
            value += -gamma * m + self.neg_entropy[i];
        }
        value
    }
}

/// Which regularizer to fit, with its hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Method {
    Lasso(LassoParams),
    Vg(VgParams),
}

impl Method {
    pub fn lasso(lambda: f64) -> Result<Self> {
        Ok(Self::Lasso(LassoParams::new(lambda)?))
    }

    pub fn vg(gamma: f64) -> Result<Self> {
        Ok(Self::Vg(VgParams::new(gamma)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lasso(_) => "lasso",
            Self::Vg(_) => "vg",
        }
    }

    /// λ for LASSO, γ for VG.
    pub fn hyperparam(&self) -> f64 {
        match self {
            Self::Lasso(p) => p.lambda,
            Self::Vg(p) => p.gamma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub perfect_fit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(flatten)]
    pub method: Method,
    /// LASSO: `w`; VG: `w ⊙ m`.
    pub coeffs: Vec<f64>,
    /// VG gate probabilities `m`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gates: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn gaussian_init(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    (0..dim).map(|_| normal.sample(&mut rng)).collect()
}

/// Minimizes the chosen objective from a seeded Gaussian initialization.
pub fn solve(problem: &SparseProblem, method: &Method, cfg: &OptConfig) -> Result<Solution> {
    cfg.validate()?;
    let n = problem.n();
    match *method {
        Method::Lasso(p) => {
            let mut r = vec![0.0; problem.m_obs()];
            let outcome = run_loop(
                |w, g| lasso_eval(problem, p.lambda, w, g, &mut r),
                gaussian_init(n, cfg.seed),
                cfg,
            )?;
            abort_on_nan(&outcome.stop_reason)?;
            Ok(Solution {
                method: *method,
                coeffs: outcome.params,
                gates: None,
                diagnostics: Diagnostics {
                    initial_objective: outcome.initial_loss,
                    final_objective: outcome.final_loss,
                    iterations: outcome.iterations,
                    stop_reason: outcome.stop_reason,
                    perfect_fit: false,
                },
            })
        }
        Method::Vg(p) => {
            problem.column_norms_squared();
            let mut buf = VgBuffers::new(problem);
            let outcome = run_loop(
                |params, g| {
                    let (w, z) = params.split_at(n);
                    buf.eval(problem, &p, w, z, g)
                },
                gaussian_init(2 * n, cfg.seed),
                cfg,
            )?;
            abort_on_nan(&outcome.stop_reason)?;
            let mut params = outcome.params;
            let z = params.split_off(n);
            let state = VgState { w: params, m_logit: z };
            let e_rec = buf.e_rec(problem, &state.w, &state.m_logit);
            Ok(Solution {
                method: *method,
                coeffs: state.effective(),
                gates: Some(state.gates()),
                diagnostics: Diagnostics {
                    initial_objective: outcome.initial_loss,
                    final_objective: outcome.final_loss,
                    iterations: outcome.iterations,
                    stop_reason: outcome.stop_reason,
                    perfect_fit: e_rec <= E_REC_FLOOR,
                },
            })
        }
    }
}

fn abort_on_nan(reason: &StopReason) -> Result<()> {
    if let StopReason::NanAbort {
        iteration,
        param_norm,
    } = *reason
    {
        return Err(Error::NonFinite {
            quantity: "objective",
            iteration,
            param_norm,
            index: None,
        });
    }
    Ok(())
}

/// Basis used to map coefficients back to the signal or image domain.
#[derive(Clone, Copy, Debug)]
pub enum Basis<'a> {
    Dct(&'a DctBasis),
    /// Pixel-space coefficients are the image itself.
    Identity,
}

/// `x̂ = Ψŵ`.
pub fn reconstruct(solution: &Solution, basis: Basis<'_>) -> Result<Vec<f64>> {
    match basis {
        Basis::Dct(b) => b.synthesize(&solution.coeffs),
        Basis::Identity => Ok(solution.coeffs.clone()),
    }
}

#[cfg(test)]
mod tests;
