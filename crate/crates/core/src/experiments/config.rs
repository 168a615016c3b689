use serde::{Deserialize, Serialize};

use super::MethodKind;
use crate::error::{Error, Result};
use crate::optim::OptConfig;

/// `n` points from `lo` to `hi` inclusive, evenly spaced in log10.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.log10(), hi.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Experiment size preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Reduced trial counts and image size; runs in minutes.
    Desk,
    /// The full published protocol.
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            other => Err(Error::InvalidArgument(format!("unknown scale '{other}' (expected desk or paper)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub lasso: Vec<f64>,
    pub vg: Vec<f64>,
}

impl Grids {
    /// 20 log-spaced λ in [5e-4, 5] and 20 linear γ in [−15, −1].
    pub fn sound() -> Self {
        Self {
            lasso: logspace(5e-4, 5.0, 20),
            vg: linspace(-15.0, -1.0, 20),
        }
    }

    /// `n` log-spaced λ in [10, 1e3] and `n` linear γ in [−10, 0].
    pub fn ct(n: usize) -> Self {
        Self {
            lasso: logspace(10.0, 1e3, n),
            vg: linspace(-10.0, 0.0, n),
        }
    }

    /// The same ranges resampled to `n` points each (λ log-spaced, γ linear).
    pub fn resized(&self, n: usize) -> Self {
        let ends = |g: &[f64]| (g.first().copied().unwrap_or(0.0), g.last().copied().unwrap_or(0.0));
        let (l0, l1) = ends(&self.lasso);
        let (v0, v1) = ends(&self.vg);
        Self {
            lasso: if l0 > 0.0 { logspace(l0, l1, n) } else { linspace(l0, l1, n) },
            vg: linspace(v0, v1, n),
        }
    }

    pub fn for_method(&self, method: MethodKind) -> &[f64] {
        match method {
            MethodKind::Lasso => &self.lasso,
            MethodKind::Vg => &self.vg,
        }
    }

    fn validate(&self, methods: &[MethodKind]) -> Result<()> {
        for &m in methods {
            let g = self.for_method(m);
            if g.is_empty() {
                return Err(Error::InvalidArgument(format!("{} grid is empty", m.name())));
            }
            if m == MethodKind::Lasso && g.iter().any(|&l| !(l >= 0.0)) {
                return Err(Error::InvalidArgument("lasso grid values must be nonnegative".into()));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{} grid values must be finite", m.name())));
            }
        }
        Ok(())
    }
}

fn validate_common(trials: usize, methods: &[MethodKind], grids: &Grids, opt: &OptConfig) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument("at least one method is required".into()));
    }
    grids.validate(methods)?;
    opt.validate()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResamplingConfig {
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<MethodKind>,
    pub grids: Grids,
    pub opt: OptConfig,
    pub base_seed: u64,
}

impl ResamplingConfig {
    /// R ∈ {0.05, 0.10, …, 0.50}; 10 masks (desk) or 100 (paper).
    pub fn preset(scale: Scale) -> Self {
        Self {
            ratios: (1..=10).map(|k| k as f64 / 20.0).collect(),
            trials: match scale {
                Scale::Desk => 10,
                Scale::Paper => 100,
            },
            methods: MethodKind::ALL.to_vec(),
            grids: Grids::sound(),
            opt: OptConfig::default(),
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::InvalidArgument("at least one sampling ratio is required".into()));
        }
        if let Some(r) = self.ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "sampling ratio {r} must lie in (0, 1) so that some samples are held out"
            )));
        }
        validate_common(self.trials, &self.methods, &self.grids, &self.opt)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoisingConfig {
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<MethodKind>,
    pub grids: Grids,
    pub opt: OptConfig,
    pub base_seed: u64,
}

impl DenoisingConfig {
    /// 10 log-spaced α in [1e-2, 1]; 10 noise draws (desk) or 50 (paper).
    pub fn preset(scale: Scale) -> Self {
        Self {
            alphas: logspace(1e-2, 1.0, 10),
            trials: match scale {
                Scale::Desk => 10,
                Scale::Paper => 50,
            },
            methods: MethodKind::ALL.to_vec(),
            grids: Grids::sound(),
            opt: OptConfig::default(),
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::InvalidArgument("at least one noise amplitude is required".into()));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!("noise amplitude {a} must be nonnegative")));
        }
        validate_common(self.trials, &self.methods, &self.grids, &self.opt)
    }
}

/// Iteration cap of the desk CT preset; LASSO MSE changes by under 2%
/// between 1000 iterations and convergence at 128 px.
pub const DESK_CT_MAX_ITERS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtConfig {
    pub image_size: usize,
    pub detector_count: usize,
    pub angle_counts: Vec<usize>,
    pub trials: usize,
    pub methods: Vec<MethodKind>,
    pub grids: Grids,
    pub opt: OptConfig,
    pub base_seed: u64,
}

impl CtConfig {
    /// Paper: 512 px, K ∈ {10, 20, …, 120}, 10 trials, 20-point grids with
    /// λ in [10, 1e3]. Desk: 128 px, K ∈ {20, 40, 80}, 5 trials, 5-point
    /// grids with λ in [0.05, 5] (the λ scale follows the image size) and a
    /// 2000-iteration cap. Detectors always match the image side.
    pub fn preset(scale: Scale) -> Self {
        let base = Self {
            image_size: 512,
            detector_count: 512,
            angle_counts: (1..=12).map(|k| 10 * k).collect(),
            trials: 10,
            methods: MethodKind::ALL.to_vec(),
            grids: Grids::ct(20),
            opt: OptConfig::default(),
            base_seed: 0,
        };
        match scale {
            Scale::Paper => base,
            Scale::Desk => Self {
                image_size: 128,
                detector_count: 128,
                angle_counts: vec![20, 40, 80],
                trials: 5,
                grids: Grids {
                    lasso: logspace(0.05, 5.0, 5),
                    vg: linspace(-10.0, 0.0, 5),
                },
                opt: OptConfig {
                    max_iters: DESK_CT_MAX_ITERS,
                    ..OptConfig::default()
                },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size < 16 {
            return Err(Error::InvalidArgument("CT image size must be at least 16".into()));
        }
        if self.detector_count == 0 {
            return Err(Error::InvalidArgument("detector count must be positive".into()));
        }
        if self.angle_counts.is_empty() || self.angle_counts.contains(&0) {
            return Err(Error::InvalidArgument("angle counts must be a non-empty list of positive integers".into()));
        }
        validate_common(self.trials, &self.methods, &self.grids, &self.opt)
    }
}
