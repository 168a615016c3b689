use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, trial_seed, CtConfig, MethodKind};
use crate::data::circular_fov;
use crate::error::{check_len, Error, Result};
use crate::operators::{fbp_reconstruct, CtGeometry, LinearOperator, RadonOperator, Sinogram};
use crate::optim::OptConfig;
use crate::raster::Image;
use crate::solvers::{solve, Diagnostics, Method, SparseProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CtMethod {
    Fbp,
    Lasso,
    Vg,
}

impl CtMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fbp => "fbp",
            Self::Lasso => "lasso",
            Self::Vg => "vg",
        }
    }
}

impl From<MethodKind> for CtMethod {
    fn from(m: MethodKind) -> Self {
        match m {
            MethodKind::Lasso => Self::Lasso,
            MethodKind::Vg => Self::Vg,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CtTrial {
    pub mse: f64,
    pub reconstruction: Image,
    pub diagnostics: Option<Diagnostics>,
}

/// Mean squared error over the pixels of the circular field of view.
pub fn fov_mse(truth: &Image, estimate: &Image) -> Result<f64> {
    check_len("fov_mse estimate size", truth.size(), estimate.size())?;
    let fov = circular_fov(truth.size());
    let (sum, count) = truth
        .pixels()
        .iter()
        .zip(estimate.pixels())
        .zip(fov.pixels())
        .filter(|(_, &m)| m != 0.0)
        .fold((0.0, 0usize), |(s, c), ((a, b), _)| (s + (a - b) * (a - b), c + 1));
    Ok(sum / count as f64)
}

/// Ground truth, its sinogram and the pixel-space regression problem for
/// one angle count.
pub struct CtSetup {
    truth: Image,
    geom: CtGeometry,
    sinogram: Sinogram,
    problem: SparseProblem,
    fov: Image,
}

impl CtSetup {
    pub fn new(image: &Image, geom: CtGeometry) -> Result<Self> {
        check_len("CT image size", geom.image_size, image.size())?;
        let fov = circular_fov(image.size());
        let mut truth = image.clone();
        truth.apply_mask(&fov);
        let op = Arc::new(RadonOperator::new(geom));
        let data = op.apply(truth.pixels())?;
        let sinogram = Sinogram::new(geom.num_angles, geom.detector_count, data.clone())?;
        let problem = SparseProblem::new(op, data)?;
        Ok(Self {
            truth,
            geom,
            sinogram,
            problem,
            fov,
        })
    }

    pub fn truth(&self) -> &Image {
        &self.truth
    }

    pub fn sinogram(&self) -> &Sinogram {
        &self.sinogram
    }

    pub fn fbp(&self) -> Result<CtTrial> {
        let recon = fbp_reconstruct(&self.sinogram, &self.geom)?;
        Ok(CtTrial {
            mse: fov_mse(&self.truth, &recon)?,
            reconstruction: recon,
            diagnostics: None,
        })
    }

    pub fn solve(&self, method: &Method, cfg: &OptConfig) -> Result<CtTrial> {
        let solution = solve(&self.problem, method, cfg)?;
        let mut recon = Image::new(self.truth.size(), solution.coeffs)?;
        recon.apply_mask(&self.fov);
        Ok(CtTrial {
            mse: fov_mse(&self.truth, &recon)?,
            reconstruction: recon,
            diagnostics: Some(solution.diagnostics),
        })
    }

    pub fn run(&self, method: CtMethod, hyperparam: Option<f64>, cfg: &OptConfig) -> Result<CtTrial> {
        let need = || {
            hyperparam.ok_or_else(|| Error::InvalidArgument(format!("{} needs a hyperparameter", method.name())))
        };
        match method {
            CtMethod::Fbp => self.fbp(),
            CtMethod::Lasso => self.solve(&Method::lasso(need()?)?, cfg),
            CtMethod::Vg => self.solve(&Method::vg(need()?)?, cfg),
        }
    }
}

/// Simulates the sinogram of `image` and scores one reconstruction by
/// in-FOV MSE. `hyperparam` is λ or γ and is ignored for FBP.
pub fn ct_trial(
    image: &Image,
    geom: &CtGeometry,
    method: CtMethod,
    hyperparam: Option<f64>,
    cfg: &OptConfig,
) -> Result<CtTrial> {
    CtSetup::new(image, *geom)?.run(method, hyperparam, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtGridPoint {
    pub method: CtMethod,
    pub k: usize,
    pub hyperparam: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtResult {
    pub method: CtMethod,
    pub k: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub best_hyperparam: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtReport {
    /// Best-hyperparameter summary, one row per (K, method).
    pub results: Vec<CtResult>,
    /// Every (K, method, hyperparameter) grid point.
    pub grid: Vec<CtGridPoint>,
    /// Hyperparameters are selected and reported on the same trials.
    pub selection: String,
}

impl CtReport {
    pub fn result(&self, method: CtMethod, k: usize) -> Option<&CtResult> {
        self.results.iter().find(|r| r.method == method && r.k == k)
    }
}

fn best_point(method: MethodKind, points: &[CtGridPoint]) -> Option<&CtGridPoint> {
    points.iter().filter(|p| p.valid).fold(None, |best: Option<&CtGridPoint>, p| match best {
        Some(b) if b.mse_mean < p.mse_mean => Some(b),
        Some(b) if b.mse_mean == p.mse_mean && !method.stronger(p.hyperparam, b.hyperparam) => Some(b),
        _ => Some(p),
    })
}

/// For every K: FBP once (it has no randomness), then each solver over its
/// grid and trials, keeping the hyperparameter with the lowest mean MSE.
pub fn run_ct_experiment(image: &Image, cfg: &CtConfig) -> Result<CtReport> {
    cfg.validate()?;
    check_len("CT image size", cfg.image_size, image.size())?;
    let mut results = Vec::new();
    let mut grid_rows = Vec::new();
    for &k in &cfg.angle_counts {
        let geom = CtGeometry::with_detectors(cfg.image_size, cfg.detector_count, k)?;
        let setup = CtSetup::new(image, geom)?;
        let fbp = setup.fbp()?;
        results.push(CtResult {
            method: CtMethod::Fbp,
            k,
            mse_mean: fbp.mse,
            mse_std: 0.0,
            best_hyperparam: None,
        });
        for &method in &cfg.methods {
            let grid = {
                let mut g = cfg.grids.for_method(method).to_vec();
                g.sort_by(f64::total_cmp);
                g
            };
            let jobs: Vec<(usize, usize)> = (0..grid.len())
                .flat_map(|j| (0..cfg.trials).map(move |r| (j, r)))
                .collect();
            let outcomes: Vec<Result<f64>> = jobs
                .par_iter()
                .map(|&(j, r)| {
                    let m = method.with_hyperparam(grid[j])?;
                    let opt = cfg.opt.clone().with_seed(trial_seed(cfg.base_seed, r));
                    Ok(setup.solve(&m, &opt)?.mse)
                })
                .collect();
            let points: Vec<CtGridPoint> = grid
                .iter()
                .enumerate()
                .map(|(j, &h)| {
                    let chunk = &outcomes[j * cfg.trials..(j + 1) * cfg.trials];
                    match chunk.iter().find_map(|o| o.as_ref().err()) {
                        Some(e) => CtGridPoint {
                            method: method.into(),
                            k,
                            hyperparam: h,
                            mse_mean: f64::NAN,
                            mse_std: f64::NAN,
                            valid: false,
                            error: Some(e.to_string()),
                        },
                        None => {
                            let values: Vec<f64> = chunk.iter().map(|o| *o.as_ref().unwrap()).collect();
                            let (mse_mean, mse_std) = mean_std(&values);
                            CtGridPoint {
                                method: method.into(),
                                k,
                                hyperparam: h,
                                mse_mean,
                                mse_std,
                                valid: true,
                                error: None,
                            }
                        }
                    }
                })
                .collect();
            let best = best_point(method, &points).ok_or(Error::NoValidPoints)?;
            results.push(CtResult {
                method: method.into(),
                k,
                mse_mean: best.mse_mean,
                mse_std: best.mse_std,
                best_hyperparam: Some(best.hyperparam),
            });
            grid_rows.extend(points);
        }
    }
    Ok(CtReport {
        results,
        grid: grid_rows,
        selection: "hyperparameters selected and reported on the same trials".into(),
    })
}

/// Reconstructions shown side by side for one angle count.
pub struct Gallery {
    pub truth: Image,
    pub sinogram: Sinogram,
    pub fbp: Image,
    pub lasso: Image,
    pub vg: Image,
}

/// Reconstructs `image` from `k` angles with FBP and both solvers at the
/// given hyperparameters (first trial seed).
pub fn ct_gallery(image: &Image, cfg: &CtConfig, k: usize, lambda: f64, gamma: f64) -> Result<Gallery> {
    let geom = CtGeometry::with_detectors(cfg.image_size, cfg.detector_count, k)?;
    let setup = CtSetup::new(image, geom)?;
    let opt = cfg.opt.clone().with_seed(trial_seed(cfg.base_seed, 0));
    let fbp = setup.fbp()?.reconstruction;
    let lasso = setup.solve(&Method::lasso(lambda)?, &opt)?.reconstruction;
    let vg = setup.solve(&Method::vg(gamma)?, &opt)?.reconstruction;
    Ok(Gallery {
        truth: setup.truth.clone(),
        sinogram: setup.sinogram.clone(),
        fbp,
        lasso,
        vg,
    })
}
