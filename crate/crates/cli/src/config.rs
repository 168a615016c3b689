//! Command-line arguments and their resolution into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use garrote::experiments::{CtConfig, DenoisingConfig, Grids, MethodKind, ResamplingConfig, Scale};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "garrote", version, about = "Sparse-regularization benchmarks: LASSO vs Variational Garrote")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an experiment and write CSV, JSON and SVG results.
    Run(RunArgs),
    /// Print the resolved configuration as JSON.
    PrintConfig(RunArgs),
    /// Re-draw the SVG plots from the CSV files of an earlier run.
    Plot(PlotArgs),
    /// Write the CT reconstruction gallery for one angle count.
    Gallery(GalleryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Resample,
    Denoise,
    Ct,
    All,
}

impl Experiment {
    fn includes(self, other: Experiment) -> bool {
        self == other || self == Experiment::All
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    pub experiment: Experiment,
    /// synthetic | wav:<path> | shepp-logan | image:<path>; repeat to give
    /// both a signal and an image for `all`.
    #[arg(long = "dataset")]
    pub datasets: Vec<String>,
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: ScaleArg,
    #[arg(long, env = "GARROTE_OUTPUT_DIR", default_value = "results")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<MethodArg>>,
    /// Sampling ratios R (resample).
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Noise amplitudes α (denoise).
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    /// Projection angle counts K (ct).
    #[arg(long, value_delimiter = ',')]
    pub angles: Option<Vec<usize>>,
    /// CT image side length in pixels.
    #[arg(long)]
    pub image_size: Option<usize>,
    /// CT detector count (defaults to the image size).
    #[arg(long)]
    pub detectors: Option<usize>,
    /// Resample the CT grids to this many points per method, keeping their ranges.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lasso_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vg_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub initial_lr: Option<f64>,
    #[arg(long)]
    pub lr_floor: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Start of the WAV segment in seconds.
    #[arg(long, default_value_t = 0.0)]
    pub wav_start: f64,
    /// Also write the CT reconstruction gallery.
    #[arg(long)]
    pub gallery: bool,
    #[arg(long, default_value_t = 40)]
    pub gallery_k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lasso,
    Vg,
}

impl From<MethodArg> for MethodKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lasso => MethodKind::Lasso,
            MethodArg::Vg => MethodKind::Vg,
        }
    }
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Directory holding the CSV files of a run.
    #[arg(long, env = "GARROTE_OUTPUT_DIR", default_value = "results")]
    pub input_dir: PathBuf,
    /// Where to write the SVG files (defaults to the input directory).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GalleryArgs {
    #[arg(long, default_value = "shepp-logan")]
    pub dataset: String,
    #[arg(long, value_enum, default_value = "desk")]
    pub scale: ScaleArg,
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, env = "GARROTE_OUTPUT_DIR", default_value = "results")]
    pub output_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "path", rename_all = "kebab-case")]
pub enum Dataset {
    Synthetic,
    Wav(PathBuf),
    SheppLogan,
    Image(PathBuf),
}

impl Dataset {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let checked = |p: &str| {
            let path = PathBuf::from(p);
            if p.is_empty() {
                Err(CliError::Usage(format!("dataset '{s}' needs a path")))
            } else if !path.exists() {
                Err(CliError::NotFound(path))
            } else {
                Ok(path)
            }
        };
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "shepp-logan" => Ok(Self::SheppLogan),
            _ => match s.split_once(':') {
                Some(("wav", p)) => Ok(Self::Wav(checked(p)?)),
                Some(("image", p)) => Ok(Self::Image(checked(p)?)),
                _ => Err(CliError::Usage(format!(
                    "unknown dataset '{s}' (expected synthetic, wav:<path>, shepp-logan or image:<path>)"
                ))),
            },
        }
    }

    pub fn is_signal(&self) -> bool {
        matches!(self, Self::Synthetic | Self::Wav(_))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Synthetic => "synthetic".into(),
            Self::SheppLogan => "shepp-logan".into(),
            Self::Wav(p) => format!("wav:{}", p.display()),
            Self::Image(p) => format!("image:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GallerySpec {
    pub k: usize,
}

/// Fully resolved run: every default expanded from the scale preset, then
/// overridden by explicit flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub scale: Scale,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<Dataset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<Dataset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wav_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample: Option<ResamplingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denoise: Option<DenoisingConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ct: Option<CtConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gallery: Option<GallerySpec>,
}

fn only_for(flag: &str, given: bool, experiment: Experiment, target: Experiment) -> Result<(), CliError> {
    if given && !experiment.includes(target) {
        return Err(CliError::Usage(format!(
            "--{flag} only applies to the {} experiment",
            format!("{target:?}").to_lowercase()
        )));
    }
    Ok(())
}

fn split_datasets(args: &RunArgs) -> Result<(Option<Dataset>, Option<Dataset>), CliError> {
    let mut signal = None;
    let mut image = None;
    for raw in &args.datasets {
        let d = Dataset::parse(raw)?;
        let slot = if d.is_signal() { &mut signal } else { &mut image };
        if slot.is_some() {
            return Err(CliError::Usage(format!("more than one {} dataset given", if d.is_signal() { "signal" } else { "image" })));
        }
        *slot = Some(d);
    }
    let wants_signal = args.experiment.includes(Experiment::Resample) || args.experiment.includes(Experiment::Denoise);
    let wants_image = args.experiment.includes(Experiment::Ct);
    if signal.is_some() && !wants_signal {
        return Err(CliError::Usage("a signal dataset cannot be used for the ct experiment".into()));
    }
    if image.is_some() && !wants_image {
        return Err(CliError::Usage("an image dataset can only be used for the ct experiment".into()));
    }
    Ok((
        wants_signal.then(|| signal.unwrap_or(Dataset::Synthetic)),
        wants_image.then(|| image.unwrap_or(Dataset::SheppLogan)),
    ))
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let e = args.experiment;
        only_for("ratios", args.ratios.is_some(), e, Experiment::Resample)?;
        only_for("alphas", args.alphas.is_some(), e, Experiment::Denoise)?;
        for (flag, given) in [
            ("angles", args.angles.is_some()),
            ("image-size", args.image_size.is_some()),
            ("detectors", args.detectors.is_some()),
            ("grid-points", args.grid_points.is_some()),
            ("gallery", args.gallery),
        ] {
            only_for(flag, given, e, Experiment::Ct)?;
        }
        let (signal, image) = split_datasets(args)?;
        let scale: Scale = args.scale.into();
        let methods: Option<Vec<MethodKind>> = args.methods.as_ref().map(|m| {
            let mut v: Vec<MethodKind> = m.iter().map(|&x| x.into()).collect();
            v.sort();
            v.dedup();
            v
        });

        let apply_common = |trials: &mut usize, meths: &mut Vec<MethodKind>, grids: &mut Grids, opt: &mut garrote::optim::OptConfig, seed: &mut u64| {
            if let Some(t) = args.trials {
                *trials = t;
            }
            if let Some(m) = &methods {
                *meths = m.clone();
            }
            if let Some(g) = &args.lasso_grid {
                grids.lasso = g.clone();
            }
            if let Some(g) = &args.vg_grid {
                grids.vg = g.clone();
            }
            if let Some(v) = args.max_iters {
                opt.max_iters = v;
            }
            if let Some(v) = args.initial_lr {
                opt.initial_lr = v;
            }
            if let Some(v) = args.lr_floor {
                opt.lr_floor = v;
            }
            if let Some(v) = args.patience {
                opt.plateau.patience = v;
            }
            *seed = args.base_seed;
        };

        let resample = e.includes(Experiment::Resample).then(|| {
            let mut c = ResamplingConfig::preset(scale);
            if let Some(r) = &args.ratios {
                c.ratios = r.clone();
            }
            apply_common(&mut c.trials, &mut c.methods, &mut c.grids, &mut c.opt, &mut c.base_seed);
            c
        });
        let denoise = e.includes(Experiment::Denoise).then(|| {
            let mut c = DenoisingConfig::preset(scale);
            if let Some(a) = &args.alphas {
                c.alphas = a.clone();
            }
            apply_common(&mut c.trials, &mut c.methods, &mut c.grids, &mut c.opt, &mut c.base_seed);
            c
        });
        let ct = e.includes(Experiment::Ct).then(|| {
            let mut c = CtConfig::preset(scale);
            if let Some(s) = args.image_size {
                c.image_size = s;
                c.detector_count = s;
            }
            if let Some(d) = args.detectors {
                c.detector_count = d;
            }
            if let Some(k) = &args.angles {
                c.angle_counts = k.clone();
            }
            if let Some(n) = args.grid_points {
                c.grids = c.grids.resized(n);
            }
            apply_common(&mut c.trials, &mut c.methods, &mut c.grids, &mut c.opt, &mut c.base_seed);
            c
        });

        let cfg = Self {
            experiment: e,
            scale,
            output_dir: args.output_dir.clone(),
            base_seed: args.base_seed,
            wav_start: matches!(signal, Some(Dataset::Wav(_))).then_some(args.wav_start),
            signal,
            image,
            resample,
            denoise,
            ct,
            gallery: args.gallery.then_some(GallerySpec { k: args.gallery_k }),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: garrote::Error| CliError::Usage(e.to_string());
        if let Some(c) = &self.resample {
            c.validate().map_err(usage)?;
        }
        if let Some(c) = &self.denoise {
            c.validate().map_err(usage)?;
        }
        if let Some(c) = &self.ct {
            c.validate().map_err(usage)?;
            if c.methods.len() < MethodKind::ALL.len() && self.gallery.is_some() {
                return Err(CliError::Usage("--gallery needs both lasso and vg".into()));
            }
        }
        if let Some(g) = &self.gallery {
            if g.k == 0 {
                return Err(CliError::Usage("--gallery-k must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
