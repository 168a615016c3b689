//! Command-line front end: resolves presets and overrides, runs the
//! experiments, and writes CSV/JSON results, SVG plots, PGM galleries and a
//! run manifest.

pub mod config;
pub mod plots;
pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use garrote::data::{ingest_image, ingest_wav, shepp_logan, synth_signal, ImageSpec, SignalSpec};
use garrote::experiments::report::{
    read_ct_summary_csv, read_sweeps_csv, sweep_rows, write_ct_csv, write_mge_csv, write_sweeps_csv, CtSummaryRow,
    Summary,
};
use garrote::experiments::{
    ct_gallery, run_ct_experiment, run_denoising_experiment, run_resampling_experiment, trial_seed, CtConfig, CtMethod,
    CtReport, Gallery, Scale, SoundReport,
};
use garrote::raster::Image;
use serde::Serialize;

use config::{Dataset, GalleryArgs, PlotArgs, RunConfig};
use plots::PlotLog;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::NotFound(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<garrote::Error> for CliError {
    fn from(e: garrote::Error) -> Self {
        match e {
            garrote::Error::NotFound(p) => Self::NotFound(p),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("I/O error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Runtime(format!("JSON error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Messages shown on stderr and kept in `run.log`.
#[derive(Default)]
struct RunLog {
    lines: Vec<String>,
}

impl RunLog {
    fn say(&mut self, line: impl Into<String>) {
        let line = line.into();
        eprintln!("{line}");
        self.lines.push(line);
    }

    fn absorb(&mut self, plots: &PlotLog, files: &mut Vec<PathBuf>) {
        for w in &plots.warnings {
            self.say(w.clone());
        }
        files.extend(plots.files.iter().cloned());
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    versions: Versions,
    command: &'a str,
    config: &'a RunConfig,
    seeds: Vec<(String, Vec<u64>)>,
    files: Vec<String>,
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct Versions {
    garrote_cli: &'static str,
    garrote_core: &'static str,
}

fn versions() -> Versions {
    Versions {
        garrote_cli: env!("CARGO_PKG_VERSION"),
        garrote_core: garrote::VERSION,
    }
}

fn relative(dir: &Path, files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .map(|f| f.strip_prefix(dir).unwrap_or(f).display().to_string())
        .collect()
}

fn seeds(base: u64, trials: usize) -> Vec<u64> {
    (0..trials).map(|r| trial_seed(base, r)).collect()
}

pub fn load_signal(dataset: &Dataset, wav_start: f64) -> CliResult<Vec<f64>> {
    match dataset {
        Dataset::Synthetic => Ok(synth_signal(&SignalSpec::synthetic())),
        Dataset::Wav(path) => Ok(ingest_wav(path, wav_start, &SignalSpec::audio())?),
        other => Err(CliError::Usage(format!("{} is not a signal dataset", other.label()))),
    }
}

pub fn load_image(dataset: &Dataset, size: usize) -> CliResult<Image> {
    match dataset {
        Dataset::SheppLogan => Ok(shepp_logan(size)?),
        Dataset::Image(path) => Ok(ingest_image(path, &ImageSpec::new(size)?)?),
        other => Err(CliError::Usage(format!("{} is not an image dataset", other.label()))),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_sound(name: &str, report: &SoundReport, cfg_json: impl Serialize, seeds: Vec<u64>, dir: &Path, files: &mut Vec<PathBuf>, log: &mut RunLog) -> CliResult<()> {
    let sweeps = dir.join(format!("{name}_sweeps.csv"));
    let mge = dir.join(format!("{name}_mge.csv"));
    let summary = dir.join(format!("{name}_summary.json"));
    write_sweeps_csv(report, &sweeps)?;
    write_mge_csv(report, &mge)?;
    Summary::new(name, cfg_json, seeds, report)?.write(&summary)?;
    files.extend([sweeps, mge, summary]);
    let plots = plots::sweep_plots(name, &sweep_rows(report), dir)?;
    log.absorb(&plots, files);
    Ok(())
}

fn write_ct(report: &CtReport, cfg: &CtConfig, dir: &Path, files: &mut Vec<PathBuf>, log: &mut RunLog) -> CliResult<()> {
    let summary_csv = dir.join("ct_summary.csv");
    let grid_csv = dir.join("ct_grid.csv");
    let summary = dir.join("ct_summary.json");
    write_ct_csv(report, &summary_csv, &grid_csv)?;
    Summary::new("ct", cfg, seeds(cfg.base_seed, cfg.trials), report)?.write(&summary)?;
    let rows = read_ct_summary_csv(&summary_csv)?;
    files.extend([summary_csv, grid_csv, summary]);
    let plots = plots::ct_plot(&rows, dir)?;
    log.absorb(&plots, files);
    Ok(())
}

/// Writes the eight gallery images: truth, sinogram, three
/// reconstructions and their absolute error maps.
pub fn write_gallery(gallery: &Gallery, dir: &Path) -> CliResult<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut put = |name: &str, img: &Image| -> CliResult<()> {
        let path = dir.join(name);
        img.write_pgm(&path)?;
        files.push(path);
        Ok(())
    };
    put("truth.pgm", &gallery.truth)?;
    for (name, recon) in [("fbp", &gallery.fbp), ("lasso", &gallery.lasso), ("vg", &gallery.vg)] {
        put(&format!("{name}.pgm"), recon)?;
        put(&format!("{name}_diff.pgm"), &abs_diff(&gallery.truth, recon))?;
    }
    let sino = dir.join("sinogram.pgm");
    write_sinogram_pgm(&gallery.sinogram, &sino)?;
    files.push(sino);
    Ok(files)
}

/// `|truth − recon|`; PGM output clips it to `[0, 1]` before quantizing.
pub fn abs_diff(truth: &Image, recon: &Image) -> Image {
    let pixels = truth.pixels().iter().zip(recon.pixels()).map(|(a, b)| (a - b).abs()).collect();
    Image::new(truth.size(), pixels).expect("same size")
}

fn write_sinogram_pgm(sino: &garrote::operators::Sinogram, path: &Path) -> CliResult<()> {
    let peak = sino.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write!(f, "P5\n{} {}\n255\n", sino.detector_count(), sino.num_angles())?;
    let bytes: Vec<u8> = sino
        .data()
        .iter()
        .map(|v| ((v * scale).clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

/// The best hyperparameters at the angle count closest to `k`.
fn gallery_hyperparams(report: &CtReport, k: usize) -> CliResult<(f64, f64)> {
    let pick = |m: CtMethod| {
        report
            .results
            .iter()
            .filter(|r| r.method == m)
            .min_by_key(|r| r.k.abs_diff(k))
            .and_then(|r| r.best_hyperparam)
            .ok_or_else(|| CliError::Runtime(format!("no {} result to take a gallery hyperparameter from", m.name())))
    };
    Ok((pick(CtMethod::Lasso)?, pick(CtMethod::Vg)?))
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let started = Instant::now();
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut log = RunLog::default();
    let mut all_seeds = Vec::new();

    if let Some(c) = &cfg.resample {
        let t = Instant::now();
        let signal = load_signal(cfg.signal.as_ref().expect("resolved"), cfg.wav_start.unwrap_or(0.0))?;
        let report = run_resampling_experiment(&signal, c)?;
        let s = seeds(c.base_seed, c.trials);
        write_sound("resample", &report, c, s.clone(), dir, &mut files, &mut log)?;
        all_seeds.push(("resample".to_string(), s));
        log.say(format!("resample: {} sweeps in {:.1} s", report.sweeps.len(), t.elapsed().as_secs_f64()));
    }
    if let Some(c) = &cfg.denoise {
        let t = Instant::now();
        let signal = load_signal(cfg.signal.as_ref().expect("resolved"), cfg.wav_start.unwrap_or(0.0))?;
        let report = run_denoising_experiment(&signal, c)?;
        let s = seeds(c.base_seed, c.trials);
        write_sound("denoise", &report, c, s.clone(), dir, &mut files, &mut log)?;
        all_seeds.push(("denoise".to_string(), s));
        log.say(format!("denoise: {} sweeps in {:.1} s", report.sweeps.len(), t.elapsed().as_secs_f64()));
    }
    if let Some(c) = &cfg.ct {
        let t = Instant::now();
        let image = load_image(cfg.image.as_ref().expect("resolved"), c.image_size)?;
        let report = run_ct_experiment(&image, c)?;
        write_ct(&report, c, dir, &mut files, &mut log)?;
        all_seeds.push(("ct".to_string(), seeds(c.base_seed, c.trials)));
        log.say(format!("ct: {} results in {:.1} s", report.results.len(), t.elapsed().as_secs_f64()));
        if let Some(g) = &cfg.gallery {
            if !c.angle_counts.contains(&g.k) {
                log.say(format!("gallery: K = {} was not swept; using hyperparameters of the nearest K", g.k));
            }
            let (lambda, gamma) = gallery_hyperparams(&report, g.k)?;
            let gallery = ct_gallery(&image, c, g.k, lambda, gamma)?;
            files.extend(write_gallery(&gallery, &dir.join("gallery"))?);
        }
    }

    let log_path = dir.join("run.log");
    fs::write(&log_path, log.lines.join("\n") + "\n")?;
    files.push(log_path);
    let manifest = Manifest {
        tool: "garrote",
        versions: versions(),
        command: "run",
        config: cfg,
        seeds: all_seeds,
        files: relative(dir, &files),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// Re-draws every panel whose CSV input exists in `args.input_dir`.
pub fn plot(args: &PlotArgs) -> CliResult<()> {
    let input = &args.input_dir;
    if !input.is_dir() {
        return Err(CliError::NotFound(input.clone()));
    }
    let out = args.output_dir.clone().unwrap_or_else(|| input.clone());
    create_dir(&out)?;
    let mut files = Vec::new();
    let mut log = RunLog::default();
    for name in ["resample", "denoise"] {
        let path = input.join(format!("{name}_sweeps.csv"));
        if path.exists() {
            let rows = read_sweeps_csv(&path)?;
            log.absorb(&plots::sweep_plots(name, &rows, &out)?, &mut files);
        }
    }
    let ct = input.join("ct_summary.csv");
    if ct.exists() {
        let rows: Vec<CtSummaryRow> = read_ct_summary_csv(&ct)?;
        log.absorb(&plots::ct_plot(&rows, &out)?, &mut files);
    }
    if files.is_empty() {
        return Err(CliError::Runtime(format!(
            "no result CSV files (resample_sweeps.csv, denoise_sweeps.csv, ct_summary.csv) in {}",
            input.display()
        )));
    }
    for f in &files {
        println!("{}", f.display());
    }
    Ok(())
}

pub fn gallery(args: &GalleryArgs) -> CliResult<()> {
    let dataset = Dataset::parse(&args.dataset)?;
    if dataset.is_signal() {
        return Err(CliError::Usage("the gallery needs an image dataset".into()));
    }
    let scale: Scale = args.scale.into();
    let mut cfg = CtConfig::preset(scale);
    if let Some(s) = args.image_size {
        cfg.image_size = s;
        cfg.detector_count = s;
    }
    if let Some(m) = args.max_iters {
        cfg.opt.max_iters = m;
    }
    cfg.base_seed = args.base_seed;
    cfg.angle_counts = vec![args.k];
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let image = load_image(&dataset, cfg.image_size)?;
    let g = ct_gallery(&image, &cfg, args.k, args.lambda, args.gamma).map_err(|e| match e {
        garrote::Error::InvalidArgument(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    for f in write_gallery(&g, &args.output_dir)? {
        println!("{}", f.display());
    }
    Ok(())
}
