//! Signal and image sources: the synthetic two-tone signal, WAV ingestion,
//! the Shepp-Logan phantom, grayscale image ingestion, circular field of
//! view, random sampling masks and additive Gaussian noise.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::MaskSpec;
use crate::raster::Image;

/// Sample rate used for every sound task.
pub const DEFAULT_SAMPLE_RATE: f64 = 16_000.0;
/// Length of the synthetic signal (exactly 1/8 s at 16 kHz).
pub const SYNTHETIC_LENGTH: usize = 2000;
/// Length of ingested audio segments.
pub const AUDIO_LENGTH: usize = 2500;

/// Half-width of the windowed-sinc resampling kernel (64 taps in total).
const RESAMPLE_HALF_TAPS: i64 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub length: usize,
    pub sample_rate: f64,
}

impl SignalSpec {
    pub fn new(length: usize, sample_rate: f64) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidArgument(format!("signal length must be at least 2, got {length}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(Self { length, sample_rate })
    }

    pub fn synthetic() -> Self {
        Self {
            length: SYNTHETIC_LENGTH,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }

    pub fn audio() -> Self {
        Self {
            length: AUDIO_LENGTH,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub size: usize,
    pub fov: bool,
}

impl ImageSpec {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Empty("ImageSpec"));
        }
        Ok(Self { size, fov: true })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise amplitude must be nonnegative, got {alpha}")));
        }
        Ok(Self { alpha, seed })
    }
}

/// Centers to zero mean and scales to unit (population) variance.
pub fn standardize(x: &mut [f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter_mut().for_each(|v| *v -= mean);
    let var = x.iter().map(|v| v * v).sum::<f64>() / n;
    let scale = var.sqrt();
    if !(scale > 1e-12 * (1.0 + mean.abs())) {
        return Err(Error::ZeroVariance);
    }
    x.iter_mut().for_each(|v| *v /= scale);
    Ok(())
}

/// `sin(1392πt) + sin(3264πt)` sampled at `t_k = k / sample_rate`, then
/// standardized.
pub fn synth_signal(spec: &SignalSpec) -> Vec<f64> {
    let mut x: Vec<f64> = (0..spec.length)
        .map(|k| {
            let t = k as f64 / spec.sample_rate;
            (1392.0 * PI * t).sin() + (3264.0 * PI * t).sin()
        })
        .collect();
    standardize(&mut x).expect("two-tone signal has nonzero variance");
    x
}

fn read_first_channel(path: &Path) -> Result<(Vec<f64>, f64)> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let format_err = |e: hound::Error| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut reader = hound::WavReader::open(path).map_err(format_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(format_err)?,
        hound::SampleFormat::Int => {
            let full_scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(format_err)?
        }
    };
    let first = interleaved.into_iter().step_by(channels).collect();
    Ok((first, f64::from(spec.sample_rate)))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann-windowed sinc interpolation of `src` at fractional position `pos`,
/// low-passed at `cutoff` (relative to the source Nyquist rate).
fn interpolate(src: &[f64], pos: f64, cutoff: f64) -> f64 {
    let center = pos.floor() as i64;
    let half = RESAMPLE_HALF_TAPS as f64;
    let mut acc = 0.0;
    let mut norm = 0.0;
    for j in center - RESAMPLE_HALF_TAPS + 1..=center + RESAMPLE_HALF_TAPS {
        let d = pos - j as f64;
        if d.abs() >= half {
            continue;
        }
        let window = 0.5 * (1.0 + (PI * d / half).cos());
        let weight = cutoff * sinc(cutoff * d) * window;
        norm += weight;
        if let Some(&v) = usize::try_from(j).ok().and_then(|j| src.get(j)) {
            acc += weight * v;
        }
    }
    acc / norm
}

/// Reads a PCM or float WAV, resamples its first channel to
/// `spec.sample_rate`, extracts `spec.length` samples starting at
/// `start_time` seconds and standardizes them.
pub fn ingest_wav(path: &Path, start_time: f64, spec: &SignalSpec) -> Result<Vec<f64>> {
    if !(start_time >= 0.0 && start_time.is_finite()) {
        return Err(Error::Range(format!("start time {start_time} must be nonnegative")));
    }
    let (src, src_rate) = read_first_channel(path)?;
    if src.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "no samples".into(),
        });
    }
    let step = src_rate / spec.sample_rate;
    let first = start_time * src_rate;
    let last = first + (spec.length - 1) as f64 * step;
    let available = (src.len() - 1) as f64;
    if last > available + 1e-9 {
        return Err(Error::Range(format!(
            "segment [{start_time} s, {:.6} s] exceeds the recording length {:.6} s",
            start_time + (spec.length - 1) as f64 / spec.sample_rate,
            available / src_rate
        )));
    }
    let cutoff = (spec.sample_rate / src_rate).min(1.0);
    let mut x: Vec<f64> = (0..spec.length)
        .map(|k| interpolate(&src, first + k as f64 * step, cutoff))
        .collect();
    standardize(&mut x)?;
    Ok(x)
}

/// Writes `index,value` lines with a header.
pub fn write_signal_csv(x: &[f64], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,value")?;
    for (i, v) in x.iter().enumerate() {
        writeln!(w, "{i},{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

/// 1 where `(i − c)² + (j − c)² ≤ (size/2)²` with `c = (size − 1)/2`, else 0.
pub fn circular_fov(size: usize) -> Image {
    let c = (size as f64 - 1.0) / 2.0;
    let r2 = (size as f64 / 2.0).powi(2);
    let mut mask = Image::zeros(size);
    for i in 0..size {
        for j in 0..size {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            if di * di + dj * dj <= r2 {
                mask.set(i, j, 1.0);
            }
        }
    }
    mask
}

/// Ellipses of the modified Shepp-Logan phantom:
/// (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees).
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Renders the 10-ellipse phantom on a `size × size` grid spanning
/// `[−1, 1]²`, clipped to `[0, 1]` and restricted to the circular FOV.
pub fn shepp_logan(size: usize) -> Result<Image> {
    if size < 16 {
        return Err(Error::InvalidArgument(format!("phantom size must be at least 16, got {size}")));
    }
    Ok(render_ellipses(size, &SHEPP_LOGAN))
}

fn render_ellipses(size: usize, table: &[(f64, f64, f64, f64, f64, f64)]) -> Image {
    let c = (size as f64 - 1.0) / 2.0;
    let half = size as f64 / 2.0;
    let mut img = Image::zeros(size);
    for i in 0..size {
        for j in 0..size {
            let x = (j as f64 - c) / half;
            let y = (c - i as f64) / half;
            let mut v = 0.0;
            for &(intensity, a, b, x0, y0, phi) in table {
                let (s, co) = phi.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let u = dx * co + dy * s;
                let t = -dx * s + dy * co;
                if (u / a).powi(2) + (t / b).powi(2) <= 1.0 {
                    v += intensity;
                }
            }
            img.set(i, j, v.clamp(0.0, 1.0));
        }
    }
    img.apply_mask(&circular_fov(size));
    img
}

/// Rescales to `[0, 1]`; a constant image maps to zeros.
pub fn min_max_normalize(pixels: &mut [f64]) {
    let lo = pixels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    for p in pixels.iter_mut() {
        *p = if range > 0.0 { (*p - lo) / range } else { 0.0 };
    }
}

/// Bilinear resampling of a `rows × cols` raster to `size × size`, with
/// pixel centers aligned (`src = (dst + ½)·scale − ½`, edges clamped).
pub fn resize_bilinear(src: &[f64], rows: usize, cols: usize, size: usize) -> Image {
    let sample = |r: usize, c: usize| src[r * cols + c];
    let coord = |dst: usize, n_src: usize| {
        let pos = (dst as f64 + 0.5) * n_src as f64 / size as f64 - 0.5;
        let pos = pos.clamp(0.0, (n_src - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n_src - 1);
        (lo, hi, pos - lo as f64)
    };
    let mut out = Image::zeros(size);
    for i in 0..size {
        let (r0, r1, fr) = coord(i, rows);
        for j in 0..size {
            let (c0, c1, fc) = coord(j, cols);
            let top = sample(r0, c0) * (1.0 - fc) + sample(r0, c1) * fc;
            let bottom = sample(r1, c0) * (1.0 - fc) + sample(r1, c1) * fc;
            out.set(i, j, top * (1.0 - fr) + bottom * fr);
        }
    }
    out
}

/// Reads a grayscale PGM or PNG, min-max normalizes it, resizes it
/// bilinearly to `spec.size` and applies the circular FOV when requested.
pub fn ingest_image(path: &Path, spec: &ImageSpec) -> Result<Image> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let decoded = image::open(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let luma = decoded.to_luma16();
    let (cols, rows) = (luma.width() as usize, luma.height() as usize);
    let mut pixels: Vec<f64> = luma.into_raw().into_iter().map(f64::from).collect();
    min_max_normalize(&mut pixels);
    let mut img = resize_bilinear(&pixels, rows, cols, spec.size);
    if spec.fov {
        img.apply_mask(&circular_fov(spec.size));
    }
    Ok(img)
}

/// Draws `round(ratio · n)` distinct indices uniformly at random.
pub fn sample_mask(n: usize, ratio: f64, seed: u64) -> Result<MaskSpec> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("sampling ratio must lie in (0, 1], got {ratio}")));
    }
    let k = (ratio * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} of {n} samples selects no indices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = rand::seq::index::sample(&mut rng, n, k).into_vec();
    observed.sort_unstable();
    MaskSpec::new(n, observed, seed)
}

/// `x + α g` with `g` i.i.d. standard normal drawn from `spec.seed`.
pub fn add_noise(x: &[f64], spec: &NoiseSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    x.iter()
        .map(|v| {
            let g: f64 = StandardNormal.sample(&mut rng);
            v + spec.alpha * g
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::dct_analyze;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n)
    }

    #[test]
    fn synthetic_signal_is_standardized_two_tone() {
        let x = synth_signal(&SignalSpec::synthetic());
        assert_eq!(x.len(), 2000);
        let (m, v) = mean_var(&x);
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);

        let c = dct_analyze(&x).unwrap();
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by(|&a, &b| c[b].abs().total_cmp(&c[a].abs()));
        let mut top: Vec<usize> = order[..4].to_vec();
        top.sort();
        assert_eq!(top, vec![173, 175, 407, 409]);
        let near = |k: usize| [174usize, 408].iter().any(|&p| k.abs_diff(p) <= 1);
        let total: f64 = c.iter().map(|v| v * v).sum();
        let peak: f64 = (0..c.len()).filter(|&k| near(k)).map(|k| c[k] * c[k]).sum();
        assert!(peak / total > 0.8);
        assert!(order[4..].iter().all(|&k| c[k].abs() < 0.6 * c[order[3]].abs()));
    }

    #[test]
    fn raw_signal_starts_at_zero() {
        let t0 = (1392.0 * PI * 0.0).sin() + (3264.0 * PI * 0.0).sin();
        assert_eq!(t0, 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(SignalSpec::new(1, 16000.0).is_err());
        assert!(SignalSpec::new(4, 0.0).is_err());
        assert!(NoiseSpec::new(-0.1, 0).is_err());
        assert!(ImageSpec::new(0).is_err());
    }

    fn write_wav(path: &Path, rate: u32, channels: u16, frames: &[Vec<f64>]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &v in frame {
                w.write_sample((v * 32000.0).round() as i16).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    fn dominant_bin(x: &[f64]) -> usize {
        let c = dct_analyze(x).unwrap();
        (0..c.len()).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs())).unwrap()
    }

    #[test]
    fn wav_cosine_lands_on_expected_bin() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let frames: Vec<Vec<f64>> = (0..48_000)
            .map(|k| vec![0.5 * (2.0 * PI * 784.0 * k as f64 / 16000.0).cos()])
            .collect();
        write_wav(&path, 16000, 1, &frames);
        let spec = SignalSpec::audio();
        let x = ingest_wav(&path, 0.5, &spec).unwrap();
        let (m, v) = mean_var(&x);
        assert!(m.abs() < 1e-10 && (v - 1.0).abs() < 1e-10);
        let expected = (784.0 * 2.0 * 2500.0 / 16000.0_f64).round() as usize;
        assert_eq!(dominant_bin(&x), expected);
    }

    #[test]
    fn wav_resampled_from_higher_rate_keeps_tone() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tone44.wav");
        let frames: Vec<Vec<f64>> = (0..44_100)
            .map(|k| vec![0.5 * (2.0 * PI * 784.0 * k as f64 / 44100.0).cos()])
            .collect();
        write_wav(&path, 44100, 1, &frames);
        let x = ingest_wav(&path, 0.25, &SignalSpec::audio()).unwrap();
        assert_eq!(dominant_bin(&x), 245);
    }

    #[test]
    fn stereo_uses_first_channel() {
        let dir = tempfile::tempdir().unwrap();
        let mono = dir.path().join("mono.wav");
        let stereo = dir.path().join("stereo.wav");
        let left: Vec<f64> = (0..4000).map(|k| (k as f64 * 0.05).sin() * 0.7).collect();
        write_wav(&mono, 16000, 1, &left.iter().map(|&v| vec![v]).collect::<Vec<_>>());
        write_wav(
            &stereo,
            16000,
            2,
            &left.iter().enumerate().map(|(k, &v)| vec![v, (k as f64).cos() * 0.3]).collect::<Vec<_>>(),
        );
        let spec = SignalSpec::new(1000, 16000.0).unwrap();
        assert_eq!(ingest_wav(&mono, 0.01, &spec).unwrap(), ingest_wav(&stereo, 0.01, &spec).unwrap());
    }

    #[test]
    fn wav_errors() {
        let dir = tempfile::tempdir().unwrap();
        let dc = dir.path().join("dc.wav");
        write_wav(&dc, 16000, 1, &vec![vec![0.25]; 4000]);
        let spec = SignalSpec::new(1000, 16000.0).unwrap();
        assert!(matches!(ingest_wav(&dc, 0.0, &spec), Err(Error::ZeroVariance)));
        assert!(matches!(ingest_wav(&dc, 0.2, &spec), Err(Error::Range(_))));
        let missing = dir.path().join("nope.wav");
        assert!(matches!(ingest_wav(&missing, 0.0, &spec), Err(Error::NotFound(_))));
        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"not a wav file at all").unwrap();
        assert!(matches!(ingest_wav(&junk, 0.0, &spec), Err(Error::Format { .. })));
    }

    #[test]
    fn fov_examples() {
        let m = circular_fov(64);
        assert_eq!(m.get(32, 32), 1.0);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(63, 63), 0.0);
        for size in [64, 128, 255] {
            let area = circular_fov(size).sum() / (size * size) as f64;
            assert!((area - PI / 4.0).abs() / (PI / 4.0) < 0.02, "size {size}: {area}");
        }
        assert_eq!(circular_fov(1).get(0, 0), 1.0);
    }

    #[test]
    fn phantom_properties() {
        let p = shepp_logan(128).unwrap();
        assert!(p.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(p.get(2, 64), 0.0);
        assert_eq!(p.get(64, 2), 0.0);
        assert!(p.get(64, 64) > 0.0);
        let mirrored_table: Vec<_> = SHEPP_LOGAN
            .iter()
            .map(|&(v, a, b, x0, y0, phi)| (v, a, b, -x0, y0, -phi))
            .collect();
        assert_eq!(render_ellipses(128, &mirrored_table), p.mirrored());
        let outer_only = render_ellipses(128, &SHEPP_LOGAN[..2]);
        assert_eq!(outer_only, outer_only.mirrored());
        let big = shepp_logan(256).unwrap();
        let ratio = big.sum() / p.sum();
        assert!((ratio - 4.0).abs() / 4.0 < 0.02, "{ratio}");
        let fov = circular_fov(128);
        assert!(p.pixels().iter().zip(fov.pixels()).all(|(v, m)| *m == 1.0 || *v == 0.0));
        assert!(shepp_logan(15).is_err());
    }

    fn write_pgm16(path: &Path, w: u32, h: u32, f: impl Fn(u32, u32) -> u16) {
        let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_fn(w, h, |x, y| image::Luma([f(x, y)]));
        img.save(path).unwrap();
    }

    #[test]
    fn image_ingest_examples() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ImageSpec::new(32).unwrap();

        let flat = dir.path().join("flat.pgm");
        write_pgm16(&flat, 32, 32, |_, _| 1234);
        assert!(ingest_image(&flat, &spec).unwrap().pixels().iter().all(|&v| v == 0.0));

        let checker = dir.path().join("checker.png");
        write_pgm16(&checker, 64, 64, |x, y| if (x + y) % 2 == 0 { 65535 } else { 0 });
        let mut no_fov = spec;
        no_fov.fov = false;
        let img = ingest_image(&checker, &no_fov).unwrap();
        assert!(img.pixels().iter().all(|&v| (v - 0.5).abs() < 1e-6));

        let disk = dir.path().join("disk.pgm");
        let fov = circular_fov(32);
        write_pgm16(&disk, 32, 32, |x, y| {
            let (dx, dy) = (x as f64 - 15.5, y as f64 - 15.5);
            if dx * dx + dy * dy < 100.0 { 255 } else { 0 }
        });
        let img = ingest_image(&disk, &spec).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let (dx, dy) = (j as f64 - 15.5, i as f64 - 15.5);
                let expected = if dx * dx + dy * dy < 100.0 { 1.0 } else { 0.0 };
                assert_eq!(img.get(i, j), expected * fov.get(i, j));
            }
        }

        assert!(matches!(ingest_image(&dir.path().join("none.pgm"), &spec), Err(Error::NotFound(_))));
        let junk = dir.path().join("junk.pgm");
        std::fs::write(&junk, b"P5 garbage").unwrap();
        assert!(matches!(ingest_image(&junk, &spec), Err(Error::Format { .. })));
    }

    #[test]
    fn mask_sampling() {
        let all = sample_mask(50, 1.0, 3).unwrap();
        assert_eq!(all.observed(), (0..50).collect::<Vec<_>>().as_slice());
        let m = sample_mask(2000, 0.05, 1).unwrap();
        assert_eq!(m.observed().len(), 100);
        assert!(m.observed().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_mask(2000, 0.05, 1).unwrap(), m);
        assert_ne!(sample_mask(2000, 0.05, 2).unwrap().observed(), m.observed());
        assert!(sample_mask(10, 0.01, 0).is_err());
        assert!(sample_mask(10, 0.0, 0).is_err());
        assert!(sample_mask(10, 1.5, 0).is_err());
    }

    #[test]
    fn noise_examples() {
        let x: Vec<f64> = (0..100_000).map(|i| (i as f64).sin()).collect();
        assert_eq!(add_noise(&x, &NoiseSpec::new(0.0, 9).unwrap()), x);
        let spec = NoiseSpec::new(0.1, 4).unwrap();
        let y = add_noise(&x, &spec);
        let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let (_, v) = mean_var(&diff);
        assert!((v.sqrt() - 0.1).abs() / 0.1 < 0.02);
        assert_eq!(add_noise(&x, &spec), y);
    }

    #[test]
    fn signal_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_signal_csv(&[1.0, -2.5], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().collect::<Vec<_>>(), vec!["index,value", "0,1e0", "1,-2.5e0"]);
    }
}
