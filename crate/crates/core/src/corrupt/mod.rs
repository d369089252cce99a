//! Seeded image corruptions for robustness evaluation: thirteen kinds in four
//! groups, each at severities 1 through 5.
//!
//! Every stochastic kind draws from a single ChaCha stream seeded by
//! [`CorruptionSpec::seed`], consuming values in row-major pixel order, so
//! output depends only on the input image and the spec. Parameters live in
//! [`tables`].

mod filters;
pub mod tables;

use std::fmt;
use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{ImageFormat, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use filters::Planes;

/// 8-bit RGB image, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::argument("image dimensions must be positive"));
        }
        if data.len() != width * height * 3 {
            return Err(Error::argument(format!(
                "RGB image {width}x{height} needs {} bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: rgb.repeat(width * height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Decodes any PNG, converting it to 8-bit RGB.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load(Cursor::new(bytes), ImageFormat::Png)
            .map_err(|e| Error::Format(e.to_string()))?
            .into_rgb8();
        Self::from_rgb(img)
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.to_rgb()
            .write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out)
    }

    fn from_rgb(img: RgbImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    fn to_rgb(&self) -> RgbImage {
        RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction")
    }

    fn to_planes(&self) -> Planes {
        Planes {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| b as f64 / 255.0).collect(),
        }
    }

    fn from_planes(p: &Planes) -> Self {
        Self {
            width: p.width,
            height: p.height,
            data: p
                .data
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect(),
        }
    }
}

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    SpeckleNoise,
    DefocusBlur,
    MotionBlur,
    ZoomBlur,
    Fog,
    Brightness,
    Contrast,
    Elastic,
    Pixelate,
    Jpeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Noise,
    Blur,
    Weather,
    Digital,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 13] = [
        Self::GaussianNoise,
        Self::ShotNoise,
        Self::ImpulseNoise,
        Self::SpeckleNoise,
        Self::DefocusBlur,
        Self::MotionBlur,
        Self::ZoomBlur,
        Self::Fog,
        Self::Brightness,
        Self::Contrast,
        Self::Elastic,
        Self::Pixelate,
        Self::Jpeg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianNoise => "gaussian-noise",
            Self::ShotNoise => "shot-noise",
            Self::ImpulseNoise => "impulse-noise",
            Self::SpeckleNoise => "speckle-noise",
            Self::DefocusBlur => "defocus-blur",
            Self::MotionBlur => "motion-blur",
            Self::ZoomBlur => "zoom-blur",
            Self::Fog => "fog",
            Self::Brightness => "brightness",
            Self::Contrast => "contrast",
            Self::Elastic => "elastic",
            Self::Pixelate => "pixelate",
            Self::Jpeg => "jpeg",
        }
    }

    /// Grouping used in robustness tables. Speckle is reported with the
    /// blurs even though it is implemented as multiplicative noise.
    pub fn category(&self) -> Category {
        match self {
            Self::GaussianNoise | Self::ShotNoise | Self::ImpulseNoise => Category::Noise,
            Self::SpeckleNoise | Self::DefocusBlur | Self::MotionBlur | Self::ZoomBlur => {
                Category::Blur
            }
            Self::Fog | Self::Brightness => Category::Weather,
            Self::Contrast | Self::Elastic | Self::Pixelate | Self::Jpeg => Category::Digital,
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::argument(format!("unknown corruption kind '{name}'")))
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: u8,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, severity: u8, seed: u64) -> Result<Self> {
        if !(1..=5).contains(&severity) {
            return Err(Error::argument(format!(
                "severity must be in 1..=5, got {severity}"
            )));
        }
        Ok(Self {
            kind,
            severity,
            seed,
        })
    }
}

/// Applies one corruption. Output has the input's dimensions.
pub fn apply(img: &Image, spec: &CorruptionSpec) -> Result<Image> {
    let spec = CorruptionSpec::new(spec.kind, spec.severity, spec.seed)?;
    let s = (spec.severity - 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let out = match spec.kind {
        CorruptionKind::GaussianNoise => {
            let std = tables::GAUSSIAN_NOISE_STD[s];
            pointwise(img, |x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + std * z
            })
        }
        CorruptionKind::ShotNoise => {
            let photons = tables::SHOT_NOISE_PHOTONS[s];
            pointwise(img, |x| {
                let lambda = x * photons;
                let n = if lambda > 0.0 {
                    Poisson::new(lambda)
                        .map(|d| d.sample(&mut rng))
                        .unwrap_or(lambda)
                } else {
                    0.0
                };
                n / photons
            })
        }
        CorruptionKind::ImpulseNoise => impulse_noise(img, tables::IMPULSE_NOISE_PROB[s], &mut rng),
        CorruptionKind::SpeckleNoise => {
            let std = tables::SPECKLE_NOISE_STD[s];
            pointwise(img, |x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x + x * std * z
            })
        }
        CorruptionKind::DefocusBlur => {
            let (radius, alias) = tables::DEFOCUS_BLUR[s];
            Image::from_planes(
                &img.to_planes()
                    .convolve(&filters::disk_kernel(radius, alias)),
            )
        }
        CorruptionKind::MotionBlur => {
            let (length, sigma) = tables::MOTION_BLUR[s];
            let angle = rng.random_range(-45.0..45.0);
            Image::from_planes(
                &img.to_planes()
                    .convolve(&filters::motion_kernel(length, sigma, angle)),
            )
        }
        CorruptionKind::ZoomBlur => zoom_blur(img, tables::ZOOM_BLUR[s]),
        CorruptionKind::Fog => fog(img, tables::FOG_STRENGTH[s], tables::FOG_DECAY, &mut rng),
        CorruptionKind::Brightness => brightness(img, tables::BRIGHTNESS_SHIFT[s]),
        CorruptionKind::Contrast => contrast(img, tables::CONTRAST_FACTOR[s]),
        CorruptionKind::Elastic => elastic(img, tables::ELASTIC[s], &mut rng),
        CorruptionKind::Pixelate => pixelate(img, tables::PIXELATE_FACTOR[s]),
        CorruptionKind::Jpeg => jpeg(img, tables::JPEG_QUALITY[s])?,
    };
    Ok(out)
}

fn pointwise(img: &Image, mut f: impl FnMut(f64) -> f64) -> Image {
    let mut p = img.to_planes();
    for v in p.data.iter_mut() {
        *v = f(*v);
    }
    Image::from_planes(&p)
}

fn impulse_noise(img: &Image, prob: f64, rng: &mut impl Rng) -> Image {
    let mut out = img.clone();
    for px in out.data.chunks_exact_mut(3) {
        let (hit, salt): (f64, f64) = (rng.random(), rng.random());
        if hit < prob {
            px.fill(if salt < 0.5 { 255 } else { 0 });
        }
    }
    out
}

fn zoom_blur(img: &Image, (step, count): (f64, usize)) -> Image {
    let src = img.to_planes();
    let (cx, cy) = (src.width as f64 / 2.0, src.height as f64 / 2.0);
    let mut acc = src.data.clone();
    for k in 0..count {
        let z = 1.0 + step * k as f64;
        let zoomed = src.warp(|x, y| {
            (
                cx + (x as f64 + 0.5 - cx) / z - 0.5,
                cy + (y as f64 + 0.5 - cy) / z - 0.5,
            )
        });
        for (a, v) in acc.iter_mut().zip(&zoomed.data) {
            *a += v;
        }
    }
    let n = (count + 1) as f64;
    let data = acc.into_iter().map(|v| v / n).collect();
    Image::from_planes(&Planes { data, ..src })
}

fn fog(img: &Image, strength: f64, decay: f64, rng: &mut impl Rng) -> Image {
    let mut p = img.to_planes();
    let size = p.width.max(p.height).next_power_of_two().max(2);
    let haze = filters::plasma_fractal(size, decay, rng);
    let peak = p.data.iter().cloned().fold(0.0, f64::max);
    for y in 0..p.height {
        for x in 0..p.width {
            let h = haze[y * size + x];
            for c in 0..3 {
                let v = &mut p.data[(y * p.width + x) * 3 + c];
                *v = (*v + strength * h) * peak / (peak + strength);
            }
        }
    }
    Image::from_planes(&p)
}

fn brightness(img: &Image, shift: u8) -> Image {
    let mut out = img.clone();
    for px in out.data.chunks_exact_mut(3) {
        let v = px.iter().copied().max().unwrap_or(0);
        let raised = v.saturating_add(shift);
        if v == 0 {
            px.fill(raised);
        } else {
            // Scaling every channel by V'/V keeps hue and saturation.
            for ch in px.iter_mut() {
                *ch = ((*ch as f64) * raised as f64 / v as f64).round().min(255.0) as u8;
            }
        }
    }
    out
}

fn contrast(img: &Image, factor: f64) -> Image {
    let mut p = img.to_planes();
    let n = (p.width * p.height) as f64;
    let mut means = [0.0f64; 3];
    for px in p.data.chunks_exact(3) {
        for c in 0..3 {
            means[c] += px[c];
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    for px in p.data.chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = (px[c] - means[c]) * factor + means[c];
        }
    }
    Image::from_planes(&p)
}

fn elastic(img: &Image, (amplitude, sigma): (f64, f64), rng: &mut impl Rng) -> Image {
    let src = img.to_planes();
    let (w, h) = (src.width, src.height);
    let side = w.min(h) as f64;
    // Two displacement fields, packed into the first two channels of a plane.
    let mut field = Planes {
        width: w,
        height: h,
        data: vec![0.0; w * h * 3],
    };
    for px in field.data.chunks_exact_mut(3) {
        px[0] = rng.random_range(-1.0..1.0);
        px[1] = rng.random_range(-1.0..1.0);
    }
    let smooth = field.gaussian_blur((sigma * side).max(0.5));
    let peak = smooth
        .data
        .chunks_exact(3)
        .map(|px| px[0].abs().max(px[1].abs()))
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 {
        amplitude * side / peak
    } else {
        0.0
    };
    let warped = src.warp(|x, y| {
        let d = &smooth.data[(y * w + x) * 3..];
        (x as f64 + d[0] * scale, y as f64 + d[1] * scale)
    });
    Image::from_planes(&warped)
}

/// Block partition of `0..n` into `cells` runs: returns the cell of each index.
fn partition(n: usize, cells: usize) -> Vec<usize> {
    (0..n).map(|i| i * cells / n).collect()
}

fn pixelate(img: &Image, factor: f64) -> Image {
    let (w, h) = (img.width, img.height);
    let sw = ((w as f64 * factor).round() as usize).clamp(1, w);
    let sh = ((h as f64 * factor).round() as usize).clamp(1, h);
    let (cols, rows) = (partition(w, sw), partition(h, sh));
    // Low-resolution cell of every pixel, row-major.
    let cells: Vec<usize> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| r * sw + c))
        .collect();
    let mut sums = vec![0u64; sw * sh * 3];
    let mut counts = vec![0u64; sw * sh];
    for (&cell, px) in cells.iter().zip(img.data.chunks_exact(3)) {
        counts[cell] += 1;
        for (c, &v) in px.iter().enumerate() {
            sums[cell * 3 + c] += v as u64;
        }
    }
    let mut out = img.clone();
    for (&cell, px) in cells.iter().zip(out.data.chunks_exact_mut(3)) {
        for (c, v) in px.iter_mut().enumerate() {
            *v = (sums[cell * 3 + c] as f64 / counts[cell] as f64).round() as u8;
        }
    }
    out
}

fn jpeg(img: &Image, quality: u8) -> Result<Image> {
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode_image(&img.to_rgb())
        .map_err(|e| Error::Format(e.to_string()))?;
    let decoded = image::load(Cursor::new(&buf), ImageFormat::Jpeg)
        .map_err(|e| Error::Format(e.to_string()))?
        .into_rgb8();
    Image::from_rgb(decoded)
}

/// Peak signal-to-noise ratio in dB with peak 255; infinite for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::argument(format!(
            "image dimensions differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let sq: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sq / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Deterministic structured RGB test image: gradients, sinusoids at several
/// frequencies, hard-edged shapes and fine value noise.
pub fn test_pattern(width: usize, height: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (w, h) = (width as f64, height as f64);
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / w, y as f64 / h);
            let waves =
                (u * 9.0 * std::f64::consts::TAU).sin() * (v * 5.0 * std::f64::consts::TAU).cos();
            let fine = ((u + 0.3 * v) * 40.0 * std::f64::consts::TAU).sin();
            let disk = ((u - 0.35).powi(2) + (v - 0.6).powi(2)) < 0.04;
            let bar = (0.6..0.8).contains(&u) && (0.15..0.85).contains(&v);
            let noise: f64 = rng.random_range(-0.08..0.08);
            let base = [
                0.2 + 0.5 * u + 0.15 * waves,
                0.25 + 0.45 * v + 0.1 * fine,
                0.5 + 0.2 * waves - 0.1 * fine,
            ];
            for (c, b) in base.into_iter().enumerate() {
                let mut val = b + noise;
                if disk {
                    val = 0.9 - 0.2 * c as f64;
                }
                if bar {
                    val = 0.1 + 0.3 * c as f64;
                }
                data.push((val.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
    }
    Image {
        width,
        height,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: CorruptionKind, severity: u8) -> CorruptionSpec {
        CorruptionSpec::new(kind, severity, 42).unwrap()
    }

    #[test]
    fn thirteen_kinds_in_four_groups() {
        assert_eq!(CorruptionKind::ALL.len(), 13);
        let count = |c| {
            CorruptionKind::ALL
                .iter()
                .filter(|k| k.category() == c)
                .count()
        };
        assert_eq!(
            [
                count(Category::Noise),
                count(Category::Blur),
                count(Category::Weather),
                count(Category::Digital)
            ],
            [3, 4, 2, 4]
        );
        for k in CorruptionKind::ALL {
            assert_eq!(CorruptionKind::from_name(k.name()).unwrap(), k);
        }
        assert!(CorruptionKind::from_name("snow").is_err());
    }

    #[test]
    fn severity_range_checked() {
        assert!(CorruptionSpec::new(CorruptionKind::Fog, 0, 1).is_err());
        assert!(CorruptionSpec::new(CorruptionKind::Fog, 6, 1).is_err());
        let bad = CorruptionSpec {
            kind: CorruptionKind::Fog,
            severity: 6,
            seed: 1,
        };
        assert!(matches!(
            apply(&Image::filled(4, 4, [1, 2, 3]), &bad),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn brightness_on_mid_gray() {
        let img = Image::filled(8, 8, [128, 128, 128]);
        for s in 1..=5u8 {
            let out = apply(&img, &spec(CorruptionKind::Brightness, s)).unwrap();
            let expected = 128u16 + tables::BRIGHTNESS_SHIFT[(s - 1) as usize] as u16;
            let expected = expected.min(255) as u8;
            assert!(out.data().iter().all(|&b| b == expected), "severity {s}");
        }
        let white = apply(
            &Image::filled(2, 2, [250, 250, 250]),
            &spec(CorruptionKind::Brightness, 3),
        )
        .unwrap();
        assert!(white.data().iter().all(|&b| b == 255));
    }

    #[test]
    fn pixelate_constant_is_identity() {
        let img = Image::filled(37, 23, [10, 200, 77]);
        for s in 1..=5 {
            assert_eq!(
                apply(&img, &spec(CorruptionKind::Pixelate, s)).unwrap(),
                img
            );
        }
    }

    #[test]
    fn pixelate_is_block_average() {
        // 4x1 image at factor 0.5 -> two 2-pixel blocks.
        let img = Image::new(4, 1, vec![0, 0, 0, 100, 100, 100, 50, 50, 50, 51, 51, 51]).unwrap();
        let out = pixelate(&img, 0.5);
        assert_eq!(
            out.data(),
            &[50, 50, 50, 50, 50, 50, 51, 51, 51, 51, 51, 51]
        );
    }

    #[test]
    fn dimensions_preserved() {
        let img = test_pattern(33, 21);
        for k in CorruptionKind::ALL {
            let out = apply(&img, &spec(k, 3)).unwrap();
            assert_eq!((out.width(), out.height()), (33, 21), "{k}");
        }
    }

    #[test]
    fn jpeg_changes_nontrivial_image() {
        let img = test_pattern(64, 64);
        let out = apply(&img, &spec(CorruptionKind::Jpeg, 1)).unwrap();
        assert_ne!(out, img);
        assert!(psnr(&img, &out).unwrap() > 15.0);
    }

    #[test]
    fn psnr_cases() {
        let a = Image::filled(4, 4, [10, 20, 30]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = Image::filled(4, 4, [11, 21, 31]);
        assert!((psnr(&a, &b).unwrap() - 20.0 * 255f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 48.13).abs() < 0.01);
        assert!(psnr(&a, &Image::filled(4, 5, [0, 0, 0])).is_err());
    }

    #[test]
    fn psnr_matches_direct_formula() {
        let a = test_pattern(16, 16);
        let b = apply(&a, &spec(CorruptionKind::GaussianNoise, 2)).unwrap();
        let mut sq = 0.0;
        for i in 0..a.data().len() {
            sq += (a.data()[i] as f64 - b.data()[i] as f64).powi(2);
        }
        let mse = sq / (16.0 * 16.0 * 3.0);
        let direct = 10.0 * (65025.0 / mse).log10();
        assert!((psnr(&a, &b).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn png_roundtrip() {
        let img = test_pattern(12, 9);
        assert_eq!(Image::from_png(&img.to_png().unwrap()).unwrap(), img);
    }
}
