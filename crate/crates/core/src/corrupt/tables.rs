//! Severity tables, indexed by `severity - 1`.
//!
//! Values follow the usual common-corruptions conventions. Intensity-domain
//! constants act on channel values scaled to `[0, 1]`. Changing any entry
//! changes generated benchmarks; bump [`TABLE_VERSION`] when doing so.

/// Version tag recorded in reports alongside corruption outputs.
pub const TABLE_VERSION: u32 = 1;

/// Standard deviation of additive Gaussian noise.
pub const GAUSSIAN_NOISE_STD: [f64; 5] = [0.08, 0.12, 0.18, 0.26, 0.38];

/// Photon count scale: output is `Poisson(x * c) / c`.
pub const SHOT_NOISE_PHOTONS: [f64; 5] = [60.0, 25.0, 12.0, 5.0, 3.0];

/// Per-pixel probability of replacement by salt (white) or pepper (black),
/// each with equal chance.
pub const IMPULSE_NOISE_PROB: [f64; 5] = [0.03, 0.06, 0.09, 0.17, 0.27];

/// Standard deviation of multiplicative noise: `x + x * N(0, c)`.
pub const SPECKLE_NOISE_STD: [f64; 5] = [0.15, 0.2, 0.35, 0.45, 0.6];

/// Disk kernel radius (pixels) and the Gaussian sigma used to anti-alias it.
pub const DEFOCUS_BLUR: [(u32, f64); 5] = [(3, 0.1), (4, 0.5), (6, 0.5), (8, 0.5), (10, 0.5)];

/// One-sided line kernel: length (pixels) and Gaussian falloff sigma along
/// the line. The direction is drawn uniformly from [-45°, 45°].
pub const MOTION_BLUR: [(u32, f64); 5] = [(10, 3.0), (15, 5.0), (15, 8.0), (15, 12.0), (20, 15.0)];

/// Zoom factors as (step, count): factors are `1 + k * step` for
/// `k in 0..count`; the output averages the original with every zoomed copy.
pub const ZOOM_BLUR: [(f64, usize); 5] =
    [(0.01, 11), (0.01, 16), (0.02, 11), (0.02, 13), (0.03, 11)];

/// Fog haze strength. Output is `(x + s * haze) * peak / (peak + s)`.
pub const FOG_STRENGTH: [f64; 5] = [1.5, 2.0, 2.5, 2.75, 3.0];

/// Plasma-fractal roughness decay, shared by all severities so that the
/// same seed yields the same haze pattern at every strength.
pub const FOG_DECAY: f64 = 1.7;

/// Additive shift of the HSV value channel, in byte units (`round(255 * c)`
/// for c = 0.1 .. 0.5).
pub const BRIGHTNESS_SHIFT: [u8; 5] = [26, 51, 77, 102, 128];

/// Factor applied to each channel's deviation from its mean.
pub const CONTRAST_FACTOR: [f64; 5] = [0.4, 0.3, 0.2, 0.1, 0.05];

/// Elastic warp: peak displacement and smoothing sigma, both as fractions of
/// the shorter image side.
pub const ELASTIC: [(f64, f64); 5] = [
    (0.01, 0.03),
    (0.015, 0.03),
    (0.02, 0.03),
    (0.03, 0.03),
    (0.04, 0.03),
];

/// Linear downscale factor before nearest-neighbour upscaling.
pub const PIXELATE_FACTOR: [f64; 5] = [0.6, 0.5, 0.4, 0.3, 0.25];

/// Baseline JPEG quality.
pub const JPEG_QUALITY: [u8; 5] = [25, 18, 15, 10, 7];
