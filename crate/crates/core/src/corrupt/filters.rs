//! Float image planes and the filters the corruptions are built from.
//!
//! A [`Planes`] holds interleaved RGB channel values in `[0, 1]` (values may
//! leave that range mid-pipeline; they are clamped on conversion back).
//! Borders are handled by symmetric reflection.

use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub(crate) struct Planes {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// Symmetric reflection: `... c b a | a b c ... | z y x ...`.
pub(crate) fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Sparse 2-D kernel of `(dx, dy, weight)` taps.
pub(crate) type Kernel = Vec<(i64, i64, f64)>;

impl Planes {
    fn at(&self, x: i64, y: i64, c: usize) -> f64 {
        let (x, y) = (reflect(x, self.width), reflect(y, self.height));
        self.data[(y * self.width + x) * 3 + c]
    }

    fn map_pixels(&self, f: impl Fn(usize, usize, usize) -> f64 + Sync) -> Planes {
        let w = self.width;
        let data = (0..self.height)
            .into_par_iter()
            .flat_map_iter(|y| {
                let f = &f;
                (0..w).flat_map(move |x| (0..3).map(move |c| f(x, y, c)))
            })
            .collect();
        Planes {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn convolve(&self, kernel: &Kernel) -> Planes {
        self.map_pixels(|x, y, c| {
            kernel
                .iter()
                .map(|&(dx, dy, w)| w * self.at(x as i64 + dx, y as i64 + dy, c))
                .sum()
        })
    }

    /// Separable Gaussian blur on each channel.
    pub fn gaussian_blur(&self, sigma: f64) -> Planes {
        let taps = gaussian_taps(sigma);
        let horizontal: Kernel = taps.iter().map(|&(d, w)| (d, 0, w)).collect();
        let vertical: Kernel = taps.iter().map(|&(d, w)| (0, d, w)).collect();
        self.convolve(&horizontal).convolve(&vertical)
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers at
    /// integers) with reflected borders.
    pub fn sample(&self, x: f64, y: f64, c: usize) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as i64, y0 as i64);
        let top = self.at(x0, y0, c) * (1.0 - fx) + self.at(x0 + 1, y0, c) * fx;
        let bottom = self.at(x0, y0 + 1, c) * (1.0 - fx) + self.at(x0 + 1, y0 + 1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Resamples `out(x, y) = self(src(x, y))` for a per-pixel source map.
    pub fn warp(&self, src: impl Fn(usize, usize) -> (f64, f64) + Sync) -> Planes {
        self.map_pixels(|x, y, c| {
            let (sx, sy) = src(x, y);
            self.sample(sx, sy, c)
        })
    }
}

/// Normalized 1-D Gaussian taps out to three sigma.
pub(crate) fn gaussian_taps(sigma: f64) -> Vec<(i64, f64)> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let raw: Vec<(i64, f64)> = (-radius..=radius)
        .map(|d| (d, (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()))
        .collect();
    let total: f64 = raw.iter().map(|t| t.1).sum();
    raw.into_iter().map(|(d, w)| (d, w / total)).collect()
}

/// Filled disk of `radius`, smoothed by a 3x3 (5x5 for larger radii)
/// Gaussian of `alias_sigma`, normalized to unit sum.
pub(crate) fn disk_kernel(radius: u32, alias_sigma: f64) -> Kernel {
    let r = radius as i64;
    let extent = r.max(8);
    let size = (2 * extent + 1) as usize;
    let mut disk = vec![0.0; size * size];
    for dy in -extent..=extent {
        for dx in -extent..=extent {
            if dx * dx + dy * dy <= r * r {
                disk[((dy + extent) as usize) * size + (dx + extent) as usize] = 1.0;
            }
        }
    }
    let half = if radius <= 8 { 1 } else { 2 };
    let g: Vec<f64> = (-half..=half)
        .map(|d: i64| (-(d * d) as f64 / (2.0 * alias_sigma * alias_sigma)).exp())
        .collect();
    let g_sum: f64 = g.iter().sum();
    let mut kernel = Kernel::new();
    for ky in 0..size as i64 {
        for kx in 0..size as i64 {
            let mut acc = 0.0;
            for (iy, gy) in g.iter().enumerate() {
                for (ix, gx) in g.iter().enumerate() {
                    let sx = reflect(kx + ix as i64 - half, size);
                    let sy = reflect(ky + iy as i64 - half, size);
                    acc += gx * gy * disk[sy * size + sx];
                }
            }
            acc /= g_sum * g_sum;
            if acc > 1e-12 {
                kernel.push((kx - extent, ky - extent, acc));
            }
        }
    }
    normalize(kernel)
}

/// One-sided line kernel along `angle_deg`, Gaussian-weighted by distance
/// from the origin tap.
pub(crate) fn motion_kernel(length: u32, sigma: f64, angle_deg: f64) -> Kernel {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let mut kernel = Kernel::new();
    for k in 0..=length as i64 {
        let d = k as f64;
        let (dx, dy) = ((d * c).round() as i64, (d * s).round() as i64);
        let w = (-(d * d) / (2.0 * sigma * sigma)).exp();
        match kernel.iter_mut().find(|t| t.0 == dx && t.1 == dy) {
            Some(t) => t.2 += w,
            None => kernel.push((dx, dy, w)),
        }
    }
    normalize(kernel)
}

fn normalize(kernel: Kernel) -> Kernel {
    let total: f64 = kernel.iter().map(|t| t.2).sum();
    kernel
        .into_iter()
        .map(|(x, y, w)| (x, y, w / total))
        .collect()
}

/// Diamond-square plasma fractal on a `size x size` torus (`size` a power of
/// two), rescaled to `[0, 1]`. Each refinement step divides the random
/// perturbation amplitude by `decay`.
pub(crate) fn plasma_fractal(size: usize, decay: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert!(size.is_power_of_two() && size >= 2);
    let mut map = vec![0.0f64; size * size];
    let idx = |x: usize, y: usize| (y % size) * size + (x % size);
    let mut step = size;
    let mut wibble = 100.0f64;
    while step >= 2 {
        let half = step / 2;
        // Squares: centers from the four surrounding corners.
        for y in (0..size).step_by(step) {
            for x in (0..size).step_by(step) {
                let sum = map[idx(x, y)]
                    + map[idx(x + step, y)]
                    + map[idx(x, y + step)]
                    + map[idx(x + step, y + step)];
                map[idx(x + half, y + half)] =
                    sum / 4.0 + wibble * rng.random_range(-wibble..wibble);
            }
        }
        // Diamonds: edge midpoints from their two corners and two centers.
        for y in (0..size).step_by(step) {
            for x in (0..size).step_by(step) {
                let top = map[idx(x, y)]
                    + map[idx(x + step, y)]
                    + map[idx(x + half, y + half)]
                    + map[idx(x + half, (y + size - half) % size)];
                map[idx(x + half, y)] = top / 4.0 + wibble * rng.random_range(-wibble..wibble);
                let left = map[idx(x, y)]
                    + map[idx(x, y + step)]
                    + map[idx(x + half, y + half)]
                    + map[idx((x + size - half) % size, y + half)];
                map[idx(x, y + half)] = left / 4.0 + wibble * rng.random_range(-wibble..wibble);
            }
        }
        step /= 2;
        wibble /= decay;
    }
    let lo = map.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = map.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    map.iter().map(|v| (v - lo) / span).collect()
}
