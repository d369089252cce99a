//! Confidence-map generation from a trajectory and its safety margin.
//!
//! Every pixel is assigned in rule order:
//!
//! 1. pixels on the rasterized trajectory get 1;
//! 2. pixels on the rasterized margin ring, or whose center lies outside the
//!    margin, get 0;
//! 3. any other pixel `q` takes its nearest trajectory pixel `t` as calibration
//!    point and picks the margin pixel `e` whose direction from `q` deviates
//!    least from the ray `t -> q`, among margin pixels passing the distance
//!    threshold (falling back to the nearest margin pixel if none pass). The
//!    value is `|q - e| / |t - e|`, clamped to `[0, 1]`.
//!
//! All distances are measured between pixel centers, so squared distances
//! are exact integers. Ties are always resolved by pixel order along the
//! rasterized path.

mod png;
pub(crate) mod search;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::AnnotationRecord;
use crate::error::{Error, Result};
use crate::geom::{self, Pixel, PixelMask, PixelSet};
use search::PixelGrid;

pub use png::{decode_png, encode_png};

/// Row-major grid of confidence values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ConfidenceMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::argument(format!(
                "confidence map {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::argument(format!(
                "confidence value {} at index {i} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute per-pixel difference; `None` when dimensions differ.
    pub fn max_abs_diff(&self, other: &ConfidenceMap) -> Option<f64> {
        if (self.width, self.height) != (other.width, other.height) {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Margin pixels qualify within `τ · |t - q|` of the area pixel.
    RelativeToCalibration,
    /// Margin pixels qualify within `τ` pixels of the area pixel.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    /// `|q - e| / |t - e|`: 1 at the trajectory, 0 at the margin.
    Corrected,
    /// `|q - e| / |t - q|`, the ratio as literally printed. Diverges near the
    /// trajectory; kept only for comparison runs.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub distance_threshold: f64,
    pub threshold_mode: ThresholdMode,
    pub formula: Formula,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            distance_threshold: 512.0,
            threshold_mode: ThresholdMode::Absolute,
            formula: Formula::Corrected,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold.is_finite() && self.distance_threshold > 0.0) {
            return Err(Error::argument(format!(
                "distance threshold must be finite and > 0, got {}",
                self.distance_threshold
            )));
        }
        Ok(())
    }

    /// Whether a margin pixel at squared distance `d2_qe` from the area pixel
    /// qualifies, given squared calibration distance `d2_tq`.
    pub fn admits(&self, d2_qe: i64, d2_tq: i64) -> bool {
        let d = (d2_qe as f64).sqrt();
        match self.threshold_mode {
            ThresholdMode::Absolute => d <= self.distance_threshold,
            ThresholdMode::RelativeToCalibration => {
                d <= self.distance_threshold * (d2_tq as f64).sqrt()
            }
        }
    }
}

/// Confidence at area pixel `q` given calibration pixel `t` and margin pixel `e`.
///
/// With the corrected formula a calibration point that is itself the chosen
/// margin pixel yields 0.
pub fn confidence_ratio(t: Pixel, q: Pixel, e: Pixel, formula: Formula) -> f64 {
    let d_qe = (q.distance_sq(&e) as f64).sqrt();
    let denom = match formula {
        Formula::Corrected => (t.distance_sq(&e) as f64).sqrt(),
        Formula::Printed => (t.distance_sq(&q) as f64).sqrt(),
    };
    if denom == 0.0 {
        return 0.0;
    }
    (d_qe / denom).clamp(0.0, 1.0)
}

/// Rasterized inputs shared by every generator.
struct Scene {
    width: usize,
    height: usize,
    trajectory: PixelSet,
    ring: PixelSet,
    area: PixelMask,
}

impl Scene {
    fn new(a: &AnnotationRecord) -> Result<Self> {
        let (width, height) = (a.width as usize, a.height as usize);
        let trajectory = geom::rasterize_polyline(&a.trajectory, width, height);
        if trajectory.is_empty() {
            return Err(Error::Generation(format!(
                "frame '{}': trajectory rasterizes to no pixels",
                a.frame_id
            )));
        }
        let area = geom::rasterize_area(&a.margin, width, height);
        if area.is_empty() {
            return Err(Error::Generation(format!(
                "frame '{}': safety margin encloses no pixel centers",
                a.frame_id
            )));
        }
        let ring = geom::rasterize_ring(&a.margin, width, height);
        Ok(Self {
            width,
            height,
            trajectory,
            ring,
            area,
        })
    }

    /// Rules 1 and 2; `None` means the pixel needs the margin search.
    fn fixed_value(&self, q: Pixel) -> Option<f64> {
        if self.trajectory.contains(q) {
            Some(1.0)
        } else if self.ring.contains(q) || !self.area.get(q.col as usize, q.row as usize) {
            Some(0.0)
        } else {
            None
        }
    }

    fn map_rows(&self, pixel_value: impl Fn(Pixel) -> f64 + Sync) -> ConfidenceMap {
        let values: Vec<f64> = (0..self.height)
            .into_par_iter()
            .flat_map_iter(|row| {
                let pixel_value = &pixel_value;
                (0..self.width).map(move |col| {
                    let q = Pixel::new(col as i64, row as i64);
                    self.fixed_value(q).unwrap_or_else(|| pixel_value(q))
                })
            })
            .collect();
        ConfidenceMap {
            width: self.width,
            height: self.height,
            values,
        }
    }
}

/// Generates the confidence map with the angular-difference margin search.
pub fn generate(a: &AnnotationRecord, p: &GenerationParams) -> Result<ConfidenceMap> {
    p.validate()?;
    let scene = Scene::new(a)?;
    let dt = PixelGrid::new(&scene.trajectory);
    let ring = PixelGrid::new(&scene.ring);
    Ok(scene.map_rows(|q| {
        let t = dt.pixel(dt.nearest(q).expect("trajectory set is non-empty"));
        let d2_tq = t.distance_sq(&q);
        let reference = ((q.col - t.col) as f64, (q.row - t.row) as f64);
        let e = ring
            .best_aligned(q, reference, |d2| p.admits(d2, d2_tq))
            .or_else(|| ring.nearest(q))
            .map(|i| ring.pixel(i))
            .expect("margin ring is non-empty");
        confidence_ratio(t, q, e, p.formula)
    }))
}

/// Same rules as [`generate`], but the margin pixel is simply the nearest one.
///
/// This picks margin pixels on the far side of the trajectory whenever they
/// happen to be closer, which is exactly the failure the angular search avoids.
pub fn generate_naive(a: &AnnotationRecord) -> Result<ConfidenceMap> {
    let scene = Scene::new(a)?;
    let dt = PixelGrid::new(&scene.trajectory);
    let ring = PixelGrid::new(&scene.ring);
    Ok(scene.map_rows(|q| {
        let t = dt.pixel(dt.nearest(q).expect("trajectory set is non-empty"));
        let e = ring.pixel(ring.nearest(q).expect("margin ring is non-empty"));
        confidence_ratio(t, q, e, Formula::Corrected)
    }))
}

/// Unaccelerated reference for [`generate`]: a sequential exhaustive scan
/// over every trajectory and margin pixel for every area pixel.
pub fn oracle_generate(a: &AnnotationRecord, p: &GenerationParams) -> Result<ConfidenceMap> {
    p.validate()?;
    let scene = Scene::new(a)?;
    let mut values = Vec::with_capacity(scene.width * scene.height);
    for row in 0..scene.height {
        for col in 0..scene.width {
            let q = Pixel::new(col as i64, row as i64);
            if let Some(v) = scene.fixed_value(q) {
                values.push(v);
                continue;
            }
            let qp = q.as_point();
            let (tp, _) = geom::nearest_point(qp, &scene.trajectory)?;
            let t = Pixel::containing(tp);
            let d2_tq = t.distance_sq(&q);
            let reference = ((q.col - t.col) as f64, (q.row - t.row) as f64);

            let mut best: Option<(f64, Pixel)> = None;
            for &e in scene.ring.points() {
                if !p.admits(e.distance_sq(&q), d2_tq) {
                    continue;
                }
                let v = ((e.col - q.col) as f64, (e.row - q.row) as f64);
                let angle = geom::angular_difference(reference, v)?;
                if best.is_none_or(|(ba, _)| angle < ba) {
                    best = Some((angle, e));
                }
            }
            let e = match best {
                Some((_, e)) => e,
                None => Pixel::containing(geom::nearest_point(qp, &scene.ring)?.0),
            };
            values.push(confidence_ratio(t, q, e, p.formula));
        }
    }
    Ok(ConfidenceMap {
        width: scene.width,
        height: scene.height,
        values,
    })
}
