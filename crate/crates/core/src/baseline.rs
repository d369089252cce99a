//! Non-learned reference predictors used to exercise the scoring pipeline.

use serde::{Deserialize, Serialize};

use crate::annotation::{Point2, Trajectory};
use crate::confmap::search::PixelGrid;
use crate::confmap::ConfidenceMap;
use crate::error::{Error, Result};
use crate::geom::{self, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPredictorParams {
    pub half_width: f64,
}

impl BandPredictorParams {
    pub fn new(half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::argument(format!(
                "half width must be finite and > 0, got {half_width}"
            )));
        }
        Ok(Self { half_width })
    }
}

/// Linear falloff `max(0, 1 - d / half_width)` where `d` is the distance to
/// the nearest rasterized trajectory pixel.
pub fn predict_map_from_trajectory(
    t: &Trajectory,
    width: usize,
    height: usize,
    p: &BandPredictorParams,
) -> Result<ConfidenceMap> {
    let params = BandPredictorParams::new(p.half_width)?;
    let pixels = geom::rasterize_polyline(t, width, height);
    let grid = PixelGrid::new(&pixels);
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let q = Pixel::new(col as i64, row as i64);
            let nearest = grid
                .nearest(q)
                .ok_or_else(|| Error::Generation("trajectory rasterizes to no pixels".into()))?;
            let d = (grid.pixel(nearest).distance_sq(&q) as f64).sqrt();
            values.push((1.0 - d / params.half_width).max(0.0));
        }
    }
    ConfidenceMap::new(width, height, values)
}

/// Continues the last segment's direction for `n` points, stepping by the
/// mean segment length of the history.
pub fn extrapolate_trajectory(history: &[Point2], n: usize) -> Result<Trajectory> {
    if history.len() < 2 {
        return Err(Error::argument(format!(
            "extrapolation needs at least 2 history points, got {}",
            history.len()
        )));
    }
    if n < 2 {
        return Err(Error::argument(format!(
            "extrapolation count must be ≥ 2, got {n}"
        )));
    }
    let (a, b) = (history[history.len() - 2], history[history.len() - 1]);
    let last_len = a.distance(&b);
    if last_len == 0.0 {
        return Err(Error::argument("last history segment has zero length"));
    }
    let step = history
        .windows(2)
        .map(|w| w[0].distance(&w[1]))
        .sum::<f64>()
        / (history.len() - 1) as f64;
    let (ux, uy) = ((b.x - a.x) / last_len, (b.y - a.y) / last_len);
    let points = (1..=n)
        .map(|k| {
            let s = step * k as f64;
            Point2::new(b.x + ux * s, b.y + uy * s)
        })
        .collect();
    Trajectory::new(points)
}
