//! Map regression metrics and trajectory displacement metrics.
//!
//! Map errors are reported on the 0–255 byte scale, the scale at which
//! per-pixel confidence maps are stored and usually compared. Trajectory
//! errors are in pixels.

use serde::{Deserialize, Serialize};

use crate::annotation::Point2;
use crate::confmap::ConfidenceMap;
use crate::error::{Error, Result};

/// Weight applied to pixels whose ground truth is zero (outside the margin).
pub const DEFAULT_OUTSIDE_WEIGHT: f64 = 10.0;

const BYTE_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapScore {
    pub mae: f64,
    pub mse: f64,
    pub weighted_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajScore {
    pub ade: f64,
    pub fde: f64,
    pub fd: f64,
}

/// MAE, MSE and weighted MSE of `pred` against `gt`. Pixels where the ground
/// truth is exactly zero carry weight `w_out` in the weighted MSE; all other
/// pixels carry weight 1.
pub fn score_map(pred: &ConfidenceMap, gt: &ConfidenceMap, w_out: f64) -> Result<MapScore> {
    if (pred.width(), pred.height()) != (gt.width(), gt.height()) {
        return Err(Error::argument(format!(
            "map dimensions differ: prediction {}x{}, ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if !(w_out.is_finite() && w_out >= 0.0) {
        return Err(Error::argument(format!(
            "outside weight must be finite and ≥ 0, got {w_out}"
        )));
    }
    let n = pred.values().len() as f64;
    let (mut abs, mut sq, mut wsq) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        let d = (p - g) * BYTE_SCALE;
        let w = if g == 0.0 { w_out } else { 1.0 };
        abs += d.abs();
        sq += d * d;
        wsq += w * d * d;
    }
    Ok(MapScore {
        mae: abs / n,
        mse: sq / n,
        weighted_mse: wsq / n,
    })
}

/// Average displacement error over pointwise pairs.
pub fn ade(pred: &[Point2], gt: &[Point2]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::argument(format!(
            "ADE needs equal point counts, got {} and {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::argument("ADE of empty trajectories"));
    }
    let total: f64 = pred.iter().zip(gt).map(|(a, b)| a.distance(b)).sum();
    Ok(total / pred.len() as f64)
}

/// Final displacement error: distance between the last points.
pub fn fde(pred: &[Point2], gt: &[Point2]) -> Result<f64> {
    match (pred.last(), gt.last()) {
        (Some(a), Some(b)) => Ok(a.distance(b)),
        _ => Err(Error::argument("FDE of an empty trajectory")),
    }
}

/// Discrete Fréchet distance between two point sequences.
///
/// Row-by-row evaluation of the coupling recurrence
/// `c(i, j) = max(d(i, j), min(c(i-1, j), c(i-1, j-1), c(i, j-1)))`,
/// keeping one row of the table.
pub fn frechet(pred: &[Point2], gt: &[Point2]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::argument("Fréchet distance of an empty trajectory"));
    }
    let mut prev = vec![0.0f64; gt.len()];
    let mut cur = vec![0.0f64; gt.len()];
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let d = p.distance(g);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[gt.len() - 1])
}

/// ADE, FDE and Fréchet distance together.
pub fn score_trajectory(pred: &[Point2], gt: &[Point2]) -> Result<TrajScore> {
    Ok(TrajScore {
        ade: ade(pred, gt)?,
        fde: fde(pred, gt)?,
        fd: frechet(pred, gt)?,
    })
}
