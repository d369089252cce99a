//! Synthetic annotation fixtures: straight bands, a U-shaped margin, wavy
//! rings and random star-shaped regions.

use std::f64::consts::PI;

use rand::Rng;

use crate::annotation::{AnnotationRecord, Point2, SafetyMargin, Trajectory};
use crate::error::Result;

fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
    v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}

/// Trajectory along `y = dt_y` from `x0` to `x1`, inside the rectangle
/// `[x0, x1] x [dt_y - half, dt_y + half]`.
pub fn horizontal_band(
    frame_id: &str,
    width: u32,
    height: u32,
    dt_y: f64,
    half: f64,
    x0: f64,
    x1: f64,
) -> Result<AnnotationRecord> {
    let (y0, y1) = (dt_y - half, dt_y + half);
    let margin = SafetyMargin::new(pts(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)]))?;
    let traj = Trajectory::new(pts(&[(x0, dt_y), (x1, dt_y)]))?;
    AnnotationRecord::new(frame_id, width, height, traj, margin)
}

/// Transposed [`horizontal_band`]: trajectory along `x = dt_x`.
pub fn vertical_band(
    frame_id: &str,
    width: u32,
    height: u32,
    dt_x: f64,
    half: f64,
    y0: f64,
    y1: f64,
) -> Result<AnnotationRecord> {
    let (x0, x1) = (dt_x - half, dt_x + half);
    let margin = SafetyMargin::new(pts(&[(x0, y0), (x1, y0), (x1, y1), (x0, y1)]))?;
    let traj = Trajectory::new(pts(&[(dt_x, y0), (dt_x, y1)]))?;
    AnnotationRecord::new(frame_id, width, height, traj, margin)
}

/// Half-annulus opening upward with the trajectory running close to the
/// inner arc. Pixels between the trajectory and the outer arc are nearer to
/// the inner arc than to the outer one.
pub fn u_shape(frame_id: &str, width: u32, height: u32) -> Result<AnnotationRecord> {
    let size = width.min(height) as f64;
    let (cx, cy) = (width as f64 / 2.0, height as f64 * 0.45);
    let (outer, inner) = (0.4 * size, 0.12 * size);
    let along = inner + 0.2 * (outer - inner);
    let steps = 48;
    let arc = |radius: f64, k: usize| {
        let theta = PI * k as f64 / steps as f64;
        Point2::new(cx + radius * theta.cos(), cy + radius * theta.sin())
    };
    let mut ring: Vec<Point2> = (0..=steps).map(|k| arc(outer, k)).collect();
    ring.extend((0..=steps).rev().map(|k| arc(inner, k)));
    let traj: Vec<Point2> = (0..=steps).map(|k| arc(along, k)).collect();
    AnnotationRecord::new(
        frame_id,
        width,
        height,
        Trajectory::new(traj)?,
        SafetyMargin::new(ring)?,
    )
}

/// Ring of radius `radius` modulated by `lobes` sinusoidal bumps of
/// amplitude `wobble`, centered in the image, with a bent trajectory
/// through the middle.
pub fn wavy_ring(
    frame_id: &str,
    width: u32,
    height: u32,
    radius: f64,
    wobble: f64,
    lobes: u32,
) -> Result<AnnotationRecord> {
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let n = 16 * lobes.max(4) as usize;
    let ring: Vec<Point2> = (0..n)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n as f64;
            let r = radius + wobble * (lobes as f64 * theta).sin();
            Point2::new(cx + r * theta.cos(), cy + r * theta.sin())
        })
        .collect();
    let reach = 0.6 * (radius - wobble);
    let traj = vec![
        Point2::new(cx - reach, cy + 0.2 * reach),
        Point2::new(cx, cy - 0.1 * reach),
        Point2::new(cx + reach, cy + 0.15 * reach),
    ];
    AnnotationRecord::new(
        frame_id,
        width,
        height,
        Trajectory::new(traj)?,
        SafetyMargin::new(ring)?,
    )
}

/// Random star-shaped margin with a short random trajectory inside it.
pub fn random_annotation(
    rng: &mut impl Rng,
    frame_id: &str,
    width: u32,
    height: u32,
) -> AnnotationRecord {
    loop {
        if let Some(rec) = try_random_annotation(rng, frame_id, width, height) {
            return rec;
        }
    }
}

fn try_random_annotation(
    rng: &mut impl Rng,
    frame_id: &str,
    width: u32,
    height: u32,
) -> Option<AnnotationRecord> {
    let size = width.min(height) as f64;
    let (cx, cy) = (
        width as f64 / 2.0 + rng.random_range(-0.05..0.05) * size,
        height as f64 / 2.0 + rng.random_range(-0.05..0.05) * size,
    );
    let n = rng.random_range(5..=12);
    let mut radii = Vec::with_capacity(n);
    let ring: Vec<Point2> = (0..n)
        .map(|k| {
            let theta = 2.0 * PI * (k as f64 + rng.random_range(-0.3..0.3)) / n as f64;
            let r = rng.random_range(0.2..0.45) * size;
            radii.push(r);
            Point2::new(cx + r * theta.cos(), cy + r * theta.sin())
        })
        .collect();
    let r_min = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let k = rng.random_range(2..=5);
    let traj: Vec<Point2> = (0..k)
        .map(|_| {
            let theta = rng.random_range(0.0..2.0 * PI);
            let r = rng.random_range(0.0..0.6) * r_min;
            Point2::new(cx + r * theta.cos(), cy + r * theta.sin())
        })
        .collect();
    let traj = Trajectory::new(traj).ok()?;
    let margin = SafetyMargin::new(ring).ok()?;
    AnnotationRecord::new(frame_id, width, height, traj, margin).ok()
}
