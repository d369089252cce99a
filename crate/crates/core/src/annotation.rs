//! Annotation records: parsing, validation, serialization and trajectory
//! resampling.
//!
//! The on-disk format is a JSON array of objects:
//!
//! ```json
//! [{ "frame_id": "clip_0001", "width": 1300, "height": 1024,
//!    "trajectory": [[x, y], ...], "safety_margin": [[x, y], ...] }]
//! ```
//!
//! The margin ring is listed without repeating its first vertex.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geom;

/// A point in pixel coordinates. Pixel `(c, r)` covers `[c, c+1) x [r, r+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// An ordered polyline with at least two points and no zero-length segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Point2>,
}

impl Trajectory {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::argument("trajectory length ≥ 2"));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::argument(format!(
                "trajectory point {i} is not finite"
            )));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::argument(format!(
                "trajectory points {i} and {} coincide (segment arc length must be > 0)",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

/// A closed polygon ring of at least three vertices enclosing non-zero area.
/// The closing edge from the last vertex back to the first is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyMargin {
    vertices: Vec<Point2>,
}

impl SafetyMargin {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::argument("safety margin length ≥ 3"));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::argument(format!("margin vertex {i} is not finite")));
        }
        if signed_area(&vertices).abs() <= 1e-9 {
            return Err(Error::argument("safety margin must enclose non-zero area"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Edges as `(start, end)` pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive for counter-clockwise rings in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

/// One annotated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub trajectory: Trajectory,
    pub margin: SafetyMargin,
}

impl AnnotationRecord {
    /// Builds a record and checks every cross-field invariant.
    pub fn new(
        frame_id: impl Into<String>,
        width: u32,
        height: u32,
        trajectory: Trajectory,
        margin: SafetyMargin,
    ) -> Result<Self> {
        let record = Self {
            frame_id: frame_id.into(),
            width,
            height,
            trajectory,
            margin,
        };
        record.validate()?;
        Ok(record)
    }

    fn validate(&self) -> Result<()> {
        let id = &self.frame_id;
        if self.width == 0 {
            return Err(Error::validation(id, "width", "must be > 0"));
        }
        if self.height == 0 {
            return Err(Error::validation(id, "height", "must be > 0"));
        }
        let (w, h) = (self.width as f64, self.height as f64);
        let in_bounds = |p: &Point2| p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h;
        if let Some(i) = self.trajectory.points().iter().position(|p| !in_bounds(p)) {
            return Err(Error::validation(
                id,
                format!("trajectory[{i}]"),
                format!("point lies outside the image [0,{w})x[0,{h})"),
            ));
        }
        if let Some(i) = self.margin.vertices().iter().position(|p| !in_bounds(p)) {
            return Err(Error::validation(
                id,
                format!("safety_margin[{i}]"),
                format!("vertex lies outside the image [0,{w})x[0,{h})"),
            ));
        }
        if let Some(i) = self
            .trajectory
            .points()
            .iter()
            .position(|p| !geom::point_in_polygon(*p, &self.margin))
        {
            return Err(Error::validation(
                id,
                format!("trajectory[{i}]"),
                "trajectory must lie inside or on the safety margin",
            ));
        }
        Ok(())
    }
}

/// Parses an annotation file, failing on the first invalid record.
pub fn parse_annotations(bytes: &[u8]) -> Result<Vec<AnnotationRecord>> {
    parse_records(bytes)?.into_iter().collect()
}

/// Parses an annotation file and validates each record independently.
///
/// The outer error covers malformed JSON and a non-array top level; each
/// element of the returned vector is the outcome for one record, in file
/// order.
pub fn parse_records(bytes: &[u8]) -> Result<Vec<Result<AnnotationRecord>>> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let Value::Array(items) = root else {
        return Err(Error::Parse {
            offset: 0,
            message: "top level must be an array of records".into(),
        });
    };
    Ok(items
        .iter()
        .enumerate()
        .map(|(i, item)| record_from_value(i, item))
        .collect())
}

// serde_json reports 1-based line and column, both counted in bytes.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(line - 1)
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

fn record_from_value(index: usize, value: &Value) -> Result<AnnotationRecord> {
    let fallback_id = format!("#{index}");
    let Value::Object(obj) = value else {
        return Err(Error::validation(
            fallback_id,
            "<record>",
            "record must be an object",
        ));
    };
    let frame_id = match obj.get("frame_id") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(Error::validation(
                fallback_id,
                "frame_id",
                "must be a string",
            ))
        }
        None => return Err(Error::validation(fallback_id, "frame_id", "missing")),
    };
    let dim = |field: &str| -> Result<u32> {
        let v = obj
            .get(field)
            .ok_or_else(|| Error::validation(&frame_id, field, "missing"))?;
        v.as_u64()
            .filter(|&n| n > 0 && n <= u32::MAX as u64)
            .map(|n| n as u32)
            .ok_or_else(|| Error::validation(&frame_id, field, "must be an integer > 0"))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let trajectory = points_field(obj, &frame_id, "trajectory")?;
    let margin = points_field(obj, &frame_id, "safety_margin")?;

    let trajectory =
        Trajectory::new(trajectory).map_err(|e| reframe(e, &frame_id, "trajectory"))?;
    let margin = SafetyMargin::new(margin).map_err(|e| reframe(e, &frame_id, "safety_margin"))?;
    AnnotationRecord::new(frame_id, width, height, trajectory, margin)
}

fn reframe(err: Error, frame_id: &str, field: &str) -> Error {
    match err {
        Error::Argument(message) => Error::validation(frame_id, field, message),
        other => other,
    }
}

fn points_field(
    obj: &serde_json::Map<String, Value>,
    frame_id: &str,
    field: &str,
) -> Result<Vec<Point2>> {
    let Some(Value::Array(items)) = obj.get(field) else {
        return Err(Error::validation(
            frame_id,
            field,
            "missing or not an array",
        ));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, item)| match item.as_array().map(Vec::as_slice) {
            Some([x, y]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok(Point2::new(x, y)),
                _ => Err(Error::validation(
                    frame_id,
                    format!("{field}[{i}]"),
                    "coordinates must be numbers",
                )),
            },
            _ => Err(Error::validation(
                frame_id,
                format!("{field}[{i}]"),
                "point must be an [x, y] pair",
            )),
        })
        .collect()
}

#[derive(Serialize)]
struct RecordOut<'a> {
    frame_id: &'a str,
    width: u32,
    height: u32,
    trajectory: Vec<[f64; 2]>,
    safety_margin: Vec<[f64; 2]>,
}

/// Serializes records in the same schema [`parse_annotations`] reads.
pub fn serialize_annotations(records: &[AnnotationRecord]) -> Result<Vec<u8>> {
    let out: Vec<RecordOut<'_>> = records
        .iter()
        .map(|r| RecordOut {
            frame_id: &r.frame_id,
            width: r.width,
            height: r.height,
            trajectory: r.trajectory.points().iter().map(|&p| p.into()).collect(),
            safety_margin: r.margin.vertices().iter().map(|&p| p.into()).collect(),
        })
        .collect();
    serde_json::to_vec_pretty(&out).map_err(|e| Error::Format(e.to_string()))
}

/// Resamples a polyline to `n` points evenly spaced by arc length.
///
/// The endpoints are preserved exactly and traversal direction is kept.
pub fn resample_trajectory(t: &Trajectory, n: usize) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::argument(format!(
            "resample count must be ≥ 2, got {n}"
        )));
    }
    let pts = t.points();
    let seg_len: Vec<f64> = pts.windows(2).map(|w| w[0].distance(&w[1])).collect();
    let total: f64 = seg_len.iter().sum();

    let mut out = Vec::with_capacity(n);
    out.push(t.first());
    let (mut seg, mut seg_start) = (0usize, 0.0f64);
    for k in 1..n - 1 {
        let target = k as f64 * total / (n - 1) as f64;
        while seg + 1 < seg_len.len() && seg_start + seg_len[seg] < target {
            seg_start += seg_len[seg];
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let offset = (target - seg_start).clamp(0.0, seg_len[seg]);
        out.push(Point2::new(
            a.x + (b.x - a.x) * offset / seg_len[seg],
            a.y + (b.y - a.y) * offset / seg_len[seg],
        ));
    }
    out.push(t.last());
    Trajectory::new(out)
        .map_err(|e| Error::argument(format!("resampled polyline is degenerate: {e}")))
}
