//! Pixel-grid geometry: point-in-polygon, area and line rasterization,
//! nearest-pixel queries and angular differences.
//!
//! Pixel `(c, r)` covers `[c, c+1) x [r, r+1)`. Area membership is decided at
//! pixel centers; lines are rasterized by Bresenham on the pixels that
//! contain their endpoints.

use crate::annotation::{Point2, SafetyMargin, Trajectory};
use crate::error::{Error, Result};

/// Distance tolerance for the on-boundary test.
const BOUNDARY_EPS: f64 = 1e-9;

/// Integer pixel coordinate (column, row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub col: i64,
    pub row: i64,
}

impl Pixel {
    pub const fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }

    /// The pixel containing `p`.
    pub fn containing(p: Point2) -> Self {
        Self::new(p.x.floor() as i64, p.y.floor() as i64)
    }

    pub fn as_point(&self) -> Point2 {
        Point2::new(self.col as f64, self.row as f64)
    }

    pub fn distance_sq(&self, other: &Pixel) -> i64 {
        let (dx, dy) = (self.col - other.col, self.row - other.row);
        dx * dx + dy * dy
    }
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn contains_pixel(&self, p: Pixel) -> bool {
        p.col >= 0
            && p.row >= 0
            && (p.col as usize) < self.width
            && (p.row as usize) < self.height
            && self.get(p.col as usize, p.row as usize)
    }
}

/// Ordered, duplicate-free set of in-bounds pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSet {
    width: usize,
    height: usize,
    points: Vec<Pixel>,
    membership: PixelMask,
}

impl PixelSet {
    /// Keeps the first occurrence of each pixel and drops pixels outside the grid.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = Pixel>,
    ) -> Self {
        let mut membership = PixelMask::new(width, height);
        let mut points = Vec::new();
        for p in pixels {
            if p.col < 0 || p.row < 0 || p.col as usize >= width || p.row as usize >= height {
                continue;
            }
            if !membership.get(p.col as usize, p.row as usize) {
                membership.set(p.col as usize, p.row as usize, true);
                points.push(p);
            }
        }
        Self {
            width,
            height,
            points,
            membership,
        }
    }

    pub fn points(&self) -> &[Pixel] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.membership.contains_pixel(p)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

fn on_segment(p: Point2, a: Point2, b: Point2) -> bool {
    if p.y < a.y.min(b.y) - BOUNDARY_EPS || p.y > a.y.max(b.y) + BOUNDARY_EPS {
        return false;
    }
    if p.x < a.x.min(b.x) - BOUNDARY_EPS || p.x > a.x.max(b.x) + BOUNDARY_EPS {
        return false;
    }
    let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    cross.abs() <= BOUNDARY_EPS * a.distance(&b).max(1.0)
}

// x where edge a-b crosses the horizontal line at y, for edges that straddle it
// under the half-open rule. Shared by the point test and the scanline fill so
// both make bit-identical decisions.
#[inline]
fn crossing_x(a: Point2, b: Point2, y: f64) -> Option<f64> {
    if (a.y > y) != (b.y > y) {
        Some((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x)
    } else {
        None
    }
}

/// Even-odd point-in-polygon test. Points on the ring count as inside.
pub fn point_in_polygon(p: Point2, ring: &SafetyMargin) -> bool {
    if ring.edges().any(|(a, b)| on_segment(p, a, b)) {
        return true;
    }
    let mut inside = false;
    for (a, b) in ring.edges() {
        if let Some(x) = crossing_x(a, b, p.y) {
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Pixels whose centers pass [`point_in_polygon`].
pub fn rasterize_area(m: &SafetyMargin, width: usize, height: usize) -> PixelMask {
    let mut mask = PixelMask::new(width, height);
    let edges: Vec<(Point2, Point2)> = m.edges().collect();
    let mut xs: Vec<f64> = Vec::new();
    let mut near: Vec<(Point2, Point2)> = Vec::new();
    for row in 0..height {
        let py = row as f64 + 0.5;
        xs.clear();
        near.clear();
        for &(a, b) in &edges {
            if let Some(x) = crossing_x(a, b, py) {
                xs.push(x);
            }
            if py >= a.y.min(b.y) - BOUNDARY_EPS && py <= a.y.max(b.y) + BOUNDARY_EPS {
                near.push((a, b));
            }
        }
        xs.sort_by(f64::total_cmp);
        // Number of crossings with x <= px; parity of the rest decides inside.
        let mut passed = 0usize;
        for col in 0..width {
            let px = col as f64 + 0.5;
            while passed < xs.len() && xs[passed] <= px {
                passed += 1;
            }
            let inside = (xs.len() - passed) % 2 == 1
                || near
                    .iter()
                    .any(|&(a, b)| on_segment(Point2::new(px, py), a, b));
            if inside {
                mask.set(col, row, true);
            }
        }
    }
    mask
}

/// 8-connected Bresenham line from `a` to `b`, both endpoints included.
pub fn bresenham(a: Pixel, b: Pixel) -> Vec<Pixel> {
    let (dx, dy) = ((b.col - a.col).abs(), -(b.row - a.row).abs());
    let (sx, sy) = ((b.col - a.col).signum(), (b.row - a.row).signum());
    let mut err = dx + dy;
    let (mut x, mut y) = (a.col, a.row);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(Pixel::new(x, y));
        if x == b.col && y == b.row {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

fn rasterize_path(
    vertices: impl Iterator<Item = (Point2, Point2)>,
    width: usize,
    height: usize,
) -> PixelSet {
    let pixels = vertices.flat_map(|(a, b)| bresenham(Pixel::containing(a), Pixel::containing(b)));
    PixelSet::from_pixels(width, height, pixels)
}

/// Boundary pixels of the ring, in edge order then along-edge order.
pub fn rasterize_ring(m: &SafetyMargin, width: usize, height: usize) -> PixelSet {
    rasterize_path(m.edges(), width, height)
}

/// Pixels covered by the open polyline, in traversal order.
pub fn rasterize_polyline(t: &Trajectory, width: usize, height: usize) -> PixelSet {
    let pts = t.points();
    rasterize_path(pts.windows(2).map(|w| (w[0], w[1])), width, height)
}

/// Member of `s` closest to `p`; ties go to the earliest member.
pub fn nearest_point(p: Point2, s: &PixelSet) -> Result<(Point2, f64)> {
    let mut best: Option<(f64, Pixel)> = None;
    for &q in s.points() {
        let (dx, dy) = (q.col as f64 - p.x, q.row as f64 - p.y);
        let d2 = dx * dx + dy * dy;
        if best.is_none_or(|(bd, _)| d2 < bd) {
            best = Some((d2, q));
        }
    }
    best.map(|(d2, q)| (q.as_point(), d2.sqrt()))
        .ok_or_else(|| Error::argument("nearest_point on an empty pixel set"))
}

/// Unsigned angle in `[0, π]` between two non-zero vectors.
pub fn angular_difference(reference: (f64, f64), v: (f64, f64)) -> Result<f64> {
    if reference == (0.0, 0.0) || v == (0.0, 0.0) {
        return Err(Error::argument("angular difference of a zero vector"));
    }
    Ok(angle_between(reference, v))
}

// atan2(|cross|, dot): well conditioned near 0 and π, unlike acos of a cosine.
#[inline]
pub(crate) fn angle_between(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    cross.abs().atan2(dot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ring(pts: &[[f64; 2]]) -> SafetyMargin {
        SafetyMargin::new(pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    fn unit_square() -> SafetyMargin {
        ring(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    #[test]
    fn pip_unit_square() {
        let sq = unit_square();
        assert!(point_in_polygon(Point2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Point2::new(2.0, 0.5), &sq));
        assert!(point_in_polygon(Point2::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(Point2::new(0.0, 0.0), &sq));
        assert!(!point_in_polygon(Point2::new(1.0 + 1e-6, 0.5), &sq));
    }

    #[test]
    fn pip_self_intersecting_uses_even_odd() {
        // Bow-tie: the two lobes are inside, the crossing point is on the ring.
        let bow = ring(&[[0.0, 0.0], [4.0, 4.0], [4.0, 0.0], [0.0, 6.0]]);
        assert!(point_in_polygon(Point2::new(0.5, 2.0), &bow));
        assert!(point_in_polygon(Point2::new(3.5, 2.0), &bow));
        assert!(point_in_polygon(Point2::new(2.4, 2.4), &bow));
        assert!(!point_in_polygon(Point2::new(2.0, 0.5), &bow));
    }

    #[test]
    fn area_square_pixel_centers() {
        let sq = ring(&[[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]);
        let mask = rasterize_area(&sq, 8, 8);
        assert_eq!(mask.count(), 16);
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(mask.get(c, r), c < 4 && r < 4);
            }
        }
    }

    #[test]
    fn area_thin_triangle_is_empty() {
        let thin = ring(&[[1.1, 1.1], [6.9, 1.2], [6.9, 1.3]]);
        assert!(rasterize_area(&thin, 8, 8).is_empty());
    }

    #[test]
    fn area_matches_pointwise_on_boundary_centers() {
        // Edges pass exactly through pixel centers.
        let diamond = ring(&[[4.5, 0.5], [8.5, 4.5], [4.5, 8.5], [0.5, 4.5]]);
        let mask = rasterize_area(&diamond, 10, 10);
        for r in 0..10 {
            for c in 0..10 {
                let p = Point2::new(c as f64 + 0.5, r as f64 + 0.5);
                assert_eq!(mask.get(c, r), point_in_polygon(p, &diamond), "({c},{r})");
            }
        }
        assert!(mask.get(4, 0) && mask.get(0, 4) && mask.get(8, 4));
    }

    #[test]
    fn ring_horizontal_edge() {
        let r = ring(&[[0.0, 0.0], [3.0, 0.0], [3.0, 3.0]]);
        let set = rasterize_ring(&r, 8, 8);
        for c in 0..=3 {
            assert!(set.contains(Pixel::new(c, 0)));
        }
        assert_eq!(set.points()[..4], [0, 1, 2, 3].map(|c| Pixel::new(c, 0)));
    }

    #[test]
    fn unit_edge_has_one_or_two_pixels() {
        assert_eq!(bresenham(Pixel::new(2, 2), Pixel::new(3, 2)).len(), 2);
        assert_eq!(bresenham(Pixel::new(2, 2), Pixel::new(2, 2)).len(), 1);
        let seg = Trajectory::new(vec![Point2::new(2.2, 2.2), Point2::new(2.9, 3.1)]).unwrap();
        let n = rasterize_polyline(&seg, 8, 8).len();
        assert!((1..=2).contains(&n));
    }

    #[test]
    fn diagonal_edge_is_exact_diagonal() {
        let line = bresenham(Pixel::new(0, 0), Pixel::new(3, 3));
        assert_eq!(line, (0..4).map(|i| Pixel::new(i, i)).collect::<Vec<_>>());
        let t = Trajectory::new(vec![Point2::new(0.0, 0.0), Point2::new(3.0, 3.0)]).unwrap();
        assert_eq!(rasterize_polyline(&t, 8, 8).points(), line.as_slice());
    }

    #[test]
    fn polyline_dedups_shared_vertex() {
        let t = Trajectory::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 2.0),
        ])
        .unwrap();
        let set = rasterize_polyline(&t, 8, 8);
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn ring_clipped_to_grid() {
        let r = ring(&[[0.0, 0.0], [9.0, 0.0], [9.0, 9.0], [0.0, 9.0]]);
        let set = rasterize_ring(&r, 5, 5);
        assert!(set.points().iter().all(|p| p.col < 5 && p.row < 5));
        assert_eq!(set.len(), 9);
    }

    #[test]
    fn nearest_basic() {
        let s = PixelSet::from_pixels(10, 10, [Pixel::new(3, 4), Pixel::new(6, 8)]);
        let (p, d) = nearest_point(Point2::new(0.0, 0.0), &s).unwrap();
        assert_eq!((p, d), (Point2::new(3.0, 4.0), 5.0));
        let (p, d) = nearest_point(Point2::new(6.0, 8.0), &s).unwrap();
        assert_eq!((p, d), (Point2::new(6.0, 8.0), 0.0));
    }

    #[test]
    fn nearest_ties_take_first() {
        let s = PixelSet::from_pixels(10, 10, [Pixel::new(2, 0), Pixel::new(0, 2)]);
        assert_eq!(
            nearest_point(Point2::new(0.0, 0.0), &s).unwrap().0,
            Point2::new(2.0, 0.0)
        );
        let s = PixelSet::from_pixels(10, 10, [Pixel::new(0, 2), Pixel::new(2, 0)]);
        assert_eq!(
            nearest_point(Point2::new(0.0, 0.0), &s).unwrap().0,
            Point2::new(0.0, 2.0)
        );
    }

    #[test]
    fn nearest_empty_is_error() {
        let s = PixelSet::from_pixels(4, 4, []);
        assert!(matches!(
            nearest_point(Point2::new(0.0, 0.0), &s),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn angular_difference_cases() {
        assert_eq!(
            angular_difference((1.0, 0.0), (0.0, 1.0)).unwrap(),
            PI / 2.0
        );
        assert_eq!(angular_difference((1.0, 0.0), (1.0, 0.0)).unwrap(), 0.0);
        assert!(
            (angular_difference((1.0, 0.0), (-1.0, 1.0)).unwrap() - 3.0 * PI / 4.0).abs() < 1e-15
        );
        assert_eq!(angular_difference((1.0, 0.0), (-2.0, 0.0)).unwrap(), PI);
        assert!(angular_difference((0.0, 0.0), (1.0, 0.0)).is_err());
        assert!(angular_difference((1.0, 0.0), (0.0, 0.0)).is_err());
    }
}
