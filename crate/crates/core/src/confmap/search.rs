//! Uniform-grid index over a pixel set.
//!
//! Both queries return exactly what a linear scan over the set would return,
//! including tie-breaks by set order: cells are only skipped when a lower
//! bound proves none of their members can win or tie.

use crate::geom::{angle_between, Pixel, PixelSet};

const CELL: i64 = 32;
// Slack on angular lower bounds; far larger than atan2/cos rounding error.
const ANGLE_SLACK: f64 = 1e-9;
const COS_SLACK: f64 = 1e-12;

struct Cell {
    members: Vec<u32>,
    min: Pixel,
    max: Pixel,
}

impl Cell {
    fn distance_sq_lower_bound(&self, q: Pixel) -> i64 {
        let dx = (self.min.col - q.col).max(q.col - self.max.col).max(0);
        let dy = (self.min.row - q.row).max(q.row - self.max.row).max(0);
        dx * dx + dy * dy
    }

    fn contains_point(&self, q: Pixel) -> bool {
        (self.min.col..=self.max.col).contains(&q.col)
            && (self.min.row..=self.max.row).contains(&q.row)
    }

    fn corners(&self) -> [Pixel; 4] {
        [
            self.min,
            Pixel::new(self.max.col, self.min.row),
            self.max,
            Pixel::new(self.min.col, self.max.row),
        ]
    }
}

/// Where a cell sits relative to the reference ray from the query pixel.
enum Bearing {
    /// May contain directions within any angle of the ray; scan it.
    Straddles,
    /// Entirely on one side of the ray's line: extreme angles are at corners.
    OneSided,
    /// Crosses the line only behind q: every angle is at least π/2.
    Behind,
}

/// Whether `dot / (|r| |v|) >= cos_floor`, without square roots.
fn cos_at_least(dot: f64, r2: f64, v2: f64, cos_floor: f64) -> bool {
    let bound = cos_floor * cos_floor * r2 * v2;
    if cos_floor <= 0.0 {
        dot >= 0.0 || dot * dot <= bound
    } else {
        dot > 0.0 && dot * dot >= bound
    }
}

pub(crate) struct PixelGrid<'a> {
    set: &'a PixelSet,
    cols: i64,
    rows: i64,
    cells: Vec<Cell>,
    occupied: Vec<usize>,
}

impl<'a> PixelGrid<'a> {
    pub(crate) fn new(set: &'a PixelSet) -> Self {
        let cols = (set.width() as i64 + CELL - 1) / CELL;
        let rows = (set.height() as i64 + CELL - 1) / CELL;
        let mut cells: Vec<Cell> = (0..cols * rows)
            .map(|_| Cell {
                members: Vec::new(),
                min: Pixel::new(i64::MAX, i64::MAX),
                max: Pixel::new(i64::MIN, i64::MIN),
            })
            .collect();
        for (i, p) in set.points().iter().enumerate() {
            let cell = &mut cells[((p.row / CELL) * cols + p.col / CELL) as usize];
            cell.members.push(i as u32);
            cell.min = Pixel::new(cell.min.col.min(p.col), cell.min.row.min(p.row));
            cell.max = Pixel::new(cell.max.col.max(p.col), cell.max.row.max(p.row));
        }
        let occupied = (0..cells.len())
            .filter(|&i| !cells[i].members.is_empty())
            .collect();
        Self {
            set,
            cols,
            rows,
            cells,
            occupied,
        }
    }

    pub(crate) fn pixel(&self, idx: usize) -> Pixel {
        self.set.points()[idx]
    }

    /// Index of the member nearest to `q`, lowest index among equals.
    pub(crate) fn nearest(&self, q: Pixel) -> Option<usize> {
        if self.occupied.is_empty() {
            return None;
        }
        let (qc, qr) = (q.col.div_euclid(CELL), q.row.div_euclid(CELL));
        let mut best: Option<(i64, u32)> = None;
        let max_ring = self.cols.max(self.rows) + qc.abs().max(qr.abs());
        for ring in 0..=max_ring {
            if ring > 0 {
                let gap = (ring - 1) * CELL + 1;
                if best.is_some_and(|(d2, _)| gap * gap > d2) {
                    break;
                }
            }
            for (cc, cr) in ring_cells(qc, qr, ring) {
                if cc < 0 || cr < 0 || cc >= self.cols || cr >= self.rows {
                    continue;
                }
                for &idx in &self.cells[(cr * self.cols + cc) as usize].members {
                    let d2 = self.pixel(idx as usize).distance_sq(&q);
                    if best.is_none_or(|b| (d2, idx) < b) {
                        best = Some((d2, idx));
                    }
                }
            }
        }
        best.map(|(_, idx)| idx as usize)
    }

    /// Member minimizing the angle between `reference` and the direction from
    /// `q` to the member, among members whose squared distance from `q` passes
    /// `admits`. `admits` must be monotone (true up to some distance, false
    /// beyond). Returns the lowest index among exactly equal angles.
    pub(crate) fn best_aligned(
        &self,
        q: Pixel,
        reference: (f64, f64),
        admits: impl Fn(i64) -> bool,
    ) -> Option<usize> {
        let mut best: Option<(f64, u32)> = None;
        // Pass 1 scans cells the ray may cross; pass 2 revisits the rest
        // only when their corner bound can beat or tie the best so far.
        let mut deferred: Vec<(&Cell, Bearing)> = Vec::with_capacity(self.occupied.len());
        for &ci in &self.occupied {
            let cell = &self.cells[ci];
            if !admits(cell.distance_sq_lower_bound(q)) {
                continue;
            }
            match bearing(cell, q, reference) {
                Bearing::Straddles => self.scan(cell, q, reference, &admits, &mut best),
                b => deferred.push((cell, b)),
            }
        }

        let cos_floor = match best {
            Some((angle, _)) if angle + ANGLE_SLACK < std::f64::consts::PI => {
                (angle + ANGLE_SLACK).cos() - COS_SLACK
            }
            _ => f64::NEG_INFINITY,
        };
        let r2 = reference.0 * reference.0 + reference.1 * reference.1;
        for (cell, b) in deferred {
            let reachable = match b {
                Bearing::Straddles => false,
                Bearing::Behind => cos_floor <= 0.0,
                _ => cell.corners().iter().any(|c| {
                    let v = ((c.col - q.col) as f64, (c.row - q.row) as f64);
                    let dot = reference.0 * v.0 + reference.1 * v.1;
                    cos_at_least(dot, r2, v.0 * v.0 + v.1 * v.1, cos_floor)
                }),
            };
            if reachable {
                self.scan(cell, q, reference, &admits, &mut best);
            }
        }
        best.map(|(_, idx)| idx as usize)
    }

    fn scan(
        &self,
        cell: &Cell,
        q: Pixel,
        reference: (f64, f64),
        admits: &impl Fn(i64) -> bool,
        best: &mut Option<(f64, u32)>,
    ) {
        for &idx in &cell.members {
            let e = self.pixel(idx as usize);
            if !admits(e.distance_sq(&q)) {
                continue;
            }
            let v = ((e.col - q.col) as f64, (e.row - q.row) as f64);
            let angle = angle_between(reference, v);
            if best.is_none_or(|(ba, bi)| angle < ba || (angle == ba && idx < bi)) {
                *best = Some((angle, idx));
            }
        }
    }
}

fn bearing(cell: &Cell, q: Pixel, reference: (f64, f64)) -> Bearing {
    if cell.contains_point(q) {
        return Bearing::Straddles;
    }
    // Center and half extents of the bbox; all values are exact half-integers.
    let cx = (cell.min.col + cell.max.col) as f64 / 2.0 - q.col as f64;
    let cy = (cell.min.row + cell.max.row) as f64 / 2.0 - q.row as f64;
    let hx = (cell.max.col - cell.min.col) as f64 / 2.0;
    let hy = (cell.max.row - cell.min.row) as f64 / 2.0;
    let (ax, ay) = (reference.0.abs(), reference.1.abs());
    let cross = reference.0 * cy - reference.1 * cx;
    let dot = reference.0 * cx + reference.1 * cy;
    let straddles = cross.abs() <= ay * hx + ax * hy;
    let ahead = dot + ax * hx + ay * hy > 0.0;
    match (straddles, ahead) {
        (false, _) => Bearing::OneSided,
        (true, false) => Bearing::Behind,
        (true, true) => Bearing::Straddles,
    }
}

fn ring_cells(cx: i64, cy: i64, ring: i64) -> impl Iterator<Item = (i64, i64)> {
    let span = -ring..=ring;
    span.clone().flat_map(move |dy| {
        let step = if dy.abs() == ring {
            1
        } else {
            (2 * ring).max(1)
        };
        (-ring..=ring)
            .step_by(step as usize)
            .map(move |dx| (cx + dx, cy + dy))
    })
}
