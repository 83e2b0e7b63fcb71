//! Marking paths: closed, quantized waypoint loops in millimetres.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::calib::{PhysicalCalibration, PhysicalPoint, PixelAnchor};
use crate::error::{Error, Result};
use crate::hull::ConvexPolygon;

/// Smallest step of the marking device, in millimetres.
pub const DEFAULT_MIN_STEP_MM: f64 = 0.03;

/// Waypoint budget per defect.
pub const DEFAULT_MAX_POINTS: usize = 2000;

/// First line of a waypoint file.
pub const WAYPOINT_HEADER: &str = "# maskpath-waypoints v1";

// Relative slack on step comparisons so that an edge split into exactly
// `len / min_step` pieces is not rejected for rounding.
const STEP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub point: PhysicalPoint,
    /// Polygon vertices (and the closing repeat) are forced; interpolated
    /// points are not.
    pub forced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkingPath {
    pub defect_id: u32,
    pub waypoints: Vec<Waypoint>,
    pub closed: bool,
    /// Planned from a point or segment hull.
    pub degenerate: bool,
    pub min_step_mm: f64,
}

impl MarkingPath {
    /// A path read back from a file; nothing is marked forced.
    pub fn from_points(defect_id: u32, points: &[PhysicalPoint], min_step_mm: f64) -> Self {
        let closed = points.len() == 1 || (points.len() > 1 && points.first() == points.last());
        MarkingPath {
            defect_id,
            waypoints: points.iter().map(|&point| Waypoint { point, forced: false }).collect(),
            closed,
            degenerate: points.len() <= 2,
            min_step_mm,
        }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn points(&self) -> Vec<PhysicalPoint> {
        self.waypoints.iter().map(|w| w.point).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub min_step_mm: f64,
    pub interpolate: bool,
    pub anchor: PixelAnchor,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            min_step_mm: DEFAULT_MIN_STEP_MM,
            interpolate: false,
            anchor: PixelAnchor::TopLeft,
        }
    }
}

fn lex_yx(a: &PhysicalPoint, b: &PhysicalPoint) -> std::cmp::Ordering {
    a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x))
}

struct Builder {
    min_step: f64,
    out: Vec<Waypoint>,
}

impl Builder {
    fn too_close(&self, a: &PhysicalPoint, b: &PhysicalPoint) -> bool {
        a.distance(b) < self.min_step * (1.0 - STEP_EPS)
    }

    /// Appends unless within `min_step` of the previous waypoint.
    fn push(&mut self, point: PhysicalPoint, forced: bool) {
        if let Some(last) = self.out.last() {
            if self.too_close(&last.point, &point) {
                return;
            }
        }
        self.out.push(Waypoint { point, forced });
    }

    /// Emits the interior subdivision points of `a → b`.
    fn interior(&mut self, a: PhysicalPoint, b: PhysicalPoint) {
        let len = a.distance(&b);
        let pieces = ((len / self.min_step) * (1.0 + STEP_EPS)).floor().max(1.0) as usize;
        for k in 1..pieces {
            let t = k as f64 / pieces as f64;
            self.push(PhysicalPoint::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t), false);
        }
    }
}

/// Projects a pixel-space hull to millimetres and lays out its marking path.
///
/// The path starts at the vertex with the smallest `(y, x)`, follows the
/// hull's counterclockwise order and repeats the start vertex at the end.
/// With `interpolate`, each edge is split into equal pieces no shorter than
/// `min_step_mm`. Waypoints closer than `min_step_mm` to their predecessor
/// are dropped. Point and segment hulls give open one- or two-ended paths
/// flagged as degenerate.
pub fn plan_path(
    poly: &ConvexPolygon,
    cal: &PhysicalCalibration,
    options: &PlanOptions,
    defect_id: u32,
) -> Result<MarkingPath> {
    if poly.is_empty() {
        return Err(Error::Argument("cannot plan a path for an empty polygon".into()));
    }
    if !(options.min_step_mm > 0.0 && options.min_step_mm.is_finite()) {
        return Err(Error::Argument(format!(
            "min step must be positive, got {}",
            options.min_step_mm
        )));
    }
    let mut verts: Vec<PhysicalPoint> = poly
        .vertices()
        .iter()
        .map(|&p| cal.to_physical(p, options.anchor))
        .collect();
    let start = verts
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| lex_yx(a, b))
        .map(|(i, _)| i)
        .unwrap_or(0);
    verts.rotate_left(start);

    let mut b = Builder {
        min_step: options.min_step_mm,
        out: Vec::with_capacity(verts.len() + 1),
    };
    b.push(verts[0], true);

    let degenerate = verts.len() < 3;
    for pair in verts.windows(2) {
        if options.interpolate {
            b.interior(pair[0], pair[1]);
        }
        b.push(pair[1], true);
    }
    if !degenerate {
        let (last, first) = (verts[verts.len() - 1], verts[0]);
        if options.interpolate {
            b.interior(last, first);
        }
        // tail waypoints crowding the start give way to the closing repeat
        while b.out.len() > 1 && b.too_close(&b.out[b.out.len() - 1].point, &first) {
            b.out.pop();
        }
        if b.out.len() > 1 {
            b.out.push(Waypoint { point: first, forced: true });
        }
    }

    let waypoints = b.out;
    let closed = waypoints.len() == 1 || (waypoints.len() > 1 && waypoints.first() == waypoints.last());
    Ok(MarkingPath {
        defect_id,
        degenerate: degenerate || waypoints.len() == 1,
        closed,
        waypoints,
        min_step_mm: options.min_step_mm,
    })
}

/// A problem found by [`validate_path`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    TooManyWaypoints { count: usize, max: usize },
    /// Waypoints `index - 1` and `index` sit closer than the minimum step.
    StepTooShort { index: usize, distance_mm: f64 },
    /// The last waypoint does not return to the first.
    NotClosed,
    Empty,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a path against the waypoint budget, the step constraint and closure.
///
/// A step between two forced waypoints may be short; a zero-length step never
/// passes. Degenerate paths are exempt from the closure check.
pub fn validate_path(path: &MarkingPath, max_points: usize) -> ValidationReport {
    let mut violations = Vec::new();
    let wp = &path.waypoints;
    if wp.is_empty() {
        violations.push(Violation::Empty);
        return ValidationReport { violations };
    }
    if wp.len() > max_points {
        violations.push(Violation::TooManyWaypoints { count: wp.len(), max: max_points });
    }
    let limit = path.min_step_mm * (1.0 - STEP_EPS);
    for (i, pair) in wp.windows(2).enumerate() {
        let d = pair[0].point.distance(&pair[1].point);
        let both_forced = pair[0].forced && pair[1].forced;
        if d == 0.0 || (d < limit && !both_forced) {
            violations.push(Violation::StepTooShort { index: i + 1, distance_mm: d });
        }
    }
    let returns = wp.len() == 1 || (wp.len() > 2 && wp.first().map(|w| w.point) == wp.last().map(|w| w.point));
    if !path.degenerate && !returns {
        violations.push(Violation::NotClosed);
    }
    ValidationReport { violations }
}

fn fmt_mm(v: f64) -> String {
    let s = format!("{v:.4}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Serializes paths as `defect_id,seq,x_mm,y_mm` rows under [`WAYPOINT_HEADER`].
pub fn write_waypoints(paths: &[MarkingPath]) -> String {
    let mut out = String::new();
    out.push_str(WAYPOINT_HEADER);
    out.push('\n');
    for path in paths {
        for (seq, w) in path.waypoints.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                path.defect_id,
                seq,
                fmt_mm(w.point.x),
                fmt_mm(w.point.y)
            );
        }
    }
    out
}

/// Parses a waypoint file into per-defect point lists, in file order.
pub fn read_waypoints(text: &str) -> Result<Vec<(u32, Vec<PhysicalPoint>)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == WAYPOINT_HEADER => {}
        other => {
            return Err(Error::format("waypoints", format!("bad header line {other:?}")));
        }
    }
    let mut groups: Vec<(u32, Vec<PhysicalPoint>)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: &str| Error::format("waypoints", format!("line {lineno}: {why}"));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [id, seq, x, y] = fields.as_slice() else {
            return Err(bad("expected 4 comma-separated fields"));
        };
        let id: u32 = id.parse().map_err(|_| bad("bad defect_id"))?;
        let seq: usize = seq.parse().map_err(|_| bad("bad seq"))?;
        let x: f64 = x.parse().map_err(|_| bad("bad x_mm"))?;
        let y: f64 = y.parse().map_err(|_| bad("bad y_mm"))?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(bad("non-finite coordinate"));
        }
        match groups.last_mut() {
            Some((gid, pts)) if *gid == id => {
                if seq != pts.len() {
                    return Err(bad("seq out of order"));
                }
                pts.push(PhysicalPoint::new(x, y));
            }
            _ => {
                if seq != 0 {
                    return Err(bad("path does not start at seq 0"));
                }
                if groups.iter().any(|(gid, _)| *gid == id) {
                    return Err(bad("defect rows are not contiguous"));
                }
                groups.push((id, vec![PhysicalPoint::new(x, y)]));
            }
        }
    }
    Ok(groups)
}
