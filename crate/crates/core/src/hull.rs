//! Graham-scan convex polygonization.
//!
//! Orientation uses the usual shoelace sign convention: a counterclockwise
//! polygon has positive signed area and every consecutive vertex triple has a
//! positive cross product.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer pixel coordinate. Ordered row-major: by `y`, then by `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: i64,
    pub y: i64,
}

impl PixelPoint {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

impl Ord for PixelPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for PixelPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cross product of `(a - o) × (b - o)`; positive for a left turn.
#[inline]
pub fn cross(o: PixelPoint, a: PixelPoint, b: PixelPoint) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullKind {
    Point,
    Segment,
    Polygon,
}

/// Counterclockwise convex vertex loop, implicitly closed.
///
/// Fewer than three vertices is a degenerate hull (a point or a segment).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvexPolygon {
    vertices: Vec<PixelPoint>,
}

impl ConvexPolygon {
    pub fn vertices(&self) -> &[PixelPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn kind(&self) -> HullKind {
        match self.vertices.len() {
            1 => HullKind::Point,
            2 => HullKind::Segment,
            _ => HullKind::Polygon,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Twice the signed shoelace area.
    pub fn doubled_signed_area(&self) -> i64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.x * b.y - b.x * a.y
            })
            .sum()
    }

    /// Inside-or-on test, exact in integer arithmetic. Degenerate hulls
    /// contain only the points of their point or segment.
    pub fn contains(&self, p: PixelPoint) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => v[0] == p,
            2 => on_segment(v[0], v[1], p),
            n => (0..n).all(|i| cross(v[i], v[(i + 1) % n], p) >= 0),
        }
    }

    pub fn translated(&self, dx: i64, dy: i64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|p| PixelPoint::new(p.x + dx, p.y + dy)).collect(),
        }
    }

    /// One `x y` pair per line, in vertex order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }

    /// Parses [`ConvexPolygon::to_text`] output. The vertices are re-hulled, so
    /// any point list is accepted and normalized.
    pub fn from_text(text: &str) -> Result<ConvexPolygon> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<i64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => points.push(PixelPoint::new(x, y)),
                _ => {
                    return Err(Error::format(
                        "polygon",
                        format!("line {}: expected `x y`, got {line:?}", lineno + 1),
                    ))
                }
            }
        }
        convex_hull(&points)
    }
}

fn on_segment(a: PixelPoint, b: PixelPoint, p: PixelPoint) -> bool {
    cross(a, b, p) == 0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

/// Graham scan over `points`.
///
/// The pivot is the lowest point (smallest `y`, then smallest `x`); the rest
/// are sorted by polar angle around it, nearer first on ties. Collinear points
/// along hull edges are dropped, so only extreme vertices remain. The vertex
/// list starts at the pivot and runs counterclockwise.
pub fn convex_hull(points: &[PixelPoint]) -> Result<ConvexPolygon> {
    if points.is_empty() {
        return Err(Error::Argument("convex hull of an empty point set".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    let pivot = pts[0];
    let rest = &mut pts[1..];
    rest.sort_by(|&a, &b| {
        // every point lies at or above the pivot, so angles fall in [0, π)
        match cross(pivot, a, b) {
            c if c > 0 => Ordering::Less,
            c if c < 0 => Ordering::Greater,
            _ => dist2(pivot, a).cmp(&dist2(pivot, b)),
        }
    });

    let mut stack: Vec<PixelPoint> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while stack.len() >= 2 && cross(stack[stack.len() - 2], stack[stack.len() - 1], p) <= 0 {
            stack.pop();
        }
        stack.push(p);
    }
    Ok(ConvexPolygon { vertices: stack })
}

fn dist2(a: PixelPoint, b: PixelPoint) -> i64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    dx * dx + dy * dy
}
