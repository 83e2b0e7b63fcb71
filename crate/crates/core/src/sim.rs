//! Software marker: draws waypoint paths back into pixel space and scores how
//! well a hull covers the defect it was derived from.

use serde::{Deserialize, Serialize};

use crate::calib::{PhysicalCalibration, PixelAnchor};
use crate::error::Result;
use crate::hull::{ConvexPolygon, HullKind, PixelPoint};
use crate::mask::{BinaryMask, DefectRegion};
use crate::path::MarkingPath;

/// Integer line from `a` to `b`, endpoints included (Bresenham, all octants).
pub fn line_pixels(a: PixelPoint, b: PixelPoint) -> Vec<PixelPoint> {
    let (dx, dy) = ((b.x - a.x).abs(), -(b.y - a.y).abs());
    let (sx, sy) = (if a.x < b.x { 1 } else { -1 }, if a.y < b.y { 1 } else { -1 });
    let mut err = dx + dy;
    let (mut x, mut y) = (a.x, a.y);
    let mut out = Vec::with_capacity((dx.max(-dy) + 1) as usize);
    loop {
        out.push(PixelPoint::new(x, y));
        if x == b.x && y == b.y {
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

#[derive(Debug, Clone, PartialEq)]
pub struct Rasterized {
    pub canvas: BinaryMask,
    /// Waypoints whose pixel fell outside the canvas.
    pub clipped_waypoints: usize,
}

/// Draws `path` onto a fresh canvas; see [`rasterize_onto`].
pub fn rasterize_path(
    path: &MarkingPath,
    cal: &PhysicalCalibration,
    anchor: PixelAnchor,
    canvas_width: u32,
    canvas_height: u32,
) -> Result<Rasterized> {
    let mut canvas = BinaryMask::new(canvas_width, canvas_height)?;
    let clipped_waypoints = rasterize_onto(&mut canvas, path, cal, anchor);
    Ok(Rasterized { canvas, clipped_waypoints })
}

/// Maps each waypoint back to its nearest pixel and strokes consecutive pairs
/// with one-pixel lines. Stroke pixels outside the canvas are dropped.
/// Returns the number of waypoints that landed outside.
pub fn rasterize_onto(
    canvas: &mut BinaryMask,
    path: &MarkingPath,
    cal: &PhysicalCalibration,
    anchor: PixelAnchor,
) -> usize {
    let (w, h) = (canvas.width() as i64, canvas.height() as i64);
    let inside = |p: &PixelPoint| p.x >= 0 && p.y >= 0 && p.x < w && p.y < h;
    let pixels: Vec<PixelPoint> = path
        .waypoints
        .iter()
        .map(|wp| cal.to_pixel(wp.point, anchor))
        .collect();
    let clipped = pixels.iter().filter(|p| !inside(p)).count();

    let mut stroke = |p: PixelPoint| {
        if inside(&p) {
            canvas.set(p.x as u32, p.y as u32, true);
        }
    };
    match pixels.as_slice() {
        [] => {}
        [only] => stroke(*only),
        _ => {
            for pair in pixels.windows(2) {
                line_pixels(pair[0], pair[1]).into_iter().for_each(&mut stroke);
            }
        }
    }
    clipped
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub defect_id: u32,
    /// Lattice pixels inside or on the hull.
    pub hull_area_px: u64,
    pub defect_area_px: u64,
    pub defect_pixels_inside_hull: u64,
    pub containment_ratio: f64,
    pub excess_ratio: f64,
}

// Degenerate hulls cover pixels within this distance of their point or segment.
const DEGENERATE_BAND_PX: f64 = 0.5;

fn segment_distance(a: PixelPoint, b: PixelPoint, p: PixelPoint) -> f64 {
    let (ax, ay, bx, by, px, py) = (a.x as f64, a.y as f64, b.x as f64, b.y as f64, p.x as f64, p.y as f64);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    (px - (ax + t * dx)).hypot(py - (ay + t * dy))
}

/// Whether the hull covers pixel `p`; boundary pixels count as covered.
pub fn covers(hull: &ConvexPolygon, p: PixelPoint) -> bool {
    let v = hull.vertices();
    match hull.kind() {
        HullKind::Polygon => hull.contains(p),
        HullKind::Point => segment_distance(v[0], v[0], p) <= DEGENERATE_BAND_PX,
        HullKind::Segment => segment_distance(v[0], v[1], p) <= DEGENERATE_BAND_PX,
    }
}

/// Scores `hull` against `region`; both in the same pixel frame.
pub fn fidelity(hull: &ConvexPolygon, region: &DefectRegion) -> FidelityReport {
    let verts = hull.vertices();
    let hull_area_px = if verts.is_empty() {
        0
    } else {
        let (min_x, max_x) = (verts.iter().map(|p| p.x).min().unwrap(), verts.iter().map(|p| p.x).max().unwrap());
        let (min_y, max_y) = (verts.iter().map(|p| p.y).min().unwrap(), verts.iter().map(|p| p.y).max().unwrap());
        let mut count = 0u64;
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                if covers(hull, PixelPoint::new(x, y)) {
                    count += 1;
                }
            }
        }
        count
    };
    let defect_area_px = region.len() as u64;
    let inside = region.pixels().iter().filter(|&&p| covers(hull, p)).count() as u64;
    let (containment_ratio, excess_ratio) = if defect_area_px == 0 {
        (0.0, 0.0)
    } else {
        (
            inside as f64 / defect_area_px as f64,
            (hull_area_px - inside) as f64 / defect_area_px as f64,
        )
    };
    FidelityReport {
        defect_id: region.region_id,
        hull_area_px,
        defect_area_px,
        defect_pixels_inside_hull: inside,
        containment_ratio,
        excess_ratio,
    }
}

/// CSV header for fidelity rows.
pub const FIDELITY_CSV_HEADER: &str = "defect_id,containment_ratio,excess_ratio,hull_area_px,defect_area_px";

impl FidelityReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{}",
            self.defect_id, self.containment_ratio, self.excess_ratio, self.hull_area_px, self.defect_area_px
        )
    }
}
