//! Polygon annotation files (the LabelMe-style JSON used for ground truth).
//!
//! ```json
//! {"image": "a.png", "width": 400, "height": 400,
//!  "shapes": [{"label": "tick_bite", "points": [[10, 12], [30, 12], [20, 40]]}]}
//! ```
//!
//! LabelMe's own `imagePath` / `imageWidth` / `imageHeight` keys are accepted
//! as aliases. Integer coordinates name pixel centres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{ConvexPolygon, PixelPoint};
use crate::mask::DefectRegion;
use crate::sim::line_pixels;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    #[serde(default)]
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonAnnotation {
    #[serde(alias = "imagePath")]
    pub image: String,
    #[serde(alias = "imageWidth")]
    pub width: u32,
    #[serde(alias = "imageHeight")]
    pub height: u32,
    #[serde(default)]
    pub shapes: Vec<Shape>,
}

impl PolygonAnnotation {
    pub fn from_json(text: &str) -> Result<Self> {
        let ann: PolygonAnnotation =
            serde_json::from_str(text).map_err(|e| Error::format("annotation", e.to_string()))?;
        if ann.width == 0 || ann.height == 0 {
            return Err(Error::format("annotation", "image dimensions must be positive"));
        }
        for (i, s) in ann.shapes.iter().enumerate() {
            if s.points.is_empty() {
                return Err(Error::format("annotation", format!("shape {i} has no points")));
            }
            if s.points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::format("annotation", format!("shape {i} has a non-finite point")));
            }
        }
        Ok(ann)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("annotation serializes")
    }

    /// One shape per hull, labelled `defect`.
    pub fn from_polygons(image: &str, width: u32, height: u32, hulls: &[ConvexPolygon]) -> Self {
        PolygonAnnotation {
            image: image.to_string(),
            width,
            height,
            shapes: hulls
                .iter()
                .map(|h| Shape {
                    label: "defect".to_string(),
                    points: h.vertices().iter().map(|p| [p.x as f64, p.y as f64]).collect(),
                })
                .collect(),
        }
    }

    /// Rasterizes each shape into a region clipped to the image, numbered by
    /// shape order from 1. Shapes with no pixel inside the image are skipped.
    pub fn to_regions(&self) -> Vec<DefectRegion> {
        self.shapes
            .iter()
            .filter_map(|s| rasterize_shape(&s.points, self.width, self.height))
            .enumerate()
            .filter_map(|(i, px)| DefectRegion::from_pixels(i as u32 + 1, px))
            .collect()
    }
}

fn inside_even_odd(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let ([xi, yi], [xj, yj]) = (poly[i], poly[j]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Filled interior plus the outline through the rounded vertices.
fn rasterize_shape(points: &[[f64; 2]], width: u32, height: u32) -> Option<Vec<PixelPoint>> {
    let in_image = |p: &PixelPoint| p.x >= 0 && p.y >= 0 && p.x < width as i64 && p.y < height as i64;
    let mut pixels = Vec::new();

    let lo_x = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as i64;
    let hi_x = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).ceil().min(width as f64 - 1.0) as i64;
    let lo_y = points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as i64;
    let hi_y = points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).ceil().min(height as f64 - 1.0) as i64;
    if points.len() >= 3 {
        for y in lo_y..=hi_y {
            for x in lo_x..=hi_x {
                if inside_even_odd(points, x as f64, y as f64) {
                    pixels.push(PixelPoint::new(x, y));
                }
            }
        }
    }

    let verts: Vec<PixelPoint> = points
        .iter()
        .map(|p| PixelPoint::new(p[0].round() as i64, p[1].round() as i64))
        .collect();
    for (i, &a) in verts.iter().enumerate() {
        let b = verts[(i + 1) % verts.len()];
        pixels.extend(line_pixels(a, b));
    }
    pixels.retain(in_image);
    (!pixels.is_empty()).then_some(pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::convex_hull;

    #[test]
    fn parses_and_rasterizes_square() {
        let json = r#"{"image":"a.png","width":10,"height":10,
            "shapes":[{"label":"tick","points":[[1,1],[4,1],[4,4],[1,4]]}]}"#;
        let ann = PolygonAnnotation::from_json(json).unwrap();
        let regions = ann.to_regions();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].len(), 16);
    }

    #[test]
    fn labelme_keys_are_accepted() {
        let json = r#"{"imagePath":"b.jpg","imageWidth":5,"imageHeight":5,"version":"4.5",
            "shapes":[{"label":"x","points":[[2,2]],"shape_type":"point"}]}"#;
        let ann = PolygonAnnotation::from_json(json).unwrap();
        assert_eq!(ann.image, "b.jpg");
        assert_eq!(ann.to_regions()[0].pixels(), &[PixelPoint::new(2, 2)]);
    }

    #[test]
    fn clips_and_skips() {
        let json = r#"{"image":"c","width":4,"height":4,"shapes":[
            {"label":"out","points":[[10,10],[12,10],[12,12]]},
            {"label":"edge","points":[[-2,-2],[1,-2],[1,1],[-2,1]]}]}"#;
        let regions = PolygonAnnotation::from_json(json).unwrap().to_regions();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].region_id, 1);
        assert_eq!(regions[0].len(), 4);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(PolygonAnnotation::from_json("{").is_err());
        assert!(PolygonAnnotation::from_json(r#"{"image":"a","width":0,"height":3}"#).is_err());
        assert!(PolygonAnnotation::from_json(
            r#"{"image":"a","width":3,"height":3,"shapes":[{"label":"x","points":[]}]}"#
        )
        .is_err());
    }

    #[test]
    fn hull_annotation_round_trip() {
        let pts: Vec<PixelPoint> = [(2, 2), (6, 2), (6, 5), (2, 5)].iter().map(|&(x, y)| PixelPoint::new(x, y)).collect();
        let hull = convex_hull(&pts).unwrap();
        let ann = PolygonAnnotation::from_polygons("m", 10, 10, &[hull]);
        let back = PolygonAnnotation::from_json(&ann.to_json()).unwrap();
        assert_eq!(back, ann);
        assert_eq!(back.to_regions()[0].len(), 20);
    }
}
