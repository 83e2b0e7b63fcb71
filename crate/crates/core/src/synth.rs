//! Synthetic defect masks for tests, benchmarks and demo corpora.

use crate::error::Result;
use crate::mask::BinaryMask;

/// Digital disk `{(x, y) : x² + y² ≤ r²}` centred in a square canvas with
/// `margin` background pixels on every side.
pub fn filled_disk(radius: u32, margin: u32) -> Result<BinaryMask> {
    let size = 2 * (radius + margin) + 1;
    let mut mask = BinaryMask::new(size, size)?;
    paint_disk(&mut mask, (radius + margin) as i64, (radius + margin) as i64, radius as i64, true);
    Ok(mask)
}

/// Sets (or clears) every pixel of a digital disk, clipped to the mask.
pub fn paint_disk(mask: &mut BinaryMask, cx: i64, cy: i64, radius: i64, on: bool) {
    let r2 = radius * radius;
    for y in (cy - radius).max(0)..=(cy + radius).min(mask.height() as i64 - 1) {
        for x in (cx - radius).max(0)..=(cx + radius).min(mask.width() as i64 - 1) {
            let (dx, dy) = (x - cx, y - cy);
            if dx * dx + dy * dy <= r2 {
                mask.set(x as u32, y as u32, on);
            }
        }
    }
}

/// Axis-aligned filled rectangle, clipped to the mask.
pub fn paint_rect(mask: &mut BinaryMask, x: i64, y: i64, width: i64, height: i64) {
    for yy in y.max(0)..(y + height).min(mask.height() as i64) {
        for xx in x.max(0)..(x + width).min(mask.width() as i64) {
            mask.set(xx as u32, yy as u32, true);
        }
    }
}

/// A disk of `radius` with an offset disk bitten out of it: a non-convex
/// crescent.
pub fn crescent(radius: u32, margin: u32) -> Result<BinaryMask> {
    let mut mask = filled_disk(radius, margin)?;
    let c = (radius + margin) as i64;
    let r = radius as i64;
    paint_disk(&mut mask, c + r / 2, c, (r * 3) / 4, false);
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_pixel_counts() {
        // lattice points in a radius-1 and radius-2 disk
        assert_eq!(filled_disk(1, 0).unwrap().foreground_count(), 5);
        assert_eq!(filled_disk(2, 1).unwrap().foreground_count(), 13);
    }

    #[test]
    fn crescent_is_smaller_than_disk() {
        let d = filled_disk(10, 2).unwrap().foreground_count();
        let c = crescent(10, 2).unwrap().foreground_count();
        assert!(c > 0 && c < d);
    }
}
