//! Vacuum field and salient boundary point selection.
//!
//! The vacuum of a foreground pixel is an LBP-style code over its 3×3
//! neighbourhood (P = 8, R = 1): each neighbour contributes `s(g_c - g_p)` with
//! `s(x) = 1` for `x > 0`. On a 0/1 mask that is the number of background
//! neighbours, so `V = 0` marks an interior pixel and `V = 8` an isolated one.
//! Neighbours outside the image read as background.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::PixelPoint;
use crate::mask::BinaryMask;

const NEIGHBOURS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Stored at background pixels, where the vacuum is undefined.
const NOT_FOREGROUND: u8 = u8::MAX;

/// Per-pixel vacuum values; defined on foreground pixels only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VacuumField {
    width: u32,
    height: u32,
    values: Vec<u8>,
}

impl VacuumField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// `None` for background or out-of-range pixels.
    pub fn get(&self, x: i64, y: i64) -> Option<u8> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        match self.values[y as usize * self.width as usize + x as usize] {
            NOT_FOREGROUND => None,
            v => Some(v),
        }
    }

    /// Foreground pixels with their vacuum, row-major.
    pub fn iter(&self) -> impl Iterator<Item = SalientPoint> + '_ {
        let w = self.width as usize;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != NOT_FOREGROUND)
            .map(move |(i, &v)| SalientPoint {
                x: (i % w) as i64,
                y: (i / w) as i64,
                vacuum: v,
            })
    }

    /// Number of boundary pixels (`V ≥ 1`).
    pub fn boundary_count(&self) -> usize {
        self.values.iter().filter(|&&v| v != NOT_FOREGROUND && v >= 1).count()
    }
}

/// Computes the vacuum of every foreground pixel.
pub fn vacuum_field(mask: &BinaryMask) -> VacuumField {
    let (w, h) = (mask.width(), mask.height());
    let mut values = vec![NOT_FOREGROUND; w as usize * h as usize];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !mask.is_foreground(x, y) {
                continue;
            }
            let background = NEIGHBOURS
                .iter()
                .filter(|&&(dx, dy)| !mask.is_foreground(x + dx, y + dy))
                .count();
            values[y as usize * w as usize + x as usize] = background as u8;
        }
    }
    VacuumField {
        width: w,
        height: h,
        values,
    }
}

/// A subset of the vacuum values `0..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct VacuumSet(u16);

impl VacuumSet {
    pub const EMPTY: VacuumSet = VacuumSet(0);

    /// `{4, 5}`: corner and convexity points, skipping spikes at 6 and 7.
    pub const CORNERS: VacuumSet = VacuumSet((1 << 4) | (1 << 5));

    /// `{4, …, 8}`: every point at or past the boundary midpoint.
    pub const AT_LEAST_FOUR: VacuumSet = VacuumSet(0b1_1111_0000);

    pub fn from_values(values: impl IntoIterator<Item = u8>) -> Result<Self> {
        let mut bits = 0u16;
        for v in values {
            if v > 8 {
                return Err(Error::Argument(format!("vacuum value {v} outside 0..=8")));
            }
            bits |= 1 << v;
        }
        Ok(VacuumSet(bits))
    }

    pub fn contains(self, v: u8) -> bool {
        v <= 8 && self.0 & (1 << v) != 0
    }

    pub fn is_subset(self, other: VacuumSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn values(self) -> impl Iterator<Item = u8> {
        (0..=8u8).filter(move |&v| self.contains(v))
    }
}

impl fmt::Display for VacuumSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.values().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Accepts comma-separated values and inclusive ranges: `4,5`, `4-8`, `0,4-5`.
/// An empty string is the empty set.
impl FromStr for VacuumSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut values = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parse = |t: &str| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|_| Error::Argument(format!("bad vacuum value {t:?}")))
            };
            match part.split_once('-') {
                Some((lo, hi)) => {
                    let (lo, hi) = (parse(lo)?, parse(hi)?);
                    if lo > hi {
                        return Err(Error::Argument(format!("empty vacuum range {part:?}")));
                    }
                    values.extend(lo..=hi);
                }
                None => values.push(parse(part)?),
            }
        }
        VacuumSet::from_values(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SalientPoint {
    pub x: i64,
    pub y: i64,
    pub vacuum: u8,
}

impl SalientPoint {
    pub fn pixel(&self) -> PixelPoint {
        PixelPoint::new(self.x, self.y)
    }
}

/// Foreground pixels whose vacuum lies in `selection`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalientPointSet {
    pub points: Vec<SalientPoint>,
    pub selection: VacuumSet,
}

impl SalientPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pixels(&self) -> Vec<PixelPoint> {
        self.points.iter().map(SalientPoint::pixel).collect()
    }

    /// One `x y v` triple per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, p.vacuum);
        }
        out
    }

    pub fn from_text(text: &str, selection: VacuumSet) -> Result<SalientPointSet> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [x, y, v] => x.parse().ok().zip(y.parse().ok()).zip(v.parse::<u8>().ok()),
                _ => None,
            };
            let ((x, y), vacuum) = parsed.ok_or_else(|| {
                Error::format("points", format!("line {}: expected `x y v`, got {line:?}", lineno + 1))
            })?;
            if !selection.contains(vacuum) {
                return Err(Error::format(
                    "points",
                    format!("line {}: vacuum {vacuum} outside selection {{{selection}}}", lineno + 1),
                ));
            }
            points.push(SalientPoint { x, y, vacuum });
        }
        Ok(SalientPointSet { points, selection })
    }

    /// Copy shifted by `(dx, dy)`.
    pub fn translated(&self, dx: i64, dy: i64) -> SalientPointSet {
        SalientPointSet {
            points: self
                .points
                .iter()
                .map(|p| SalientPoint { x: p.x + dx, y: p.y + dy, vacuum: p.vacuum })
                .collect(),
            selection: self.selection,
        }
    }
}

/// Selects every foreground pixel whose vacuum is in `selection`.
pub fn select_salient(field: &VacuumField, selection: VacuumSet) -> SalientPointSet {
    SalientPointSet {
        points: field.iter().filter(|p| selection.contains(p.vacuum)).collect(),
        selection,
    }
}

/// [`select_salient`] restricted to the given pixels (e.g. one region).
/// Output follows the order of `pixels`.
pub fn select_salient_among<'a>(
    field: &VacuumField,
    pixels: impl IntoIterator<Item = &'a PixelPoint>,
    selection: VacuumSet,
) -> SalientPointSet {
    let points = pixels
        .into_iter()
        .filter_map(|p| {
            field
                .get(p.x, p.y)
                .filter(|&v| selection.contains(v))
                .map(|vacuum| SalientPoint { x: p.x, y: p.y, vacuum })
        })
        .collect();
    SalientPointSet { points, selection }
}
