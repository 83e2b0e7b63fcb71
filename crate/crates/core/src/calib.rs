//! Pixel to millimetre projection.
//!
//! A pixel `(a, b)` maps to `(x0 + ω₁·a, y0 + ω₂·b)` where `ω₁`, `ω₂` are the
//! millimetre-per-pixel ratios of the imaged leather.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::PixelPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPoint {
    pub x: f64,
    pub y: f64,
}

impl PhysicalPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &PhysicalPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Which point of a pixel cell its integer coordinate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PixelAnchor {
    #[default]
    TopLeft,
    Center,
}

impl PixelAnchor {
    fn offset(self) -> f64 {
        match self {
            PixelAnchor::TopLeft => 0.0,
            PixelAnchor::Center => 0.5,
        }
    }
}

/// Reference origin and projection ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalCalibration {
    pub x0: f64,
    pub y0: f64,
    pub omega1: f64,
    pub omega2: f64,
}

const KEY_X0: &str = "x0_mm";
const KEY_Y0: &str = "y0_mm";
const KEY_OMEGA1: &str = "omega1_mm_per_px";
const KEY_OMEGA2: &str = "omega2_mm_per_px";

impl PhysicalCalibration {
    pub fn new(x0: f64, y0: f64, omega1: f64, omega2: f64) -> Result<Self> {
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::Argument("calibration origin must be finite".into()));
        }
        if !(omega1 > 0.0 && omega1.is_finite() && omega2 > 0.0 && omega2.is_finite()) {
            return Err(Error::Argument(format!(
                "projection ratios must be positive, got {omega1}, {omega2}"
            )));
        }
        Ok(Self { x0, y0, omega1, omega2 })
    }

    /// One millimetre per pixel, origin at zero.
    pub fn identity() -> Self {
        Self { x0: 0.0, y0: 0.0, omega1: 1.0, omega2: 1.0 }
    }

    /// Ratios from the captured resolution and the physical size it covers.
    pub fn calibrate(
        image_width: u32,
        image_height: u32,
        leather_width: f64,
        leather_height: f64,
        origin: PhysicalPoint,
    ) -> Result<Self> {
        if image_width == 0 || image_height == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be positive, got {image_width}x{image_height}"
            )));
        }
        if !(leather_width > 0.0 && leather_height > 0.0) {
            return Err(Error::Argument(format!(
                "leather dimensions must be positive, got {leather_width}x{leather_height} mm"
            )));
        }
        Self::new(
            origin.x,
            origin.y,
            leather_width / image_width as f64,
            leather_height / image_height as f64,
        )
    }

    pub fn origin(&self) -> PhysicalPoint {
        PhysicalPoint::new(self.x0, self.y0)
    }

    /// Maps a (possibly fractional) pixel coordinate to millimetres.
    pub fn project(&self, a: f64, b: f64) -> PhysicalPoint {
        PhysicalPoint::new(self.x0 + self.omega1 * a, self.y0 + self.omega2 * b)
    }

    /// Inverse of [`PhysicalCalibration::project`].
    pub fn unproject(&self, p: PhysicalPoint) -> (f64, f64) {
        ((p.x - self.x0) / self.omega1, (p.y - self.y0) / self.omega2)
    }

    pub fn to_physical(&self, p: PixelPoint, anchor: PixelAnchor) -> PhysicalPoint {
        let off = anchor.offset();
        self.project(p.x as f64 + off, p.y as f64 + off)
    }

    /// Nearest pixel of a physical point under `anchor`.
    pub fn to_pixel(&self, p: PhysicalPoint, anchor: PixelAnchor) -> PixelPoint {
        let (a, b) = self.unproject(p);
        let off = anchor.offset();
        PixelPoint::new((a - off).round() as i64, (b - off).round() as i64)
    }

    /// `key=value` lines. Floats print in shortest round-trip form.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{KEY_X0}={}", self.x0);
        let _ = writeln!(out, "{KEY_Y0}={}", self.y0);
        let _ = writeln!(out, "{KEY_OMEGA1}={}", self.omega1);
        let _ = writeln!(out, "{KEY_OMEGA2}={}", self.omega2);
        out
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let (mut x0, mut y0, mut w1, mut w2) = (None, None, None, None);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format("calibration", format!("line {}: expected key=value", lineno + 1))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::format("calibration", format!("line {}: bad number {value:?}", lineno + 1))
            })?;
            let slot = match key.trim() {
                KEY_X0 => &mut x0,
                KEY_Y0 => &mut y0,
                KEY_OMEGA1 => &mut w1,
                KEY_OMEGA2 => &mut w2,
                other => {
                    return Err(Error::format("calibration", format!("unknown key {other:?}")))
                }
            };
            *slot = Some(value);
        }
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::format("calibration", format!("missing {key}")))
        };
        Self::new(
            need(x0, KEY_X0)?,
            need(y0, KEY_Y0)?,
            need(w1, KEY_OMEGA1)?,
            need(w2, KEY_OMEGA2)?,
        )
    }
}
