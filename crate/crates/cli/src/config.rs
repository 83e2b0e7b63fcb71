//! Pipeline configuration: defaults, `key=value` files and overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use maskpath_core::path::{DEFAULT_MAX_POINTS, DEFAULT_MIN_STEP_MM};
use maskpath_core::{Connectivity, F1Mode, MatchMode, MatchPolicy, PixelAnchor, PlanOptions, VacuumSet};

use crate::error::CliError;

pub const DEFAULT_TILE_SIZE: u32 = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tile_size: u32,
    pub connectivity: Connectivity,
    pub selection: VacuumSet,
    pub min_region_px: usize,
    /// Use a region's boundary pixels when none of them is salient.
    pub boundary_fallback: bool,
    pub min_step_mm: f64,
    pub max_points: usize,
    pub interpolate: bool,
    pub pixel_center: bool,
    pub match_mode: MatchMode,
    pub iou_min: f64,
    pub standard_f1: bool,
    pub calibration: Option<PathBuf>,
    /// Physical size covered by each mask, for calibrating from its resolution.
    pub leather_mm: Option<(f64, f64)>,
    pub origin_mm: (f64, f64),
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
            connectivity: Connectivity::Eight,
            selection: VacuumSet::CORNERS,
            min_region_px: 1,
            boundary_fallback: true,
            min_step_mm: DEFAULT_MIN_STEP_MM,
            max_points: DEFAULT_MAX_POINTS,
            interpolate: false,
            pixel_center: false,
            match_mode: MatchMode::AnyOverlap,
            iou_min: 0.5,
            standard_f1: false,
            calibration: None,
            leather_mm: None,
            origin_mm: (0.0, 0.0),
            jobs: 1,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("{key}: bad value {v:?}")))
}

/// `WxH` or `W,H`.
pub fn parse_pair(key: &str, v: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = v
        .split_once(['x', 'X', ','])
        .ok_or_else(|| CliError::Config(format!("{key}: expected AxB, got {v:?}")))?;
    Ok((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
}

pub fn parse_match_mode(v: &str) -> Result<MatchMode, CliError> {
    match v {
        "any-overlap" => Ok(MatchMode::AnyOverlap),
        "iou" | "iou-threshold" => Ok(MatchMode::IouThreshold),
        _ => Err(CliError::Config(format!("match_mode: expected any-overlap or iou, got {v:?}"))),
    }
}

fn match_mode_name(m: MatchMode) -> &'static str {
    match m {
        MatchMode::AnyOverlap => "any-overlap",
        MatchMode::IouThreshold => "iou",
    }
}

impl PipelineConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key.trim() {
            "tile_size" => self.tile_size = parse_num(key, v)?,
            "connectivity" => {
                self.connectivity = Connectivity::from_number(parse_num(key, v)?)
                    .map_err(|e| CliError::Config(e.to_string()))?
            }
            "selection" => {
                self.selection = v.parse().map_err(|e: maskpath_core::Error| CliError::Config(e.to_string()))?
            }
            "min_region_px" => self.min_region_px = parse_num(key, v)?,
            "boundary_fallback" => self.boundary_fallback = parse_bool(key, v)?,
            "min_step_mm" => self.min_step_mm = parse_num(key, v)?,
            "max_points" => self.max_points = parse_num(key, v)?,
            "interpolate" => self.interpolate = parse_bool(key, v)?,
            "pixel_center" => self.pixel_center = parse_bool(key, v)?,
            "match_mode" => self.match_mode = parse_match_mode(v)?,
            "iou_min" => self.iou_min = parse_num(key, v)?,
            "standard_f1" => self.standard_f1 = parse_bool(key, v)?,
            "calibration" => self.calibration = (!v.is_empty()).then(|| PathBuf::from(v)),
            "leather_mm" => self.leather_mm = if v.is_empty() { None } else { Some(parse_pair(key, v)?) },
            "origin_mm" => self.origin_mm = parse_pair(key, v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            other => return Err(CliError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn entries(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("tile_size", self.tile_size.to_string());
        m.insert("connectivity", self.connectivity.number().to_string());
        m.insert("selection", self.selection.to_string());
        m.insert("min_region_px", self.min_region_px.to_string());
        m.insert("boundary_fallback", self.boundary_fallback.to_string());
        m.insert("min_step_mm", self.min_step_mm.to_string());
        m.insert("max_points", self.max_points.to_string());
        m.insert("interpolate", self.interpolate.to_string());
        m.insert("pixel_center", self.pixel_center.to_string());
        m.insert("match_mode", match_mode_name(self.match_mode).to_string());
        m.insert("iou_min", self.iou_min.to_string());
        m.insert("standard_f1", self.standard_f1.to_string());
        m.insert(
            "calibration",
            self.calibration.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        m.insert(
            "leather_mm",
            self.leather_mm.map(|(w, h)| format!("{w}x{h}")).unwrap_or_default(),
        );
        m.insert("origin_mm", format!("{},{}", self.origin_mm.0, self.origin_mm.1));
        m.insert("jobs", self.jobs.to_string());
        m
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.tile_size == 0 {
            return bad("tile_size must be positive".into());
        }
        if !(self.min_step_mm > 0.0 && self.min_step_mm.is_finite()) {
            return bad(format!("min_step_mm must be positive, got {}", self.min_step_mm));
        }
        if self.max_points == 0 {
            return bad("max_points must be positive".into());
        }
        if self.min_region_px == 0 {
            return bad("min_region_px must be at least 1".into());
        }
        if !(self.iou_min > 0.0 && self.iou_min <= 1.0) {
            return bad(format!("iou_min must lie in (0, 1], got {}", self.iou_min));
        }
        if let Some((w, h)) = self.leather_mm {
            if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
                return bad(format!("leather_mm must be positive, got {w}x{h}"));
            }
        }
        if !(self.origin_mm.0.is_finite() && self.origin_mm.1.is_finite()) {
            return bad("origin_mm must be finite".into());
        }
        Ok(())
    }

    pub fn anchor(&self) -> PixelAnchor {
        if self.pixel_center {
            PixelAnchor::Center
        } else {
            PixelAnchor::TopLeft
        }
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            min_step_mm: self.min_step_mm,
            interpolate: self.interpolate,
            anchor: self.anchor(),
        }
    }

    pub fn match_policy(&self) -> MatchPolicy {
        MatchPolicy { mode: self.match_mode, iou_min: self.iou_min }
    }

    pub fn f1_mode(&self) -> F1Mode {
        if self.standard_f1 {
            F1Mode::PrecisionSensitivity
        } else {
            F1Mode::PrecisionSpecificity
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = cfg.serialize();
        assert!(text.contains("tile_size=400\n"));
        assert!(text.contains("selection=4,5\n"));
        assert!(text.contains("min_step_mm=0.03\n"));
        assert!(text.contains("max_points=2000\n"));
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn custom_round_trip() {
        let text = "# site config\ntile_size = 256\nconnectivity=4\nselection=4-8\ninterpolate=yes\n\
                    match_mode=iou\niou_min=0.25\nleather_mm=90x60\norigin_mm=10,-2.5\ncalibration=cal.txt\n";
        let once = PipelineConfig::parse(text).unwrap();
        assert_eq!(once.connectivity, Connectivity::Four);
        assert_eq!(once.selection, VacuumSet::AT_LEAST_FOUR);
        assert_eq!(once.leather_mm, Some((90.0, 60.0)));
        let twice = PipelineConfig::parse(&once.serialize()).unwrap();
        assert_eq!(twice, once);
        assert_eq!(twice.serialize(), once.serialize());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "tile_size=0",
            "connectivity=6",
            "selection=4,9",
            "min_step_mm=-1",
            "max_points=0",
            "iou_min=0",
            "interpolate=maybe",
            "nonsense=1",
            "just a line",
            "leather_mm=90",
        ] {
            assert!(PipelineConfig::parse(text).is_err(), "{text}");
        }
    }
}
