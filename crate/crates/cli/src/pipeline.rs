//! Mask files in, marking artifacts out.
//!
//! Each mask is cut into tiles and every tile is processed on its own:
//! regions, vacuum field, salient points, hull, marking path, fidelity.
//! Tile-local coordinates are lifted into image coordinates (by the tile
//! origin) before projection, so per-tile outputs merge into one image frame.
//!
//! Output tree for `pipeline --out OUT a.pgm`:
//!
//! ```text
//! OUT/summary.json
//! OUT/predictions/a.json          hull polygons, annotation format
//! OUT/a/regions.csv
//! OUT/a/fidelity.csv
//! OUT/a/marks.pgm                 simulated chalk strokes
//! OUT/a/points/defect_0001.txt    salient points, `x y v`
//! OUT/a/hulls/defect_0001.txt     hull vertices, `x y`
//! OUT/a/waypoints/defect_0001.csv
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use maskpath_core::annotation::PolygonAnnotation;
use maskpath_core::hull::ConvexPolygon;
use maskpath_core::path::write_waypoints;
use maskpath_core::pgm::{self, PgmFormat};
use maskpath_core::sim::{rasterize_onto, FIDELITY_CSV_HEADER};
use maskpath_core::vacuum::select_salient_among;
use maskpath_core::{
    convex_hull, fidelity, label_regions, plan_path, tile, validate_path, vacuum_field, BinaryMask,
    DefectRegion, FidelityReport, MarkingPath, PhysicalCalibration, PhysicalPoint, SalientPointSet,
    Tile, TileGrid, ValidationReport, VacuumSet, Violation,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::fsio::{read_text, write_atomic};

/// Everything derived for one defect. Geometry is in image coordinates.
#[derive(Debug, Clone)]
pub struct DefectRecord {
    pub defect_id: u32,
    pub tile_index: usize,
    pub tile: Tile,
    /// Region id within its tile.
    pub local_id: u32,
    pub region: DefectRegion,
    pub boundary_points: usize,
    pub salient: SalientPointSet,
    /// No salient point existed; the hull was built from all boundary pixels.
    pub fallback: bool,
    pub hull: ConvexPolygon,
    pub path: MarkingPath,
    pub validation: ValidationReport,
    pub fidelity: FidelityReport,
}

#[derive(Debug, Clone)]
pub struct MaskResult {
    pub width: u32,
    pub height: u32,
    pub grid: TileGrid,
    pub calibration: PhysicalCalibration,
    pub defects: Vec<DefectRecord>,
    pub canvas: BinaryMask,
    pub clipped_waypoints: usize,
}

impl MaskResult {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in &self.defects {
            if d.fallback {
                out.push(format!("defect {}: no salient points, hull built from boundary pixels", d.defect_id));
            }
            for v in &d.validation.violations {
                out.push(match v {
                    Violation::TooManyWaypoints { count, max } => {
                        format!("defect {}: {count} waypoints exceed max_points {max}", d.defect_id)
                    }
                    Violation::StepTooShort { index, distance_mm } => format!(
                        "defect {}: step {index} is {distance_mm:.4} mm, below min_step",
                        d.defect_id
                    ),
                    Violation::NotClosed => format!("defect {}: path not closed", d.defect_id),
                    Violation::Empty => format!("defect {}: empty path", d.defect_id),
                });
            }
        }
        if self.clipped_waypoints > 0 {
            out.push(format!("{} waypoints fell outside the canvas", self.clipped_waypoints));
        }
        out
    }
}

/// Calibration for a `width`×`height` mask: an explicit calibration wins,
/// then the configured leather size, then one millimetre per pixel.
pub fn resolve_calibration(
    cfg: &PipelineConfig,
    explicit: Option<&PhysicalCalibration>,
    width: u32,
    height: u32,
) -> Result<PhysicalCalibration, CliError> {
    if let Some(cal) = explicit {
        return Ok(*cal);
    }
    match cfg.leather_mm {
        Some((lw, lh)) => PhysicalCalibration::calibrate(
            width,
            height,
            lw,
            lh,
            PhysicalPoint::new(cfg.origin_mm.0, cfg.origin_mm.1),
        )
        .map_err(|e| CliError::Config(e.to_string())),
        None => PhysicalCalibration::new(cfg.origin_mm.0, cfg.origin_mm.1, 1.0, 1.0)
            .map_err(|e| CliError::Config(e.to_string())),
    }
}

fn check_hull(hull: &ConvexPolygon, salient: &SalientPointSet, id: u32) -> Result<(), CliError> {
    if hull.len() >= 3 && hull.doubled_signed_area() <= 0 {
        return Err(CliError::Invariant(format!("defect {id}: hull is not counterclockwise")));
    }
    if let Some(p) = salient.points.iter().find(|p| !hull.contains(p.pixel())) {
        return Err(CliError::Invariant(format!(
            "defect {id}: salient point ({}, {}) outside its hull",
            p.x, p.y
        )));
    }
    Ok(())
}

/// Runs every stage on one in-memory mask.
pub fn process_mask(
    mask: &BinaryMask,
    cfg: &PipelineConfig,
    calibration: &PhysicalCalibration,
) -> Result<MaskResult, CliError> {
    let grid = tile(mask.width(), mask.height(), cfg.tile_size).map_err(|e| CliError::Config(e.to_string()))?;
    let plan = cfg.plan_options();
    let mut defects = Vec::new();

    for (tile_index, t) in grid.tiles.iter().enumerate() {
        let sub = mask.crop(t).map_err(|e| CliError::Invariant(e.to_string()))?;
        let regions = label_regions(&sub, cfg.connectivity, cfg.min_region_px);
        if regions.is_empty() {
            continue;
        }
        let field = vacuum_field(&sub);
        let (dx, dy) = (t.origin_x as i64, t.origin_y as i64);

        for region in regions {
            let defect_id = defects.len() as u32 + 1;
            let boundary_points = region
                .pixels()
                .iter()
                .filter(|p| field.get(p.x, p.y).is_some_and(|v| v >= 1))
                .count();
            let mut salient = select_salient_among(&field, region.pixels(), cfg.selection);
            let mut fallback = false;
            if salient.is_empty() && cfg.boundary_fallback {
                let any_boundary = VacuumSet::from_values(1..=8).expect("valid set");
                salient = select_salient_among(&field, region.pixels(), any_boundary);
                fallback = true;
            }
            if salient.is_empty() {
                // nothing to mark under this selection
                continue;
            }
            let local_hull =
                convex_hull(&salient.pixels()).map_err(|e| CliError::Invariant(e.to_string()))?;
            check_hull(&local_hull, &salient, defect_id)?;
            let mut fid = fidelity(&local_hull, &region);
            fid.defect_id = defect_id;

            let hull = local_hull.translated(dx, dy);
            let path = plan_path(&hull, calibration, &plan, defect_id)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            let validation = validate_path(&path, cfg.max_points);
            defects.push(DefectRecord {
                defect_id,
                tile_index,
                tile: *t,
                local_id: region.region_id,
                region: region.translated(dx, dy),
                boundary_points,
                salient: salient.translated(dx, dy),
                fallback,
                hull,
                path,
                validation,
                fidelity: fid,
            });
        }
    }

    let mut canvas = BinaryMask::new(mask.width(), mask.height()).map_err(|e| CliError::Invariant(e.to_string()))?;
    let clipped_waypoints = defects
        .iter()
        .map(|d| rasterize_onto(&mut canvas, &d.path, calibration, cfg.anchor()))
        .sum();

    Ok(MaskResult {
        width: mask.width(),
        height: mask.height(),
        grid,
        calibration: *calibration,
        defects,
        canvas,
        clipped_waypoints,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TileSummary {
    pub index: usize,
    pub origin_x: u32,
    pub origin_y: u32,
    pub width: u32,
    pub height: u32,
    pub defects: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaskSummary {
    pub file: String,
    pub stem: String,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub calibration: Option<PhysicalCalibration>,
    pub tiles: Vec<TileSummary>,
    pub defects: usize,
    pub waypoints: usize,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub format: &'static str,
    pub config: std::collections::BTreeMap<&'static str, String>,
    pub masks: Vec<MaskSummary>,
    pub total_defects: usize,
    pub failed_files: usize,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn defect_file(id: u32, ext: &str) -> String {
    format!("defect_{id:04}.{ext}")
}

fn regions_csv(result: &MaskResult) -> String {
    let mut out = String::from(
        "defect_id,tile_index,tile_x,tile_y,local_id,pixels,min_x,min_y,max_x,max_y,\
         boundary_points,salient_points,hull_vertices,waypoints,degenerate,fallback\n",
    );
    for d in &result.defects {
        let b = d.region.bbox();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            d.defect_id,
            d.tile_index,
            d.tile.origin_x,
            d.tile.origin_y,
            d.local_id,
            d.region.len(),
            b.min_x,
            b.min_y,
            b.max_x,
            b.max_y,
            d.boundary_points,
            d.salient.len(),
            d.hull.len(),
            d.path.len(),
            d.path.degenerate,
            d.fallback
        );
    }
    out
}

pub fn fidelity_csv(reports: impl IntoIterator<Item = FidelityReport>) -> String {
    let mut out = format!("{FIDELITY_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Writes the per-mask directory `dir` (replacing any previous contents).
pub fn write_mask_outputs(dir: &Path, result: &MaskResult) -> Result<(), CliError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_atomic(&dir.join("regions.csv"), regions_csv(result).as_bytes())?;
    write_atomic(
        &dir.join("fidelity.csv"),
        fidelity_csv(result.defects.iter().map(|d| d.fidelity.clone())).as_bytes(),
    )?;
    write_atomic(&dir.join("marks.pgm"), &pgm::encode_mask(&result.canvas, PgmFormat::Binary))?;
    for d in &result.defects {
        write_atomic(&dir.join("points").join(defect_file(d.defect_id, "txt")), d.salient.to_text().as_bytes())?;
        write_atomic(&dir.join("hulls").join(defect_file(d.defect_id, "txt")), d.hull.to_text().as_bytes())?;
        write_atomic(
            &dir.join("waypoints").join(defect_file(d.defect_id, "csv")),
            write_waypoints(std::slice::from_ref(&d.path)).as_bytes(),
        )?;
    }
    Ok(())
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mask".into())
}

fn file_name_of(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn process_file(
    path: &Path,
    stem: &str,
    cfg: &PipelineConfig,
    explicit: Option<&PhysicalCalibration>,
    out_dir: &Path,
) -> Result<MaskSummary, CliError> {
    let mut summary = MaskSummary {
        file: file_name_of(path),
        stem: stem.to_string(),
        width: None,
        height: None,
        calibration: None,
        tiles: Vec::new(),
        defects: 0,
        waypoints: 0,
        warnings: Vec::new(),
        error: None,
    };
    let mask = match pgm::read_mask(path) {
        Ok(m) => m,
        Err(e) => {
            summary.error = Some(CliError::input(path, e).to_string());
            return Ok(summary);
        }
    };
    let cal = resolve_calibration(cfg, explicit, mask.width(), mask.height())?;
    let result = process_mask(&mask, cfg, &cal)?;

    let written = write_mask_outputs(&out_dir.join(stem), &result).and_then(|_| {
        let hulls: Vec<ConvexPolygon> = result.defects.iter().map(|d| d.hull.clone()).collect();
        let ann = PolygonAnnotation::from_polygons(&summary.file, mask.width(), mask.height(), &hulls);
        let mut json = ann.to_json();
        json.push('\n');
        write_atomic(&out_dir.join("predictions").join(format!("{stem}.json")), json.as_bytes())
    });
    if let Err(e) = written {
        summary.error = Some(e.to_string());
    }

    summary.width = Some(result.width);
    summary.height = Some(result.height);
    summary.calibration = Some(result.calibration);
    summary.tiles = result
        .grid
        .tiles
        .iter()
        .enumerate()
        .map(|(index, t)| TileSummary {
            index,
            origin_x: t.origin_x,
            origin_y: t.origin_y,
            width: t.width,
            height: t.height,
            defects: result.defects.iter().filter(|d| d.tile_index == index).count(),
        })
        .collect();
    summary.defects = result.defects.len();
    summary.waypoints = result.defects.iter().map(|d| d.path.len()).sum();
    summary.warnings = result.warnings();
    Ok(summary)
}

/// Processes every mask file and writes the output tree plus `summary.json`.
///
/// Unreadable or malformed masks are recorded in the summary and skipped.
/// Config problems and broken invariants abort the run.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    mask_files: &[PathBuf],
    out_dir: &Path,
) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let explicit = match &cfg.calibration {
        Some(p) => Some(PhysicalCalibration::from_kv(&read_text(p)?).map_err(|e| CliError::input(p, e))?),
        None => None,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let mut seen = BTreeSet::new();
    let jobs: Vec<(PathBuf, String, bool)> = mask_files
        .iter()
        .map(|p| {
            let stem = stem_of(p);
            let fresh = seen.insert(stem.clone());
            (p.clone(), stem, fresh)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("jobs: {e}")))?;
    let results: Vec<Result<MaskSummary, CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(path, stem, fresh)| {
                if *fresh {
                    process_file(path, stem, cfg, explicit.as_ref(), out_dir)
                } else {
                    Ok(MaskSummary {
                        file: file_name_of(path),
                        stem: stem.clone(),
                        width: None,
                        height: None,
                        calibration: None,
                        tiles: Vec::new(),
                        defects: 0,
                        waypoints: 0,
                        warnings: Vec::new(),
                        error: Some(format!("duplicate output name {stem:?}")),
                    })
                }
            })
            .collect()
    });
    let masks = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let summary = RunSummary {
        format: "maskpath-run v1",
        config: cfg.entries(),
        total_defects: masks.iter().map(|m| m.defects).sum(),
        failed_files: masks.iter().filter(|m| m.error.is_some()).count(),
        masks,
    };
    write_atomic(&out_dir.join("summary.json"), summary.to_json().as_bytes())?;
    Ok(summary)
}
