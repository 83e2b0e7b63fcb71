//! Scores predicted defects against ground truth, image by image.
//!
//! Both directories hold one file per image, paired by file stem. A file is
//! either a polygon annotation (`.json`) or a mask (`.pgm`, whose 8-connected
//! components are the defects). An image present on only one side counts as
//! having no defects on the other.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use maskpath_core::annotation::PolygonAnnotation;
use maskpath_core::{
    compute_metrics_with, connected_components, match_instances, pgm, Connectivity, ConfusionCounts,
    DefectRegion, F1Mode, MatchPolicy, MetricsReport,
};

use crate::error::CliError;
use crate::fsio::read_text;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub stem: String,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub images: Vec<ImageScore>,
    pub counts: ConfusionCounts,
    pub report: MetricsReport,
}

impl Evaluation {
    pub fn from_counts(counts: ConfusionCounts, f1_mode: F1Mode) -> Self {
        Evaluation { images: Vec::new(), counts, report: compute_metrics_with(&counts, f1_mode) }
    }

    pub fn to_csv(&self) -> String {
        self.report.to_csv(&self.counts)
    }

    pub fn to_table(&self) -> String {
        self.report.to_table(&self.counts)
    }
}

pub fn load_regions(path: &Path) -> Result<Vec<DefectRegion>, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let ann = PolygonAnnotation::from_json(&read_text(path)?).map_err(|e| CliError::input(path, e))?;
            Ok(ann.to_regions())
        }
        Some("pgm") => {
            let mask = pgm::read_mask(path).map_err(|e| CliError::input(path, e))?;
            Ok(connected_components(&mask, Connectivity::Eight))
        }
        _ => Err(CliError::Config(format!("{}: expected a .json or .pgm file", path.display()))),
    }
}

/// `.json` and `.pgm` files in `dir`, keyed by stem.
fn list_inputs(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str());
        if !path.is_file() || !matches!(ext, Some("json" | "pgm")) {
            continue;
        }
        let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(CliError::Config(format!(
                "{} and {} share the stem {stem:?}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

pub fn evaluate_dirs(
    pred_dir: &Path,
    truth_dir: &Path,
    policy: &MatchPolicy,
    f1_mode: F1Mode,
) -> Result<Evaluation, CliError> {
    let preds = list_inputs(pred_dir)?;
    let truths = list_inputs(truth_dir)?;
    let mut stems: Vec<&String> = preds.keys().chain(truths.keys()).collect();
    stems.sort();
    stems.dedup();

    let load = |p: Option<&PathBuf>| p.map_or(Ok(Vec::new()), |p| load_regions(p));
    let mut images = Vec::with_capacity(stems.len());
    let mut counts = ConfusionCounts::default();
    for stem in stems {
        let c = match_instances(&load(preds.get(stem))?, &load(truths.get(stem))?, policy);
        counts += c;
        images.push(ImageScore { stem: stem.clone(), counts: c });
    }
    Ok(Evaluation { images, counts, report: compute_metrics_with(&counts, f1_mode) })
}
