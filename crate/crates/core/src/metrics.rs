//! Instance matching and confusion-count metrics.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::DefectRegion;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub const fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Reads `tp=`, `fp=`, `fn=`, `tn=` lines; missing keys default to 0.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = ConfusionCounts::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |why: String| Error::format("counts", format!("line {}: {why}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad count {:?}", value.trim())))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "tp" => c.tp = value,
                "fp" => c.fp = value,
                "fn" => c.fn_ = value,
                "tn" => c.tn = value,
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        format!("tp={}\nfp={}\nfn={}\ntn={}\n", self.tp, self.fp, self.fn_, self.tn)
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), Add::add)
    }
}

/// Which pair of rates the F1 score combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum F1Mode {
    /// Harmonic mean of precision and specificity.
    #[default]
    PrecisionSpecificity,
    /// Conventional harmonic mean of precision and sensitivity.
    PrecisionSensitivity,
}

/// The six rates. `None` means the denominator was zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub error_rate: Option<f64>,
    pub accuracy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den != 0).then(|| num as f64 / den as f64)
}

fn harmonic(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    let (a, b) = (a?, b?);
    if a + b == 0.0 {
        Some(0.0)
    } else {
        Some(2.0 * a * b / (a + b))
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> MetricsReport {
    compute_metrics_with(c, F1Mode::default())
}

pub fn compute_metrics_with(c: &ConfusionCounts, f1_mode: F1Mode) -> MetricsReport {
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match f1_mode {
        F1Mode::PrecisionSpecificity => harmonic(precision, specificity),
        F1Mode::PrecisionSensitivity => harmonic(precision, sensitivity),
    };
    MetricsReport {
        sensitivity,
        specificity,
        precision,
        f1,
        error_rate: ratio(c.fp + c.fn_, c.total()),
        accuracy: ratio(c.tp + c.tn, c.total()),
    }
}

impl MetricsReport {
    pub fn rows(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("precision", self.precision),
            ("f1", self.f1),
            ("error_rate", self.error_rate),
            ("accuracy", self.accuracy),
        ]
    }

    /// `metric,value` rows; values as fractions with six decimals, `n/a` when undefined.
    pub fn to_csv(&self, counts: &ConfusionCounts) -> String {
        let mut out = String::from("metric,value\n");
        for (name, v) in [("tp", counts.tp), ("fp", counts.fp), ("fn", counts.fn_), ("tn", counts.tn)] {
            let _ = writeln!(out, "{name},{v}");
        }
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name},{}", fmt_opt(v, 1.0, 6));
        }
        out
    }

    /// Human-readable confusion table and percentage metrics.
    pub fn to_table(&self, counts: &ConfusionCounts) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "                     predicted");
        let _ = writeln!(out, "                     defective  non-defective");
        let _ = writeln!(out, "actual defective     {:>9}  {:>13}", counts.tp, counts.fn_);
        let _ = writeln!(out, "actual non-defective {:>9}  {:>13}", counts.fp, counts.tn);
        let _ = writeln!(out);
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name:<12} {:>8}", fmt_opt(v, 100.0, 2));
        }
        out
    }
}

fn fmt_opt(v: Option<f64>, scale: f64, decimals: usize) -> String {
    match v {
        Some(v) => format!("{:.*}", decimals, v * scale),
        None => "n/a".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MatchMode {
    /// A prediction matches a truth region sharing at least one pixel.
    #[default]
    AnyOverlap,
    /// Intersection over union must reach `iou_min`.
    IouThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub mode: MatchMode,
    pub iou_min: f64,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        Self { mode: MatchMode::AnyOverlap, iou_min: 0.5 }
    }
}

impl MatchPolicy {
    pub fn new(mode: MatchMode, iou_min: f64) -> Result<Self> {
        if !(iou_min > 0.0 && iou_min <= 1.0) {
            return Err(Error::Argument(format!("iou_min must lie in (0, 1], got {iou_min}")));
        }
        Ok(Self { mode, iou_min })
    }

    pub fn any_overlap() -> Self {
        Self::default()
    }

    pub fn iou(iou_min: f64) -> Result<Self> {
        Self::new(MatchMode::IouThreshold, iou_min)
    }
}

/// Region indices sorted by content, so results do not depend on input order.
fn canonical_order(regions: &[DefectRegion]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..regions.len()).collect();
    idx.sort_by(|&a, &b| regions[a].pixels().cmp(regions[b].pixels()));
    idx
}

/// Counts detections for one image.
///
/// Candidate pairs are taken greedily by descending overlap (pixel count, or
/// IoU in threshold mode), each region used at most once. Matched pairs are
/// true positives, leftover truth regions false negatives and leftover
/// predictions false positives. An image with neither truth nor predictions
/// is one true negative.
pub fn match_instances(
    predicted: &[DefectRegion],
    truth: &[DefectRegion],
    policy: &MatchPolicy,
) -> ConfusionCounts {
    if predicted.is_empty() && truth.is_empty() {
        return ConfusionCounts::new(0, 0, 0, 1);
    }
    let pred_order = canonical_order(predicted);
    let truth_order = canonical_order(truth);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pr, &pi) in pred_order.iter().enumerate() {
        for (tr, &ti) in truth_order.iter().enumerate() {
            let shared = predicted[pi].overlap(&truth[ti]);
            if shared == 0 {
                continue;
            }
            let score = match policy.mode {
                MatchMode::AnyOverlap => shared as f64,
                MatchMode::IouThreshold => {
                    let union = predicted[pi].len() + truth[ti].len() - shared;
                    let iou = shared as f64 / union as f64;
                    if iou < policy.iou_min {
                        continue;
                    }
                    iou
                }
            };
            pairs.push((score, pr, tr));
        }
    }
    pairs.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut pred_used = vec![false; predicted.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut tp = 0u64;
    for (_, pr, tr) in pairs {
        if !pred_used[pr] && !truth_used[tr] {
            pred_used[pr] = true;
            truth_used[tr] = true;
            tp += 1;
        }
    }
    ConfusionCounts::new(
        tp,
        predicted.len() as u64 - tp,
        truth.len() as u64 - tp,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::PixelPoint;

    fn region(id: u32, px: &[(i64, i64)]) -> DefectRegion {
        DefectRegion::from_pixels(id, px.iter().map(|&(x, y)| PixelPoint::new(x, y)).collect()).unwrap()
    }

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 5e-5)
    }

    #[test]
    fn train_counts() {
        let m = compute_metrics(&ConfusionCounts::new(97, 6, 3, 0));
        assert!(close(m.sensitivity, 0.9700));
        assert!(close(m.precision, 0.9417));
        assert_eq!(m.specificity, Some(0.0));
        assert_eq!(m.f1, Some(0.0));
        assert!(close(m.accuracy, 0.9151));
        assert!(close(m.error_rate, 0.0849));
    }

    #[test]
    fn test_counts() {
        let m = compute_metrics(&ConfusionCounts::new(75, 104, 65, 326));
        assert!(close(m.sensitivity, 0.5357));
        assert!(close(m.specificity, 0.7581));
        assert!(close(m.precision, 0.4190));
        assert!(close(m.f1, 0.5397));
        assert!(close(m.error_rate, 0.2965));
        assert!(close(m.accuracy, 0.7035));
    }

    #[test]
    fn all_negative_corpus() {
        let m = compute_metrics(&ConfusionCounts::new(0, 0, 0, 10));
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert_eq!((m.specificity, m.accuracy, m.error_rate), (Some(1.0), Some(1.0), Some(0.0)));
        let empty = compute_metrics(&ConfusionCounts::default());
        assert_eq!(empty, MetricsReport::default());
    }

    #[test]
    fn standard_f1() {
        let m = compute_metrics_with(&ConfusionCounts::new(75, 104, 65, 326), F1Mode::PrecisionSensitivity);
        let (p, r) = (75.0 / 179.0, 75.0 / 140.0);
        assert!(close(m.f1, 2.0 * p * r / (p + r)));
    }

    #[test]
    fn identical_single_region() {
        let r = region(1, &[(0, 0), (1, 0)]);
        let c = match_instances(std::slice::from_ref(&r), std::slice::from_ref(&r), &MatchPolicy::any_overlap());
        assert_eq!(c, ConfusionCounts::new(1, 0, 0, 0));
    }

    #[test]
    fn empty_image_is_true_negative() {
        assert_eq!(match_instances(&[], &[], &MatchPolicy::default()), ConfusionCounts::new(0, 0, 0, 1));
    }

    #[test]
    fn two_predictions_on_one_truth() {
        let truth = region(1, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let a = region(1, &[(0, 0), (1, 0)]);
        let b = region(2, &[(3, 0), (4, 0)]);
        let c = match_instances(&[a, b], &[truth], &MatchPolicy::any_overlap());
        assert_eq!(c, ConfusionCounts::new(1, 1, 0, 0));
    }

    #[test]
    fn iou_threshold_rejects_weak_overlap() {
        let truth = region(1, &[(0, 0), (1, 0), (2, 0), (3, 0)]);
        let pred = region(1, &[(3, 0), (4, 0), (5, 0)]);
        let c = match_instances(std::slice::from_ref(&pred), std::slice::from_ref(&truth), &MatchPolicy::iou(0.5).unwrap());
        assert_eq!(c, ConfusionCounts::new(0, 1, 1, 0));
        let c = match_instances(&[pred], &[truth], &MatchPolicy::iou(1.0 / 6.0).unwrap());
        assert_eq!(c.tp, 1);
        assert!(MatchPolicy::iou(0.0).is_err());
        assert!(MatchPolicy::iou(1.5).is_err());
    }

    #[test]
    fn counts_kv_and_sum() {
        let c = ConfusionCounts::from_kv("tp=75\nfn=65\n# note\nfp=104\ntn=326\n").unwrap();
        assert_eq!(c, ConfusionCounts::new(75, 104, 65, 326));
        assert_eq!(ConfusionCounts::from_kv(&c.to_kv()).unwrap(), c);
        assert!(ConfusionCounts::from_kv("xx=1").is_err());
        let total: ConfusionCounts = [c, ConfusionCounts::new(1, 0, 0, 1)].into_iter().sum();
        assert_eq!(total, ConfusionCounts::new(76, 104, 65, 327));
    }

    #[test]
    fn report_rendering() {
        let c = ConfusionCounts::new(75, 104, 65, 326);
        let m = compute_metrics(&c);
        let table = m.to_table(&c);
        assert!(table.contains("accuracy        70.35"), "{table}");
        let csv = m.to_csv(&c);
        assert!(csv.starts_with("metric,value\ntp,75\n"));
        assert!(csv.contains("f1,0.539"));
        let none = compute_metrics(&ConfusionCounts::default());
        assert!(none.to_table(&ConfusionCounts::default()).contains("n/a"));
    }
}
