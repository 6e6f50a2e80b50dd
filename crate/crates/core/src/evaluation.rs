//! Confusion counting against benchmark ground truth and the derived metrics.
//!
//! Hard-shadow pixels count as negatives; outside-ROI and unknown pixels are
//! ignored. Metrics are computed from counts pooled per video, then averaged
//! without weights per category and across categories.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mask::LabelMask;
use crate::video_io::{load_groundtruth, numbered_images, read_mask, GroundTruthMask, GtCode, TemporalRoi};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    /// False positives on hard-shadow pixels.
    pub fp_shadow: u64,
    /// Hard-shadow pixels seen.
    pub shadow: u64,
}

impl Confusion {
    pub fn accumulate(&mut self, mask: &LabelMask, gt: &GroundTruthMask) -> Result<()> {
        if (mask.width(), mask.height()) != (gt.width(), gt.height()) {
            return Err(Error::Shape(format!(
                "mask is {}x{}, ground truth is {}x{}",
                mask.width(),
                mask.height(),
                gt.width(),
                gt.height()
            )));
        }
        for (&label, &code) in mask.as_slice().iter().zip(gt.codes()) {
            let fg = label != 0;
            match code {
                GtCode::Motion => {
                    if fg {
                        self.tp += 1;
                    } else {
                        self.fn_ += 1;
                    }
                }
                GtCode::Static | GtCode::HardShadow => {
                    if code == GtCode::HardShadow {
                        self.shadow += 1;
                    }
                    if fg {
                        self.fp += 1;
                        if code == GtCode::HardShadow {
                            self.fp_shadow += 1;
                        }
                    } else {
                        self.tn += 1;
                    }
                }
                GtCode::OutsideRoi | GtCode::Unknown => {}
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
        self.fp_shadow += o.fp_shadow;
        self.shadow += o.shadow;
    }
}

impl Add for Confusion {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl std::iter::Sum for Confusion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Confusion::default(), Add::add)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub recall: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub pwc: f64,
    pub fmeasure: f64,
    pub precision: f64,
    pub fpr_s: f64,
    /// Set when at least one metric hit a zero denominator and was reported as 0.
    pub zero_denominator: bool,
}

pub const METRIC_COLUMNS: [&str; 8] = [
    "Recall",
    "Specificity",
    "FPR",
    "FNR",
    "PWC",
    "F-Measure",
    "Precision",
    "FPR-S",
];

impl MetricsReport {
    pub fn from_confusion(c: &Confusion) -> Self {
        let mut degenerate = false;
        let mut ratio = |num: u64, den: u64| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let recall = ratio(c.tp, c.tp + c.fn_);
        let specificity = ratio(c.tn, c.tn + c.fp);
        let precision = ratio(c.tp, c.tp + c.fp);
        let fpr_s = ratio(c.fp_shadow, c.shadow);
        let pwc = if c.total() == 0 {
            degenerate = true;
            0.0
        } else {
            100.0 * (c.fn_ + c.fp) as f64 / c.total() as f64
        };
        let (tpfn, tnfp) = (c.tp + c.fn_, c.tn + c.fp);
        let fnr = if tpfn == 0 { 0.0 } else { 1.0 - recall };
        let fpr = if tnfp == 0 { 0.0 } else { 1.0 - specificity };
        let fmeasure = if precision + recall == 0.0 {
            degenerate = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricsReport {
            recall,
            specificity,
            fpr,
            fnr,
            pwc,
            fmeasure,
            precision,
            fpr_s,
            zero_denominator: degenerate,
        }
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.recall,
            self.specificity,
            self.fpr,
            self.fnr,
            self.pwc,
            self.fmeasure,
            self.precision,
            self.fpr_s,
        ]
    }

    /// Unweighted mean of several reports.
    pub fn mean(reports: &[MetricsReport]) -> MetricsReport {
        if reports.is_empty() {
            return MetricsReport {
                zero_denominator: true,
                ..Default::default()
            };
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        MetricsReport {
            recall: avg(|r| r.recall),
            specificity: avg(|r| r.specificity),
            fpr: avg(|r| r.fpr),
            fnr: avg(|r| r.fnr),
            pwc: avg(|r| r.pwc),
            fmeasure: avg(|r| r.fmeasure),
            precision: avg(|r| r.precision),
            fpr_s: avg(|r| r.fpr_s),
            zero_denominator: reports.iter().any(|r| r.zero_denominator),
        }
    }
}

pub fn report(c: &Confusion) -> MetricsReport {
    MetricsReport::from_confusion(c)
}

pub fn aggregate(reports: &[MetricsReport]) -> MetricsReport {
    MetricsReport::mean(reports)
}

/// One named row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub metrics: MetricsReport,
}

/// Per-video rows grouped by category, with category and overall means.
#[derive(Debug, Clone, Default)]
pub struct BenchmarkReport {
    categories: Vec<(String, Vec<ReportRow>)>,
}

impl BenchmarkReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_video(&mut self, category: &str, video: &str, metrics: MetricsReport) {
        let row = ReportRow {
            name: video.to_string(),
            metrics,
        };
        match self.categories.iter_mut().find(|(c, _)| c == category) {
            Some((_, rows)) => rows.push(row),
            None => self.categories.push((category.to_string(), vec![row])),
        }
    }

    pub fn category_mean(&self, category: &str) -> Option<MetricsReport> {
        self.categories
            .iter()
            .find(|(c, _)| c == category)
            .map(|(_, rows)| aggregate(&rows.iter().map(|r| r.metrics).collect::<Vec<_>>()))
    }

    pub fn overall(&self) -> MetricsReport {
        let means: Vec<MetricsReport> = self
            .categories
            .iter()
            .map(|(_, rows)| aggregate(&rows.iter().map(|r| r.metrics).collect::<Vec<_>>()))
            .collect();
        aggregate(&means)
    }

    /// Rows in output order: videos of each category followed by the
    /// category mean, then the overall mean.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for (cat, rows) in &self.categories {
            for r in rows {
                out.push(ReportRow {
                    name: format!("{cat}/{}", r.name),
                    metrics: r.metrics,
                });
            }
            out.push(ReportRow {
                name: format!("{cat} (category)"),
                metrics: aggregate(&rows.iter().map(|r| r.metrics).collect::<Vec<_>>()),
            });
        }
        if !self.categories.is_empty() {
            out.push(ReportRow {
                name: "overall".into(),
                metrics: self.overall(),
            });
        }
        out
    }
}

/// Comma-separated table: a `Name` column then the eight metric columns.
pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from("Name");
    for c in METRIC_COLUMNS {
        s.push(',');
        s.push_str(c);
    }
    s.push('\n');
    for r in rows {
        s.push_str(&r.name.replace(',', ";"));
        for v in r.metrics.values() {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    s
}

/// Column-aligned plain-text table.
pub fn to_text_table(rows: &[ReportRow]) -> String {
    let name_width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<name_width$}", "Name");
    for c in METRIC_COLUMNS {
        let _ = write!(s, "  {c:>11}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{:<name_width$}", r.name);
        for v in r.metrics.values() {
            let _ = write!(s, "  {v:>11.5}");
        }
        if r.metrics.zero_denominator {
            s.push_str("  *");
        }
        s.push('\n');
    }
    s
}

/// Pools the confusion over every frame of `gt_dir` inside `roi`.
///
/// Masks and ground-truth images are paired by the trailing frame number of
/// their file names. Both sets, restricted to the ROI, must hold the same
/// frame numbers. Returns the pooled counts and the number of frames used.
pub fn evaluate_directories(masks_dir: &Path, gt_dir: &Path, roi: Option<TemporalRoi>) -> Result<(Confusion, usize)> {
    let keep = |i: &u32| roi.is_none_or(|r| r.contains(*i));
    let masks: Vec<_> = numbered_images(masks_dir)?
        .into_iter()
        .filter(|(i, _)| keep(i))
        .collect();
    let gts: Vec<_> = numbered_images(gt_dir)?
        .into_iter()
        .filter(|(i, _)| keep(i))
        .collect();
    let mask_ids: BTreeSet<u32> = masks.iter().map(|(i, _)| *i).collect();
    let gt_ids: BTreeSet<u32> = gts.iter().map(|(i, _)| *i).collect();
    if mask_ids != gt_ids {
        let detail = match (
            gt_ids.difference(&mask_ids).next(),
            mask_ids.difference(&gt_ids).next(),
        ) {
            (Some(i), _) => format!(" (no mask for frame {i})"),
            (None, Some(i)) => format!(" (no ground truth for frame {i})"),
            (None, None) => String::new(),
        };
        return Err(Error::CountMismatch {
            masks: masks.len(),
            groundtruth: gts.len(),
            detail,
        });
    }
    let mut conf = Confusion::default();
    for ((_, mp), (_, gp)) in masks.iter().zip(&gts) {
        conf.accumulate(&read_mask(mp)?, &load_groundtruth(gp)?)?;
    }
    Ok((conf, gts.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(w: usize, h: usize, codes: Vec<GtCode>) -> GroundTruthMask {
        GroundTruthMask::new(w, h, codes).unwrap()
    }

    #[test]
    fn perfect_mask_has_no_errors() {
        let g = gt(4, 1, vec![GtCode::Motion, GtCode::Motion, GtCode::Static, GtCode::Static]);
        let m = LabelMask::from_vec(4, 1, vec![1, 1, 0, 0]).unwrap();
        let mut c = Confusion::default();
        c.accumulate(&m, &g).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (2, 0, 0, 2));
    }

    #[test]
    fn outside_roi_and_unknown_are_ignored() {
        let g = gt(2, 2, vec![GtCode::OutsideRoi; 4]);
        let m = LabelMask::from_vec(2, 2, vec![1; 4]).unwrap();
        let mut c = Confusion::default();
        c.accumulate(&m, &g).unwrap();
        assert_eq!(c, Confusion::default());
        let g = gt(1, 1, vec![GtCode::Unknown]);
        c.accumulate(&LabelMask::from_vec(1, 1, vec![1]).unwrap(), &g).unwrap();
        assert_eq!(c.total(), 0);
    }

    #[test]
    fn shadow_false_positive() {
        let g = gt(1, 1, vec![GtCode::HardShadow]);
        let mut c = Confusion::default();
        c.accumulate(&LabelMask::from_vec(1, 1, vec![1]).unwrap(), &g).unwrap();
        assert_eq!((c.fp, c.fp_shadow, c.shadow), (1, 1, 1));
        assert_eq!(report(&c).fpr_s, 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = gt(1, 1, vec![GtCode::Static]);
        assert!(Confusion::default().accumulate(&LabelMask::new(2, 1), &g).is_err());
    }

    #[test]
    fn hand_computed_metrics() {
        let c = Confusion {
            tp: 50,
            fp: 10,
            fn_: 5,
            tn: 935,
            ..Default::default()
        };
        let r = report(&c);
        assert!((r.recall - 0.90909).abs() < 1e-5);
        assert!((r.precision - 0.83333).abs() < 1e-5);
        assert!((r.fmeasure - 0.86957).abs() < 1e-5);
        assert!((r.pwc - 1.5).abs() < 1e-12);
        assert!((r.specificity - 0.98942).abs() < 1e-5);
        assert_eq!(r.recall + r.fnr, 1.0);
        assert_eq!(r.specificity + r.fpr, 1.0);
    }

    #[test]
    fn empty_confusion_is_flagged() {
        let r = report(&Confusion::default());
        assert!(r.zero_denominator);
        assert!(r.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn category_mean_is_unweighted() {
        let mut b = BenchmarkReport::new();
        b.add_video("baseline", "a", MetricsReport { fmeasure: 0.8, ..Default::default() });
        b.add_video("baseline", "b", MetricsReport { fmeasure: 0.6, ..Default::default() });
        assert!((b.category_mean("baseline").unwrap().fmeasure - 0.7).abs() < 1e-12);
        let csv = to_csv(&b.rows());
        assert_eq!(csv.lines().count(), 1 + 4);
        assert!(csv.starts_with("Name,Recall,Specificity,FPR,FNR,PWC,F-Measure,Precision,FPR-S\n"));
    }
}
