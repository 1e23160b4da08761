//! Evaluation harness: seeded label-flip injection, confusion matrices,
//! ROC curves, and detector-vs-baseline comparison.
//!
//! Ground truth for conditional anomalies is scarce, so the harness
//! manufactures it: a fraction of test decisions is inverted ("flipped"),
//! and a detector is judged by how well it recovers exactly those rows.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baseline::{rule_detect, RuleSet};
use crate::dataset::{Dataset, Example};
use crate::detector::{score_batch, DetectorError, Threshold};
use crate::svm::SvmModel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("flip fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("length mismatch: {left} verdicts vs {right} expectations")]
    LengthMismatch { left: usize, right: usize },
    #[error("ROC needs both expected classes present")]
    SingleClassExpected,
    #[error("evaluation sets do not match: {0}")]
    MismatchedEvalSets(String),
    #[error("confusion file format error: {0}")]
    ConfusionFormat(String),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

/// One evaluation row: the (possibly flipped) example and whether it was
/// flipped — i.e. whether a detector *should* flag it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub example: Example,
    pub expected_anomaly: bool,
}

/// Invert the decision on `round(fraction * n)` rows, chosen by seed.
/// Row order is preserved; flipped rows carry `expected_anomaly = true`.
pub fn inject_flips(
    test_set: &Dataset,
    flip_fraction: f64,
    seed: u64,
) -> Result<Vec<EvalItem>, EvalError> {
    if !(0.0..=1.0).contains(&flip_fraction) || flip_fraction.is_nan() {
        return Err(EvalError::InvalidFraction(flip_fraction));
    }
    let n = test_set.len();
    let n_flips = ((flip_fraction * n as f64).round() as usize).min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut flip = vec![false; n];
    for &i in indices.iter().take(n_flips) {
        flip[i] = true;
    }
    Ok(test_set
        .examples()
        .iter()
        .zip(flip)
        .map(|(ex, flipped)| {
            let mut example = ex.clone();
            if flipped {
                example.decision = example.decision.inverted();
            }
            EvalItem {
                example,
                expected_anomaly: flipped,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    pub fn positives(&self) -> usize {
        self.true_positives + self.false_negatives
    }

    pub fn negatives(&self) -> usize {
        self.true_negatives + self.false_positives
    }
}

/// Tally verdicts against expectations ("positive" = anomaly).
pub fn confusion(verdicts: &[bool], expected: &[bool]) -> Result<ConfusionMatrix, EvalError> {
    if verdicts.len() != expected.len() {
        return Err(EvalError::LengthMismatch {
            left: verdicts.len(),
            right: expected.len(),
        });
    }
    let mut cm = ConfusionMatrix {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (v, e) in verdicts.iter().zip(expected) {
        match (v, e) {
            (true, true) => cm.true_positives += 1,
            (true, false) => cm.false_positives += 1,
            (false, false) => cm.true_negatives += 1,
            (false, true) => cm.false_negatives += 1,
        }
    }
    Ok(cm)
}

/// Ratio metrics; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricsSummary {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    MetricsSummary {
        sensitivity: ratio(cm.true_positives, cm.true_positives + cm.false_negatives),
        specificity: ratio(cm.true_negatives, cm.true_negatives + cm.false_positives),
        ppv: ratio(cm.true_positives, cm.true_positives + cm.false_positives),
        npv: ratio(cm.true_negatives, cm.true_negatives + cm.false_negatives),
    }
}

/// Render an optional ratio as a percentage with one decimal, `NA` when
/// undefined: 84/(84+453) formats as `15.6%`.
pub fn format_pct(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}%", v * 100.0),
        None => "NA".to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Threshold producing this operating point (flag = score < threshold).
    pub threshold: f64,
    pub sensitivity: f64,
    /// False positive rate, i.e. 1 - specificity.
    pub fpr: f64,
}

/// ROC curve for a score-based detector where anomalies are expected to
/// score LOW. Points are ordered by ascending threshold from (0, 0) at
/// threshold -inf to (1, 1) at +inf; sensitivity and fpr are non-decreasing
/// along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweep thresholds over {-inf} ∪ {distinct scores} ∪ {+inf}. The AUC is
/// the exact trapezoid integral computed in integer arithmetic, so a
/// perfectly separating score set yields exactly 1.0 — and it equals the
/// tie-corrected pairwise rank statistic.
pub fn roc(scores: &[f64], expected: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != expected.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: expected.len(),
        });
    }
    let positives = expected.iter().filter(|e| **e).count();
    let negatives = expected.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClassExpected);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        threshold: f64::NEG_INFINITY,
        sensitivity: 0.0,
        fpr: 0.0,
    }];
    let mut auc_num: u64 = 0; // sum over segments of (dFP) * (TP_prev + TP_next)
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        // Items with score strictly below `value` are exactly those already
        // consumed; this threshold flags them and nothing else.
        points.push(RocPoint {
            threshold: value,
            sensitivity: tp as f64 / p,
            fpr: fp as f64 / n,
        });
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == value {
            if expected[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc_num += (fp - prev_fp) * (tp + prev_tp);
    }
    points.push(RocPoint {
        threshold: f64::INFINITY,
        sensitivity: 1.0,
        fpr: 1.0,
    });
    // The final segment from the last distinct score to +inf is flat or
    // already covered: tp/fp have reached their totals inside the loop.
    debug_assert_eq!(tp, positives as u64);
    debug_assert_eq!(fp, negatives as u64);

    let auc = auc_num as f64 / (2.0 * p * n);
    Ok(RocCurve { points, auc })
}

impl RocCurve {
    /// Sensitivity of the score detector at a given specificity, linearly
    /// interpolated along the curve (upper envelope at exact matches).
    pub fn sensitivity_at_specificity(&self, specificity: f64) -> f64 {
        let target_fpr = 1.0 - specificity;
        let mut below: Option<&RocPoint> = None;
        let mut above: Option<&RocPoint> = None;
        for pt in &self.points {
            if pt.fpr <= target_fpr {
                below = Some(pt); // last such point has the highest sensitivity
            } else {
                above = Some(pt);
                break;
            }
        }
        match (below, above) {
            (Some(b), _) if b.fpr == target_fpr => b.sensitivity,
            (Some(b), Some(a)) => {
                let span = a.fpr - b.fpr;
                b.sensitivity + (a.sensitivity - b.sensitivity) * (target_fpr - b.fpr) / span
            }
            (Some(b), None) => b.sensitivity,
            (None, _) => 0.0,
        }
    }
}

/// Everything a single detector evaluation produces. `roc` is `None` for
/// detectors without scores (the rule baseline) — and never present when
/// the expectations are single-class.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsSummary,
    pub roc: Option<RocCurve>,
}

/// Score every item, apply the threshold, and summarize. Scoring runs in
/// parallel but the outputs are order-exact and thread-count independent.
pub fn evaluate_detector(
    model: &SvmModel,
    threshold: &Threshold,
    items: &[EvalItem],
) -> Result<(EvalReport, Vec<f64>), EvalError> {
    let examples: Vec<Example> = items.iter().map(|it| it.example.clone()).collect();
    let scores: Vec<f64> = score_batch(model, &examples)?
        .into_iter()
        .map(|s| s.value)
        .collect();
    let expected: Vec<bool> = items.iter().map(|it| it.expected_anomaly).collect();
    let verdicts: Vec<bool> = scores.iter().map(|s| *s < threshold.value).collect();
    let cm = confusion(&verdicts, &expected)?;
    let roc_curve = match roc(&scores, &expected) {
        Ok(curve) => Some(curve),
        Err(EvalError::SingleClassExpected) => None,
        Err(e) => return Err(e),
    };
    Ok((
        EvalReport {
            confusion: cm,
            metrics: metrics(&cm),
            roc: roc_curve,
        },
        scores,
    ))
}

/// Run the rule baseline over the same items.
pub fn evaluate_baseline(rules: &RuleSet, items: &[EvalItem]) -> EvalReport {
    let verdicts: Vec<bool> = items
        .iter()
        .map(|it| rule_detect(rules, &it.example).is_anomaly)
        .collect();
    let expected: Vec<bool> = items.iter().map(|it| it.expected_anomaly).collect();
    let cm = confusion(&verdicts, &expected).expect("lengths match by construction");
    EvalReport {
        confusion: cm,
        metrics: metrics(&cm),
        roc: None,
    }
}

/// Detector and baseline side by side, on the same evaluation items.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub detector: MetricsSummary,
    pub baseline: MetricsSummary,
    pub detector_confusion: ConfusionMatrix,
    pub baseline_confusion: ConfusionMatrix,
    /// Detector sensitivity interpolated at the baseline's achieved
    /// specificity (needs the detector's ROC and a defined baseline
    /// specificity).
    pub detector_sens_at_baseline_spec: Option<f64>,
    pub detector_auc: Option<f64>,
    /// detector PPV / baseline PPV.
    pub ppv_ratio: Option<f64>,
}

pub fn compare(detector: &EvalReport, baseline: &EvalReport) -> Result<Comparison, EvalError> {
    let (d, b) = (&detector.confusion, &baseline.confusion);
    if d.total() != b.total() || d.positives() != b.positives() {
        return Err(EvalError::MismatchedEvalSets(format!(
            "detector saw {}/{} positives/items, baseline {}/{}",
            d.positives(),
            d.total(),
            b.positives(),
            b.total()
        )));
    }
    let detector_sens_at_baseline_spec = match (&detector.roc, baseline.metrics.specificity) {
        (Some(curve), Some(spec)) => Some(curve.sensitivity_at_specificity(spec)),
        _ => None,
    };
    let ppv_ratio = match (detector.metrics.ppv, baseline.metrics.ppv) {
        (Some(dp), Some(bp)) if bp > 0.0 => Some(dp / bp),
        _ => None,
    };
    Ok(Comparison {
        detector: detector.metrics,
        baseline: baseline.metrics,
        detector_confusion: *d,
        baseline_confusion: *b,
        detector_sens_at_baseline_spec,
        detector_auc: detector.roc.as_ref().map(|r| r.auc),
        ppv_ratio,
    })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28}{:>12}{:>12}", "metric", "detector", "baseline")?;
        let rows = [
            ("sensitivity", self.detector.sensitivity, self.baseline.sensitivity),
            ("specificity", self.detector.specificity, self.baseline.specificity),
            ("ppv", self.detector.ppv, self.baseline.ppv),
            ("npv", self.detector.npv, self.baseline.npv),
        ];
        for (name, dv, bv) in rows {
            writeln!(f, "{:<28}{:>12}{:>12}", name, format_pct(dv), format_pct(bv))?;
        }
        writeln!(
            f,
            "{:<28}{:>12}{:>12}",
            "alerts",
            self.detector_confusion.true_positives + self.detector_confusion.false_positives,
            self.baseline_confusion.true_positives + self.baseline_confusion.false_positives,
        )?;
        if let Some(auc) = self.detector_auc {
            writeln!(f, "detector AUC: {auc:.4}")?;
        }
        if let (Some(sens), Some(spec)) = (self.detector_sens_at_baseline_spec, self.baseline.specificity) {
            writeln!(
                f,
                "detector sensitivity at baseline specificity ({}): {}",
                format_pct(Some(spec)),
                format_pct(Some(sens)),
            )?;
        }
        if let Some(ratio) = self.ppv_ratio {
            writeln!(f, "ppv ratio (detector / baseline): {ratio:.2}")?;
        }
        Ok(())
    }
}

/// Write `threshold,sensitivity,fpr` rows; infinities render as `inf`/`-inf`.
pub fn write_roc_csv(curve: &RocCurve, path: &Path) -> Result<(), EvalError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "threshold,sensitivity,fpr")?;
    for pt in &curve.points {
        writeln!(w, "{},{},{}", pt.threshold, pt.sensitivity, pt.fpr)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a one-row `tp,fp,tn,fn,sensitivity,specificity,ppv` file (ratios
/// as shortest-round-trip floats, `NA` when undefined).
pub fn write_confusion_csv(report: &EvalReport, path: &Path) -> Result<(), EvalError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "tp,fp,tn,fn,sensitivity,specificity,ppv")?;
    let cm = &report.confusion;
    let fmt_ratio = |v: Option<f64>| match v {
        Some(x) => format!("{x}"),
        None => "NA".to_string(),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        cm.true_positives,
        cm.false_positives,
        cm.true_negatives,
        cm.false_negatives,
        fmt_ratio(report.metrics.sensitivity),
        fmt_ratio(report.metrics.specificity),
        fmt_ratio(report.metrics.ppv),
    )?;
    w.flush()?;
    Ok(())
}

/// Read back a confusion CSV. Only the four count columns are required;
/// metric columns, if present, are ignored and recomputed.
pub fn read_confusion_csv(path: &Path) -> Result<ConfusionMatrix, EvalError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| EvalError::ConfusionFormat("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "tp" || cols[1] != "fp" || cols[2] != "tn" || cols[3] != "fn" {
        return Err(EvalError::ConfusionFormat(format!(
            "header must start with tp,fp,tn,fn — found {header:?}"
        )));
    }
    let row = lines
        .next()
        .ok_or_else(|| EvalError::ConfusionFormat("missing data row".into()))?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != cols.len() {
        return Err(EvalError::ConfusionFormat(format!(
            "row has {} fields, header has {}",
            fields.len(),
            cols.len()
        )));
    }
    let count = |i: usize| -> Result<usize, EvalError> {
        fields[i]
            .parse()
            .map_err(|e| EvalError::ConfusionFormat(format!("bad {} value {:?}: {e}", cols[i], fields[i])))
    };
    Ok(ConfusionMatrix {
        true_positives: count(0)?,
        false_positives: count(1)?,
        true_negatives: count(2)?,
        false_negatives: count(3)?,
    })
}
