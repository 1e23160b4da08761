//! Conditional anomaly scoring and alerting.
//!
//! The score of a (state, decision) pair is the signed margin
//! `d(y|x) = (2y - 1) * f(x)`: positive and large when the decision agrees
//! with the learned discriminant, negative when it contradicts it. An
//! example is flagged anomalous when its score falls strictly below a
//! threshold calibrated on normal decisions to a target specificity.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DataError, Example, FeatureSchema, StandardizationStats};
use crate::svm::{discriminant, KernelSpec, SvmError, SvmModel};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model format error at line {line}: {detail}")]
    Format { line: usize, detail: String },
    #[error("calibration set is empty")]
    EmptyCalibrationSet,
    #[error("target specificity must lie strictly between 0 and 1, got {0}")]
    InvalidTarget(f64),
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Signed conditional anomaly score; always finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyScore {
    pub value: f64,
}

/// A calibrated alert threshold plus the context it was fitted in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    /// In (0, 1); the specificity the calibration aimed for.
    pub target_specificity: f64,
    /// Number of scores the calibration saw.
    pub calibration_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyVerdict {
    pub score: AnomalyScore,
    pub threshold: f64,
    /// True exactly when `score.value < threshold` (ties are normal).
    pub is_anomaly: bool,
}

/// Score one example: `(2y - 1) * f(x)` on the raw state.
pub fn score(model: &SvmModel, example: &Example) -> Result<AnomalyScore, DetectorError> {
    let f = discriminant(model, &example.state)?;
    Ok(AnomalyScore {
        value: example.decision.sign() * f,
    })
}

/// Score a batch in parallel; output order matches input order exactly, so
/// results are independent of thread count.
pub fn score_batch(model: &SvmModel, examples: &[Example]) -> Result<Vec<AnomalyScore>, DetectorError> {
    examples
        .par_iter()
        .map(|ex| score(model, ex))
        .collect::<Result<Vec<_>, _>>()
}

/// Pick the threshold as the k-th smallest calibration score with
/// `k = floor(n * (1 - target))`. Flagging `score < threshold` then leaves
/// at least `target` of the calibration set unflagged, and at most
/// `target + 1/n` when scores are distinct.
pub fn calibrate(scores: &[AnomalyScore], target_specificity: f64) -> Result<Threshold, DetectorError> {
    if scores.is_empty() {
        return Err(DetectorError::EmptyCalibrationSet);
    }
    if !(target_specificity > 0.0 && target_specificity < 1.0) {
        return Err(DetectorError::InvalidTarget(target_specificity));
    }
    if scores.iter().any(|s| !s.value.is_finite()) {
        return Err(DetectorError::NonFiniteScore);
    }
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.value).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // k = floor(n * (1 - target)), computed as n - ceil(n * target) to
    // dodge the cancellation in 1 - target (10 * (1 - 0.9) floors to 0).
    let kept = ((n as f64) * target_specificity).ceil() as usize;
    let k = n.saturating_sub(kept).min(n - 1);
    Ok(Threshold {
        value: sorted[k],
        target_specificity,
        calibration_size: n,
    })
}

/// Score an example and compare against the threshold (strictly below).
pub fn detect(
    model: &SvmModel,
    threshold: &Threshold,
    example: &Example,
) -> Result<AnomalyVerdict, DetectorError> {
    let s = score(model, example)?;
    Ok(AnomalyVerdict {
        score: s,
        threshold: threshold.value,
        is_anomaly: s.value < threshold.value,
    })
}

const MODEL_MAGIC: &str = "cadet-model v1";

/// Write a model (and optionally its calibrated threshold) to a text file.
/// Floats are written in shortest round-trip form, so `load_model` restores
/// every value bit for bit.
pub fn save_model(
    model: &SvmModel,
    threshold: Option<&Threshold>,
    path: &Path,
) -> Result<(), DetectorError> {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    match model.kernel() {
        KernelSpec::Linear => out.push_str("kernel linear\n"),
        KernelSpec::Rbf { gamma } => {
            let _ = writeln!(out, "kernel rbf {gamma}");
        }
    }
    let _ = writeln!(out, "bias {}", model.bias());
    let _ = writeln!(out, "schema {}", model.schema().names().join(","));
    out.push_str("means");
    for m in model.stats().mean() {
        let _ = write!(out, " {m}");
    }
    out.push('\n');
    out.push_str("scales");
    for s in model.stats().scale() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    for (sv, coeff) in model.support_vectors().iter().zip(model.coefficients()) {
        let _ = write!(out, "sv {coeff}");
        for v in sv {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    if let Some(t) = threshold {
        let _ = writeln!(out, "threshold {} {} {}", t.value, t.target_specificity, t.calibration_size);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a model file; the threshold line is optional (a model saved before
/// calibration has none).
pub fn load_model(path: &Path) -> Result<(SvmModel, Option<Threshold>), DetectorError> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

fn parse_model(text: &str) -> Result<(SvmModel, Option<Threshold>), DetectorError> {
    let fail = |line: usize, detail: String| DetectorError::Format { line, detail };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |expect: &str| {
        lines
            .next()
            .ok_or_else(|| fail(0, format!("file ended early, expected {expect}")))
    };

    let (ln, magic) = next_line("the header")?;
    if magic != MODEL_MAGIC {
        return Err(fail(ln, format!("expected {MODEL_MAGIC:?}, found {magic:?}")));
    }

    let (ln, kernel_line) = next_line("a kernel line")?;
    let kernel = match kernel_line
        .split_whitespace()
        .collect::<Vec<_>>()
        .as_slice()
    {
        ["kernel", "linear"] => KernelSpec::Linear,
        ["kernel", "rbf", gamma] => {
            let gamma: f64 = gamma
                .parse()
                .map_err(|e| fail(ln, format!("bad gamma {gamma:?}: {e}")))?;
            let spec = KernelSpec::Rbf { gamma };
            spec.validate()
                .map_err(|e| fail(ln, e.to_string()))?;
            spec
        }
        _ => return Err(fail(ln, format!("unrecognized kernel line {kernel_line:?}"))),
    };

    let (ln, bias_line) = next_line("a bias line")?;
    let bias = match bias_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["bias", v] => v
            .parse::<f64>()
            .map_err(|e| fail(ln, format!("bad bias {v:?}: {e}")))?,
        _ => return Err(fail(ln, format!("expected a bias line, found {bias_line:?}"))),
    };

    let (ln, schema_line) = next_line("a schema line")?;
    let schema = match schema_line.split_once(' ') {
        Some(("schema", names)) => FeatureSchema::new(names.split(',').collect::<Vec<_>>())
            .map_err(|e| fail(ln, e.to_string()))?,
        _ => return Err(fail(ln, format!("expected a schema line, found {schema_line:?}"))),
    };
    let width = schema.count();

    let parse_floats = |ln: usize, line: &str, tag: &str| -> Result<Vec<f64>, DetectorError> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(fail(ln, format!("expected a {tag} line, found {line:?}")));
        }
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| fail(ln, format!("bad {tag} value: {e}")))?;
        if values.len() != width {
            return Err(fail(ln, format!("{tag} has {} values, schema has {width}", values.len())));
        }
        Ok(values)
    };

    let (ln, means_line) = next_line("a means line")?;
    let means = parse_floats(ln, means_line, "means")?;
    let (ln, scales_line) = next_line("a scales line")?;
    let scales = parse_floats(ln, scales_line, "scales")?;
    let stats = StandardizationStats::from_parts(means, scales)
        .map_err(|e| fail(ln, e.to_string()))?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    let mut threshold = None;
    for (ln, line) in lines {
        if threshold.is_some() {
            return Err(fail(ln, "content after the threshold line".into()));
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("sv") => {
                let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
                let values = values.map_err(|e| fail(ln, format!("bad sv value: {e}")))?;
                if values.len() != width + 1 {
                    return Err(fail(
                        ln,
                        format!("sv has {} values, expected coefficient + {width} features", values.len()),
                    ));
                }
                coefficients.push(values[0]);
                support_vectors.push(values[1..].to_vec());
            }
            Some("threshold") => {
                let fields: Vec<&str> = parts.collect();
                let [value, target, size] = fields.as_slice() else {
                    return Err(fail(ln, "threshold line needs value, target, size".into()));
                };
                let value: f64 = value
                    .parse()
                    .map_err(|e| fail(ln, format!("bad threshold value: {e}")))?;
                let target: f64 = target
                    .parse()
                    .map_err(|e| fail(ln, format!("bad threshold target: {e}")))?;
                let size: usize = size
                    .parse()
                    .map_err(|e| fail(ln, format!("bad calibration size: {e}")))?;
                if !value.is_finite() || !(target > 0.0 && target < 1.0) || size == 0 {
                    return Err(fail(ln, "threshold values out of range".into()));
                }
                threshold = Some(Threshold { value, target_specificity: target, calibration_size: size });
            }
            Some(other) => return Err(fail(ln, format!("unrecognized directive {other:?}"))),
            None => return Err(fail(ln, "blank line".into())),
        }
    }

    let model = SvmModel::from_parts(kernel, support_vectors, coefficients, bias, stats, schema)
        .map_err(|e| DetectorError::Format { line: 0, detail: e.to_string() })?;
    Ok((model, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Decision, PatientState};
    use crate::svm::{train, ClassWeighting, TrainConfig};
    use proptest::prelude::*;

    fn tiny_model() -> SvmModel {
        let schema = FeatureSchema::new(vec!["x", "y"]).unwrap();
        let examples = vec![
            ex("p1", &[1.0, 0.5], 1),
            ex("p2", &[0.8, 0.1], 1),
            ex("p3", &[-1.0, -0.5], 0),
            ex("p4", &[-0.7, 0.2], 0),
        ];
        let ds = Dataset::new(schema, examples).unwrap();
        let config = TrainConfig {
            c: 5.0,
            class_weighting: ClassWeighting::None,
            ..TrainConfig::default()
        };
        train(&ds, &KernelSpec::Rbf { gamma: 0.8 }, &config).unwrap().0
    }

    fn ex(id: &str, features: &[f64], bit: u8) -> Example {
        Example {
            state: PatientState {
                patient_id: id.into(),
                state_index: 0,
                features: features.to_vec(),
            },
            decision: Decision::from_bit(bit).unwrap(),
        }
    }

    fn scores(values: &[f64]) -> Vec<AnomalyScore> {
        values.iter().map(|v| AnomalyScore { value: *v }).collect()
    }

    #[test]
    fn flipping_the_decision_negates_the_score_exactly() {
        let model = tiny_model();
        for features in [[0.3, -0.2], [1.5, 0.9], [-2.0, 0.0]] {
            let s1 = score(&model, &ex("q", &features, 1)).unwrap();
            let s0 = score(&model, &ex("q", &features, 0)).unwrap();
            assert_eq!(s1.value + s0.value, 0.0);
        }
    }

    #[test]
    fn calibrate_matches_order_statistic_hand_calc() {
        // 10 distinct scores, target 0.9: k = floor(10 * 0.1) = 1, so the
        // threshold is the second-smallest score and exactly one score
        // (the minimum) falls below it.
        let s = scores(&[7.0, 2.0, 9.0, 1.0, 5.0, 4.0, 8.0, 3.0, 10.0, 6.0]);
        let t = calibrate(&s, 0.9).unwrap();
        assert_eq!(t.value, 2.0);
        assert_eq!(t.calibration_size, 10);
        let flagged = s.iter().filter(|v| v.value < t.value).count();
        assert_eq!(flagged, 1);

        // target 0.94 rounds k down to 0: nothing can be flagged.
        let t = calibrate(&s, 0.94).unwrap();
        assert_eq!(t.value, 1.0);
        assert_eq!(s.iter().filter(|v| v.value < t.value).count(), 0);
    }

    #[test]
    fn calibrate_rejects_bad_inputs() {
        assert!(matches!(calibrate(&[], 0.9), Err(DetectorError::EmptyCalibrationSet)));
        let s = scores(&[1.0, 2.0]);
        assert!(matches!(calibrate(&s, 0.0), Err(DetectorError::InvalidTarget(_))));
        assert!(matches!(calibrate(&s, 1.0), Err(DetectorError::InvalidTarget(_))));
        assert!(matches!(
            calibrate(&scores(&[f64::NAN]), 0.9),
            Err(DetectorError::NonFiniteScore)
        ));
    }

    #[test]
    fn ties_at_the_threshold_are_normal() {
        let model = tiny_model();
        let example = ex("q", &[0.4, 0.4], 1);
        let s = score(&model, &example).unwrap();
        let threshold = Threshold { value: s.value, target_specificity: 0.9, calibration_size: 10 };
        let verdict = detect(&model, &threshold, &example).unwrap();
        assert!(!verdict.is_anomaly);
        let below = Threshold { value: s.value + 1e-9, ..threshold };
        assert!(detect(&model, &below, &example).unwrap().is_anomaly);
    }

    #[test]
    fn model_file_round_trips_bit_for_bit() {
        let model = tiny_model();
        let threshold = Threshold { value: -0.25, target_specificity: 0.94, calibration_size: 321 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&model, Some(&threshold), &path).unwrap();

        let (loaded, loaded_threshold) = load_model(&path).unwrap();
        assert_eq!(loaded_threshold, Some(threshold));
        assert_eq!(model, loaded);

        let probes = [[0.3, -0.2], [1.5, 0.9], [-2.0, 0.0], [0.0, 0.0]];
        for features in probes {
            let a = score(&model, &ex("q", &features, 1)).unwrap();
            let b = score(&loaded, &ex("q", &features, 1)).unwrap();
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }

        // Saving the loaded model reproduces the file byte for byte.
        let path2 = dir.path().join("model2.txt");
        save_model(&loaded, loaded_threshold.as_ref(), &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn model_without_threshold_round_trips() {
        let model = tiny_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&model, None, &path).unwrap();
        let (loaded, threshold) = load_model(&path).unwrap();
        assert_eq!(threshold, None);
        assert_eq!(model, loaded);
    }

    #[test]
    fn unknown_version_is_rejected_at_line_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        fs::write(&path, "cadet-model v2\nkernel linear\n").unwrap();
        match load_model(&path) {
            Err(DetectorError::Format { line: 1, .. }) => {}
            other => panic!("expected a line-1 format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_and_corrupt_files_name_the_line() {
        let model = tiny_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&model, None, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        // Drop the scales line.
        let without_scales: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with("scales"))
            .collect();
        fs::write(&path, without_scales.join("\n") + "\n").unwrap();
        match load_model(&path) {
            Err(DetectorError::Format { line: 6, .. }) => {}
            other => panic!("expected a line-6 format error, got {other:?}"),
        }

        // Corrupt one sv value.
        let corrupted = text.replacen("sv ", "sv oops ", 1);
        fs::write(&path, corrupted).unwrap();
        assert!(matches!(load_model(&path), Err(DetectorError::Format { .. })));
    }

    #[test]
    fn content_after_threshold_is_rejected() {
        let model = tiny_model();
        let threshold = Threshold { value: 0.0, target_specificity: 0.9, calibration_size: 5 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        save_model(&model, Some(&threshold), &path).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("sv 1 0 0\n");
        fs::write(&path, text).unwrap();
        assert!(matches!(load_model(&path), Err(DetectorError::Format { .. })));
    }

    #[test]
    fn batch_scores_match_single_scores() {
        let model = tiny_model();
        let examples: Vec<Example> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.37;
                ex(&format!("p{i}"), &[t.sin(), t.cos()], (i % 2) as u8)
            })
            .collect();
        let batch = score_batch(&model, &examples).unwrap();
        for (ex, s) in examples.iter().zip(&batch) {
            assert_eq!(score(&model, ex).unwrap().value.to_bits(), s.value.to_bits());
        }
    }

    proptest! {
        /// Raising the target specificity can only lower the threshold.
        #[test]
        fn threshold_is_monotone_in_target(
            values in prop::collection::vec(-1e6f64..1e6, 1..200),
            t1 in 0.01f64..0.99,
            t2 in 0.01f64..0.99,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let s = scores(&values);
            let th_lo = calibrate(&s, lo).unwrap();
            let th_hi = calibrate(&s, hi).unwrap();
            prop_assert!(th_hi.value <= th_lo.value);
        }

        /// With distinct scores the achieved specificity lands in
        /// [target, target + 1/n].
        #[test]
        fn achieved_specificity_brackets_target(
            seed_values in prop::collection::hash_set(
                (-1_000_000i64..1_000_000).prop_map(|v| v * 3), 2..300),
            target in 0.01f64..0.99,
        ) {
            let values: Vec<f64> = seed_values.iter().map(|v| *v as f64 * 0.001).collect();
            let n = values.len() as f64;
            let t = calibrate(&scores(&values), target).unwrap();
            let kept = values.iter().filter(|v| **v >= t.value).count() as f64;
            let achieved = kept / n;
            prop_assert!(achieved >= target - 1e-12, "achieved {achieved} < target {target}");
            prop_assert!(achieved <= target + 1.0 / n + 1e-12,
                "achieved {achieved} > {target} + 1/{n}");
        }

        /// With ties the lower bound still holds.
        #[test]
        fn specificity_lower_bound_survives_ties(
            values in prop::collection::vec(-5i32..5, 1..100),
            target in 0.01f64..0.99,
        ) {
            let values: Vec<f64> = values.iter().map(|v| *v as f64).collect();
            let n = values.len() as f64;
            let t = calibrate(&scores(&values), target).unwrap();
            let kept = values.iter().filter(|v| **v >= t.value).count() as f64;
            prop_assert!(kept / n >= target - 1e-12);
        }
    }
}
