//! Data model: feature schemas, patient states, labelled examples, CSV
//! persistence, patient-level splitting, and feature standardization.
//!
//! A [`Dataset`] is a list of [`Example`]s (a [`PatientState`] plus the
//! [`Decision`] that was made for it) that all conform to one
//! [`FeatureSchema`]. Splits are always done at the patient level so that no
//! patient contributes states to more than one partition, and
//! standardization uses training-set statistics only.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Reserved CSV column names that can never be feature names.
const RESERVED_COLUMNS: [&str; 3] = ["patient_id", "state_index", "decision"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Header or schema shape is wrong (duplicate names, bad column layout, ...).
    #[error("schema error: {0}")]
    Schema(String),
    /// A data row failed to parse; `row` is 1-based over data rows (header excluded).
    #[error("parse error at data row {row}: {detail}")]
    Parse { row: usize, detail: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("split fractions must be positive and sum to 1 (got {0:?})")]
    InvalidFractions((f64, f64, f64)),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

/// Ordered, unique feature names. Shared by datasets, models, and rule sets
/// so that a feature index means the same thing everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
}

impl FeatureSchema {
    /// Build a schema from names. Names must be non-empty, unique,
    /// `[A-Za-z0-9_]` only, and must not collide with the reserved CSV
    /// columns — this keeps every text format in the crate unambiguous.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Result<Self, DataError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(DataError::Schema("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(DataError::Schema(format!(
                    "feature name {name:?} is not a valid identifier"
                )));
            }
            if RESERVED_COLUMNS.contains(&name.as_str()) {
                return Err(DataError::Schema(format!(
                    "feature name {name:?} collides with a reserved column"
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(DataError::Schema(format!("duplicate feature name {name:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A binary management decision: was the intervention ordered or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    NoOrder,
    Order,
}

impl Decision {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Decision::NoOrder),
            1 => Some(Decision::Order),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Decision::NoOrder => 0,
            Decision::Order => 1,
        }
    }

    /// The {-1, +1} encoding used by the SVM: `2y - 1`.
    pub fn sign(self) -> f64 {
        match self {
            Decision::NoOrder => -1.0,
            Decision::Order => 1.0,
        }
    }

    pub fn inverted(self) -> Self {
        match self {
            Decision::NoOrder => Decision::Order,
            Decision::Order => Decision::NoOrder,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// One time point of one patient: an id, a per-patient sequence number, and
/// a feature vector conforming to some schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientState {
    pub patient_id: String,
    pub state_index: u32,
    pub features: Vec<f64>,
}

/// A patient state together with the decision that was recorded for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub state: PatientState,
    pub decision: Decision,
}

/// A schema plus examples that all conform to it (validated on construction:
/// feature vectors have the schema's length, every value is finite, and
/// patient ids are non-empty and free of CSV metacharacters).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, examples: Vec<Example>) -> Result<Self, DataError> {
        for (i, ex) in examples.iter().enumerate() {
            let id = &ex.state.patient_id;
            if id.is_empty() || id.contains(',') || id.contains('\n') || id.contains('\r') {
                return Err(DataError::Schema(format!(
                    "example {i}: patient id {id:?} is empty or contains CSV metacharacters"
                )));
            }
            if ex.state.features.len() != schema.count() {
                return Err(DataError::Schema(format!(
                    "example {i}: {} features, schema has {}",
                    ex.state.features.len(),
                    schema.count()
                )));
            }
            if let Some(bad) = ex.state.features.iter().find(|v| !v.is_finite()) {
                return Err(DataError::Schema(format!(
                    "example {i}: non-finite feature value {bad}"
                )));
            }
        }
        Ok(Self { schema, examples })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Distinct patient ids in sorted order.
    pub fn patient_ids(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self
            .examples
            .iter()
            .map(|ex| ex.state.patient_id.as_str())
            .collect();
        set.into_iter().collect()
    }

    pub fn count_decisions(&self) -> (usize, usize) {
        let orders = self
            .examples
            .iter()
            .filter(|ex| ex.decision == Decision::Order)
            .count();
        (self.examples.len() - orders, orders)
    }
}

/// Read a dataset from CSV. The header must be
/// `patient_id,state_index,<feature...>,decision`; when `expected` is given
/// the feature columns must match it exactly, otherwise the schema is
/// inferred from the header. Floats must be finite, decisions must be
/// literally `0` or `1`.
pub fn load_csv(path: &Path, expected: Option<&FeatureSchema>) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, expected)
}

fn parse_csv(text: &str, expected: Option<&FeatureSchema>) -> Result<Dataset, DataError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DataError::Schema("file is empty, expected a header row".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 {
        return Err(DataError::Schema(format!(
            "header has {} columns, need at least patient_id,state_index,<feature>,decision",
            cols.len()
        )));
    }
    if cols[0] != "patient_id" || cols[1] != "state_index" || cols[cols.len() - 1] != "decision" {
        return Err(DataError::Schema(
            "header must start with patient_id,state_index and end with decision".into(),
        ));
    }
    let feature_names: Vec<String> = cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let schema = FeatureSchema::new(feature_names)?;
    if let Some(exp) = expected {
        if &schema != exp {
            return Err(DataError::Schema(format!(
                "header features {:?} do not match the expected schema {:?}",
                schema.names(),
                exp.names()
            )));
        }
    }

    let width = schema.count() + 3;
    let mut examples = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1; // 1-based over data rows
        if line.is_empty() {
            return Err(DataError::Parse {
                row,
                detail: "blank line".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(DataError::Parse {
                row,
                detail: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let patient_id = fields[0].to_string();
        if patient_id.is_empty() {
            return Err(DataError::Parse {
                row,
                detail: "empty patient_id".into(),
            });
        }
        let state_index: u32 = fields[1].parse().map_err(|e| DataError::Parse {
            row,
            detail: format!("bad state_index {:?}: {e}", fields[1]),
        })?;
        let mut features = Vec::with_capacity(schema.count());
        for (name, field) in schema.names().iter().zip(&fields[2..width - 1]) {
            let v: f64 = field.parse().map_err(|e| DataError::Parse {
                row,
                detail: format!("bad value {field:?} for feature {name}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Parse {
                    row,
                    detail: format!("non-finite value {field:?} for feature {name}"),
                });
            }
            features.push(v);
        }
        let decision = match fields[width - 1] {
            "0" => Decision::NoOrder,
            "1" => Decision::Order,
            other => {
                return Err(DataError::Parse {
                    row,
                    detail: format!("decision must be 0 or 1, found {other:?}"),
                })
            }
        };
        examples.push(Example {
            state: PatientState {
                patient_id,
                state_index,
                features,
            },
            decision,
        });
    }
    Dataset::new(schema, examples)
}

/// Write a dataset as CSV (LF line endings). Floats use the shortest
/// representation that round-trips exactly, so `save_csv` followed by
/// [`load_csv`] reproduces the dataset bit for bit.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_csv(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<W: Write>(dataset: &Dataset, w: &mut W) -> std::io::Result<()> {
    write!(w, "patient_id,state_index")?;
    for name in dataset.schema.names() {
        write!(w, ",{name}")?;
    }
    writeln!(w, ",decision")?;
    for ex in &dataset.examples {
        write!(w, "{},{}", ex.state.patient_id, ex.state.state_index)?;
        for v in &ex.state.features {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", ex.decision)?;
    }
    Ok(())
}

/// Serialize to a CSV string (used by tests and the CLI for in-memory work).
pub fn to_csv_string(dataset: &Dataset) -> String {
    let mut buf = Vec::new();
    write_csv(dataset, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is always UTF-8")
}

/// Parse a dataset from a CSV string; same contract as [`load_csv`].
pub fn from_csv_string(text: &str, expected: Option<&FeatureSchema>) -> Result<Dataset, DataError> {
    parse_csv(text, expected)
}

/// Split a dataset into three partitions at the patient level: every state
/// of a given patient lands in the same partition. The assignment is a
/// deterministic function of the patient id set, the fractions, and the
/// seed — row order within the input does not matter, and row order within
/// each partition follows the input. Fractions must be positive and sum to
/// 1 (±1e-9); a partition that would receive zero patients is an error.
pub fn split_by_patient(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    let (f1, f2, f3) = fractions;
    if !(f1 > 0.0 && f2 > 0.0 && f3 > 0.0) || ((f1 + f2 + f3) - 1.0).abs() > 1e-9 {
        return Err(DataError::InvalidFractions(fractions));
    }
    if dataset.is_empty() {
        return Err(DataError::EmptyDataset);
    }

    let mut ids: Vec<&str> = dataset.patient_ids();
    let total = ids.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let n1 = ((f1 * total as f64).round() as usize).min(total);
    let n2 = ((f2 * total as f64).round() as usize).min(total - n1);
    let n3 = total - n1 - n2;
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(DataError::DegenerateSplit(format!(
            "{total} patients cannot fill partitions of {n1}/{n2}/{n3}"
        )));
    }

    let mut part_of: HashMap<&str, u8> = HashMap::with_capacity(total);
    for (i, id) in ids.iter().enumerate() {
        let part = if i < n1 {
            0
        } else if i < n1 + n2 {
            1
        } else {
            2
        };
        part_of.insert(id, part);
    }

    let mut parts: [Vec<Example>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for ex in &dataset.examples {
        let part = part_of[ex.state.patient_id.as_str()];
        parts[part as usize].push(ex.clone());
    }
    let [a, b, c] = parts;
    Ok((
        Dataset::new(dataset.schema.clone(), a)?,
        Dataset::new(dataset.schema.clone(), b)?,
        Dataset::new(dataset.schema.clone(), c)?,
    ))
}

/// Per-feature centering and scaling parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    mean: Vec<f64>,
    scale: Vec<f64>,
    constant: Vec<bool>,
}

impl StandardizationStats {
    /// Rebuild stats from stored means and scales (e.g. a model file).
    /// Scales must be positive and finite; constant-column flags are not
    /// persisted, so they default to false — standardized output is
    /// unchanged because a constant column stored scale 1.
    pub fn from_parts(mean: Vec<f64>, scale: Vec<f64>) -> Result<Self, DataError> {
        if mean.len() != scale.len() {
            return Err(DataError::Schema(format!(
                "{} means but {} scales",
                mean.len(),
                scale.len()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Schema("non-finite mean".into()));
        }
        if scale.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(DataError::Schema("scales must be positive and finite".into()));
        }
        let constant = vec![false; mean.len()];
        Ok(Self { mean, scale, constant })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn is_constant(&self, feature: usize) -> bool {
        self.constant[feature]
    }

    /// Standardize one raw feature vector: `(v - mean) / scale` per feature.
    pub fn apply_vec(&self, features: &[f64]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.mean.len());
        features
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Fit per-feature mean and population standard deviation (divide by N).
/// Constant features are flagged and given scale 1 so they center to zero
/// instead of dividing by zero.
pub fn fit_standardizer(dataset: &Dataset) -> Result<StandardizationStats, DataError> {
    if dataset.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let k = dataset.schema.count();
    let n = dataset.len() as f64;

    let mut mean = vec![0.0; k];
    for ex in &dataset.examples {
        for (acc, v) in mean.iter_mut().zip(&ex.state.features) {
            *acc += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }

    let mut var = vec![0.0; k];
    for ex in &dataset.examples {
        for ((acc, v), m) in var.iter_mut().zip(&ex.state.features).zip(&mean) {
            let d = v - m;
            *acc += d * d;
        }
    }

    let mut scale = Vec::with_capacity(k);
    let mut constant = Vec::with_capacity(k);
    for (v, m) in var.iter().zip(&mean) {
        let sd = (v / n).sqrt();
        let is_const = sd <= 1e-12 * m.abs().max(1.0);
        constant.push(is_const);
        scale.push(if is_const { 1.0 } else { sd });
    }
    Ok(StandardizationStats { mean, scale, constant })
}

/// Standardize every example with previously fitted stats. Errors if the
/// stats and the dataset disagree on feature count.
pub fn apply_standardizer(
    stats: &StandardizationStats,
    dataset: &Dataset,
) -> Result<Dataset, DataError> {
    if stats.len() != dataset.schema.count() {
        return Err(DataError::Schema(format!(
            "stats cover {} features, dataset has {}",
            stats.len(),
            dataset.schema.count()
        )));
    }
    let examples = dataset
        .examples
        .iter()
        .map(|ex| Example {
            state: PatientState {
                patient_id: ex.state.patient_id.clone(),
                state_index: ex.state.state_index,
                features: stats.apply_vec(&ex.state.features),
            },
            decision: ex.decision,
        })
        .collect();
    Dataset::new(dataset.schema.clone(), examples)
}
