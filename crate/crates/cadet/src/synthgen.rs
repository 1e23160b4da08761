//! Synthetic clinical time series with a known decision policy.
//!
//! Real decision audits lack ground truth, so this module manufactures a
//! cohort where the truth is known by construction: each patient gets a
//! platelet/hemoglobin trajectory (some on heparin, a small fraction with a
//! heparin-induced-thrombocytopenia-like crash), a deterministic ordering
//! policy converts each state into the "correct" decision, and a small
//! noise rate flips some recorded decisions to mimic charting slop.
//!
//! Everything is a pure function of the seed: each patient draws from an
//! independent substream, so the output is byte-identical across runs and
//! insensitive to cohort-size changes elsewhere.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

use crate::baseline::RuleSet;
use crate::dataset::{Dataset, Decision, Example, FeatureSchema, PatientState};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("config parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Data(#[from] crate::dataset::DataError),
}

/// Cohort-level knobs. Defaults produce roughly 35k states over 3949
/// patients with an order prevalence under one percent.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n_patients: usize,
    /// Mean recorded states per patient (>= 1); state counts are
    /// 1 + Poisson(mean - 1).
    pub mean_states_per_patient: f64,
    /// Probability that a recorded decision is flipped away from policy.
    pub decision_noise: f64,
    /// Probability that a heparin-exposed patient develops the
    /// thrombocytopenia-like crash.
    pub hit_event_rate: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_patients: 3949,
            mean_states_per_patient: 8.76,
            decision_noise: 0.002,
            hit_event_rate: 0.03,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_patients == 0 {
            return Err(GenError::InvalidConfig("n_patients must be positive".into()));
        }
        if !(self.mean_states_per_patient.is_finite() && self.mean_states_per_patient >= 1.0) {
            return Err(GenError::InvalidConfig(format!(
                "mean_states_per_patient must be >= 1, got {}",
                self.mean_states_per_patient
            )));
        }
        for (name, v) in [
            ("decision_noise", self.decision_noise),
            ("hit_event_rate", self.hit_event_rate),
        ] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(GenError::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Parse `key=value` lines (`#` comments and blank lines ignored);
    /// missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, GenError> {
        let mut config = GenConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| GenError::Parse {
                line,
                detail: format!("expected key=value, found {trimmed:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn std::fmt::Display| GenError::Parse {
                line,
                detail: format!("bad value for {key}: {e}"),
            };
            match key {
                "n_patients" => config.n_patients = value.parse().map_err(|e| bad(&e))?,
                "mean_states_per_patient" => {
                    config.mean_states_per_patient = value.parse().map_err(|e| bad(&e))?
                }
                "decision_noise" => config.decision_noise = value.parse().map_err(|e| bad(&e))?,
                "hit_event_rate" => config.hit_event_rate = value.parse().map_err(|e| bad(&e))?,
                "seed" => config.seed = value.parse().map_err(|e| bad(&e))?,
                other => {
                    return Err(GenError::Parse {
                        line,
                        detail: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, GenError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// One patient's measured course. All series share one length (one entry
/// per recorded state); lab values are positive, `heparin_hours` is zero
/// whenever `on_heparin` is false and non-decreasing while it is true.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientTrajectory {
    pub patient_id: String,
    pub platelet: Vec<f64>,
    pub hemoglobin: Vec<f64>,
    pub on_heparin: Vec<bool>,
    pub heparin_hours: Vec<f64>,
}

impl PatientTrajectory {
    pub fn len(&self) -> usize {
        self.platelet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.platelet.is_empty()
    }

    fn assert_valid(&self) {
        let n = self.platelet.len();
        assert!(n > 0, "trajectory must have at least one state");
        assert!(
            self.hemoglobin.len() == n && self.on_heparin.len() == n && self.heparin_hours.len() == n,
            "trajectory series lengths differ"
        );
        assert!(
            self.platelet.iter().chain(&self.hemoglobin).all(|v| *v > 0.0 && v.is_finite()),
            "lab values must be positive and finite"
        );
    }
}

/// Feature names, in schema order. The first 13 summarize the platelet
/// series (recent values, slopes, relative changes, drops), mirrored for
/// hemoglobin; then heparin exposure, windowed statistics, and the running
/// result count.
const FEATURE_NAMES: [&str; 43] = [
    "plt_last",
    "plt_prev1",
    "plt_prev2",
    "plt_slope_w2",
    "plt_slope_w3",
    "plt_slope_w5",
    "plt_relchg_w1",
    "plt_relchg_w3",
    "plt_relchg_w5",
    "plt_drop_from_first",
    "plt_drop_from_nadir",
    "plt_nadir",
    "plt_first",
    "hgb_last",
    "hgb_prev1",
    "hgb_prev2",
    "hgb_slope_w2",
    "hgb_slope_w3",
    "hgb_slope_w5",
    "hgb_relchg_w1",
    "hgb_relchg_w3",
    "hgb_relchg_w5",
    "hgb_drop_from_first",
    "hgb_drop_from_nadir",
    "hgb_nadir",
    "hgb_first",
    "on_heparin",
    "heparin_hours",
    "plt_mean_w3",
    "plt_min_w3",
    "plt_max_w3",
    "plt_std_w3",
    "plt_mean_w5",
    "plt_min_w5",
    "plt_max_w5",
    "plt_std_w5",
    "hgb_mean_w3",
    "hgb_min_w3",
    "hgb_max_w3",
    "hgb_mean_w5",
    "hgb_min_w5",
    "hgb_max_w5",
    "n_results",
];

/// The 43-feature schema shared by the generator, the policy, and the
/// default rules.
pub fn default_schema() -> FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA
        .get_or_init(|| FeatureSchema::new(FEATURE_NAMES.to_vec()).expect("built-in names are valid"))
        .clone()
}

/// Thirteen summary features for one lab series up to (and including)
/// `t`, with missing history padded by carrying the earliest value.
fn series_block(series: &[f64], t: usize, out: &mut Vec<f64>) {
    let at = |k: isize| -> f64 {
        let idx = (t as isize + k).max(0) as usize;
        series[idx]
    };
    let last = series[t];
    let first = series[0];
    let nadir = series[..=t].iter().copied().fold(f64::INFINITY, f64::min);

    out.push(last);
    out.push(at(-1));
    out.push(at(-2));
    out.push(last - at(-1));
    out.push((last - at(-2)) / 2.0);
    out.push((last - at(-4)) / 4.0);
    out.push((last - at(-1)) / at(-1));
    out.push((last - at(-3)) / at(-3));
    out.push((last - at(-5)) / at(-5));
    out.push((first - last) / first);
    out.push((last - nadir) / nadir);
    out.push(nadir);
    out.push(first);
}

/// Windowed mean/min/max (and optionally population std) over the padded
/// last `w` values.
fn window_stats(series: &[f64], t: usize, w: usize, with_std: bool, out: &mut Vec<f64>) {
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut values = [0.0; 8];
    for (k, slot) in values[..w].iter_mut().enumerate() {
        let v = series[t.saturating_sub(k)];
        *slot = v;
        sum += v;
        min = min.min(v);
        max = max.max(v);
    }
    let mean = sum / w as f64;
    out.push(mean);
    out.push(min);
    out.push(max);
    if with_std {
        let var = values[..w]
            .iter()
            .map(|v| {
                let d = v - mean;
                d * d
            })
            .sum::<f64>()
            / w as f64;
        out.push(var.sqrt());
    }
}

/// The feature vector for one time point of a trajectory, using only
/// history up to `time_index`. Conforms to [`default_schema`].
pub fn extract_features(trajectory: &PatientTrajectory, time_index: usize) -> PatientState {
    trajectory.assert_valid();
    assert!(
        time_index < trajectory.len(),
        "time_index {time_index} out of range for {} states",
        trajectory.len()
    );
    let t = time_index;
    let mut features = Vec::with_capacity(FEATURE_NAMES.len());
    series_block(&trajectory.platelet, t, &mut features);
    series_block(&trajectory.hemoglobin, t, &mut features);
    features.push(f64::from(u8::from(trajectory.on_heparin[t])));
    features.push(trajectory.heparin_hours[t]);
    window_stats(&trajectory.platelet, t, 3, true, &mut features);
    window_stats(&trajectory.platelet, t, 5, true, &mut features);
    window_stats(&trajectory.hemoglobin, t, 3, false, &mut features);
    window_stats(&trajectory.hemoglobin, t, 5, false, &mut features);
    features.push((t + 1) as f64);
    debug_assert_eq!(features.len(), FEATURE_NAMES.len());
    PatientState {
        patient_id: trajectory.patient_id.clone(),
        state_index: t as u32,
        features,
    }
}

/// Policy constants: order the antibody test while on heparin when the
/// platelet count has halved from admission, or when it is depressed below
/// 100 after four days of exposure.
const POLICY_DROP: f64 = 0.5;
const POLICY_PLT_LOW: f64 = 100.0;
const POLICY_MIN_HOURS: f64 = 96.0;

struct PolicyIndices {
    on_heparin: usize,
    drop_from_first: usize,
    plt_last: usize,
    heparin_hours: usize,
}

fn policy_indices() -> &'static PolicyIndices {
    static IDX: OnceLock<PolicyIndices> = OnceLock::new();
    IDX.get_or_init(|| {
        let schema = default_schema();
        let find = |name: &str| schema.index_of(name).expect("built-in feature");
        PolicyIndices {
            on_heparin: find("on_heparin"),
            drop_from_first: find("plt_drop_from_first"),
            plt_last: find("plt_last"),
            heparin_hours: find("heparin_hours"),
        }
    })
}

/// The deterministic ordering policy over [`default_schema`] states.
pub fn policy_decide(state: &PatientState) -> Decision {
    let idx = policy_indices();
    let f = &state.features;
    assert_eq!(f.len(), FEATURE_NAMES.len(), "state does not conform to the default schema");
    let exposed = f[idx.on_heparin] >= 1.0;
    let deep_drop = f[idx.drop_from_first] >= POLICY_DROP;
    let low_and_long = f[idx.plt_last] < POLICY_PLT_LOW && f[idx.heparin_hours] >= POLICY_MIN_HOURS;
    if exposed && (deep_drop || low_and_long) {
        Decision::Order
    } else {
        Decision::NoOrder
    }
}

/// The policy transcribed into the rule language; agrees with
/// [`policy_decide`] on every state.
pub fn policy_ruleset() -> RuleSet {
    let text = format!(
        "IF on_heparin >= 1 AND plt_drop_from_first >= {POLICY_DROP} THEN 1\n\
         IF on_heparin >= 1 AND plt_last < {POLICY_PLT_LOW} AND heparin_hours >= {POLICY_MIN_HOURS} THEN 1\n\
         DEFAULT 0\n"
    );
    RuleSet::parse(&text, &default_schema()).expect("built-in rules are valid")
}

/// An intentionally trigger-happy screening rule of the kind hospitals run
/// in production: it fires on any moderate platelet dip during heparin
/// exposure, so it catches most real events at the cost of a large
/// false-alert pile. Used as the default comparison baseline.
pub fn default_screen_ruleset() -> RuleSet {
    let text = "IF on_heparin >= 1 AND plt_drop_from_first >= 0.2 THEN 1\nDEFAULT 0\n";
    RuleSet::parse(text, &default_schema()).expect("built-in rules are valid")
}

/// One row of the generator's audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTraceRow {
    pub patient_id: String,
    pub state_index: u32,
    /// What the policy said before noise.
    pub policy_decision: Decision,
    /// Whether the recorded decision was flipped away from policy.
    pub noise_applied: bool,
}

/// Write the audit trail as CSV.
pub fn write_policy_trace(rows: &[PolicyTraceRow], path: &Path) -> Result<(), GenError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "patient_id,state_index,policy_decision,noise_applied")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.patient_id,
            row.state_index,
            row.policy_decision,
            u8::from(row.noise_applied)
        )?;
    }
    w.flush()?;
    Ok(())
}

// Cohort shape constants (tuned so that defaults land near a realistic
// order prevalence of well under one percent).
const HEPARIN_EXPOSURE_RATE: f64 = 0.65;
const FULL_STAY_EXPOSURE_RATE: f64 = 0.7;
const PLT_BASELINE_MEAN: f64 = 230.0;
const PLT_BASELINE_SD: f64 = 45.0;
const PLT_NOISE_SD: f64 = 0.03;
const HGB_BASELINE_MEAN: f64 = 10.8;
const HGB_BASELINE_SD: f64 = 1.2;
const HGB_NOISE_SD: f64 = 0.02;

/// Generate a cohort: the labelled dataset plus the per-state audit trail
/// (same order as the dataset rows).
pub fn generate(config: &GenConfig) -> Result<(Dataset, Vec<PolicyTraceRow>), GenError> {
    config.validate()?;
    let schema = default_schema();
    let mut examples = Vec::new();
    let mut trace = Vec::new();

    for patient_index in 0..config.n_patients {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, patient_index as u64));
        let patient_id = format!("p{patient_index:05}");
        let trajectory = simulate_trajectory(&mut rng, config, patient_id);

        for t in 0..trajectory.len() {
            let state = extract_features(&trajectory, t);
            let policy_decision = policy_decide(&state);
            let noise_applied = rng.random_bool(config.decision_noise);
            let decision = if noise_applied {
                policy_decision.inverted()
            } else {
                policy_decision
            };
            trace.push(PolicyTraceRow {
                patient_id: state.patient_id.clone(),
                state_index: state.state_index,
                policy_decision,
                noise_applied,
            });
            examples.push(Example { state, decision });
        }
    }

    Ok((Dataset::new(schema, examples)?, trace))
}

/// Independent per-patient substream: a splitmix64-style hash of
/// (seed, index), so patient k's course never depends on cohort size.
/// Also used to derive stage sub-seeds from one pipeline seed.
pub(crate) fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(lambda).expect("lambda is positive");
    poisson.sample(rng) as usize
}

fn sample_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).expect("sd is positive").sample(rng)
}

fn simulate_trajectory(
    rng: &mut ChaCha8Rng,
    config: &GenConfig,
    patient_id: String,
) -> PatientTrajectory {
    let n = 1 + sample_poisson(rng, config.mean_states_per_patient - 1.0);

    // Heparin exposure: most exposed patients stay on it for the whole
    // observation window, the rest stop early.
    let exposed = rng.random_bool(HEPARIN_EXPOSURE_RATE);
    let stop_at = if exposed {
        if rng.random_bool(FULL_STAY_EXPOSURE_RATE) {
            n
        } else {
            rng.random_range(1..=n)
        }
    } else {
        0
    };

    let mut heparin_hours = vec![0.0; n];
    let mut on_heparin = vec![false; n];
    if exposed {
        let mut acc = rng.random_range(0.0..24.0);
        for t in 0..stop_at {
            if t > 0 {
                acc += rng.random_range(8.0..16.0);
            }
            heparin_hours[t] = acc;
            on_heparin[t] = true;
        }
    }

    // Platelets: a baseline, a benign post-admission dip with recovery,
    // and (rarely) a much deeper crash while exposed.
    let baseline = sample_normal(rng, PLT_BASELINE_MEAN, PLT_BASELINE_SD).clamp(60.0, 450.0);
    let dip_depth = rng.random_range(0.05..0.42);
    let dip_nadir_at = rng.random_range(2..=5) as f64;
    let recovery_rate = rng.random_range(0.05..0.12);

    let crash = exposed && stop_at >= 2 && rng.random_bool(config.hit_event_rate);
    let (crash_onset, crash_depth) = if crash {
        (rng.random_range(1..=stop_at - 1), rng.random_range(0.58..0.85))
    } else {
        (usize::MAX, 0.0)
    };

    let mut platelet = Vec::with_capacity(n);
    for t in 0..n {
        let tf = t as f64;
        let dip = if tf <= dip_nadir_at {
            dip_depth * tf / dip_nadir_at
        } else {
            (dip_depth - recovery_rate * (tf - dip_nadir_at)).max(0.0)
        };
        let crash_frac = if t >= crash_onset {
            crash_depth * (((t - crash_onset + 1) as f64) / 3.0).min(1.0)
        } else {
            0.0
        };
        let noise = sample_normal(rng, 0.0, PLT_NOISE_SD);
        let value = baseline * (1.0 - dip) * (1.0 - crash_frac) * noise.exp();
        platelet.push(value.max(5.0));
    }

    // Hemoglobin: independent baseline, a mild early dip, small noise.
    let hgb_base = sample_normal(rng, HGB_BASELINE_MEAN, HGB_BASELINE_SD).clamp(6.0, 17.0);
    let hgb_dip = rng.random_range(0.0..0.12);
    let mut hemoglobin = Vec::with_capacity(n);
    for t in 0..n {
        let frac = hgb_dip * (t.min(3) as f64) / 3.0;
        let noise = sample_normal(rng, 0.0, HGB_NOISE_SD);
        hemoglobin.push((hgb_base * (1.0 - frac) * noise.exp()).max(3.0));
    }

    PatientTrajectory {
        patient_id,
        platelet,
        hemoglobin,
        on_heparin,
        heparin_hours,
    }
}
