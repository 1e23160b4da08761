//! Conditional anomaly detection for patient-management decisions.
//!
//! Plain outlier detection asks "is this patient state unusual?". That is the
//! wrong question for decision auditing: a state can be perfectly ordinary
//! while the decision attached to it is not, and vice versa. This crate asks
//! the conditional question instead — *given* this patient's state `x`, how
//! unusual is the decision `y` that was made? It learns a soft-margin SVM
//! discriminant `f(x)` from historical state/decision pairs and projects each
//! new pair onto a single signed score
//!
//! ```text
//! d(y|x) = (2y - 1) * f(x)
//! ```
//!
//! which is large when the decision agrees with past practice and negative
//! when it contradicts it. A threshold calibrated on held-out data to a target
//! specificity turns the score into an alert: `score < threshold` flags the
//! decision for review.
//!
//! # Module map
//!
//! - [`dataset`] — feature schemas, patient states, labelled examples, CSV
//!   persistence, patient-level splitting, and feature standardization.
//! - [`svm`] — kernels, a from-scratch SMO solver for the dual soft-margin
//!   problem with per-class costs, and the trained model representation.
//! - [`detector`] — conditional anomaly scores, specificity-targeted
//!   threshold calibration, verdicts, and the model file format.
//! - [`baseline`] — a rule-language baseline detector (first-match condition
//!   lists over named features) of the kind hospitals run in production.
//! - [`evaluation`] — label-flip injection, confusion matrices, ROC curves,
//!   and side-by-side comparison of detector vs. baseline.
//! - [`synthgen`] — a synthetic clinical time-series generator (platelet and
//!   hemoglobin trajectories under heparin exposure) with a known decision
//!   policy, so detectors can be scored against ground truth.
//! - [`cli`] — the `cadet` command-line front end gluing the above together.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release --example generate_dataset    # synthesize a cohort and inspect it
//! cargo run --release --example train_and_score     # train an SVM and score decisions
//! cargo run --release --example calibrate_threshold # pick a threshold for 94% specificity
//! cargo run --release --example rule_baseline       # the rule-language baseline detector
//! cargo run --release --example flip_evaluation     # ROC/PPV under injected label flips
//! cargo run --release --example full_pipeline       # generate -> train -> calibrate -> evaluate
//! ```
//!
//! The same flow is available as a binary: `cadet gen`, `cadet train`,
//! `cadet calibrate`, `cadet evaluate`, and `cadet pipeline`. Randomness
//! always flows from explicit `--seed` flags; two runs with the same inputs
//! produce byte-identical outputs.

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod detector;
pub mod evaluation;
pub mod svm;
pub mod synthgen;
