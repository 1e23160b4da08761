//! Command-line workflows over the library: `gen`, `train`, `calibrate`,
//! `evaluate`, and the end-to-end `pipeline`.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 for usage
//! errors (bad flags or flag values), 2 for data errors (unreadable or
//! malformed input files, failed runs). All randomness flows from explicit
//! `--seed` flags, so reruns are byte-identical; `--threads` changes only
//! wall time, never output bytes.

use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::baseline::RuleSet;
use crate::dataset::{self, split_by_patient};
use crate::detector::{calibrate, load_model, save_model, score_batch};
use crate::evaluation::{
    compare, evaluate_baseline, evaluate_detector, format_pct, inject_flips, metrics,
    read_confusion_csv, write_confusion_csv, write_roc_csv, Comparison, EvalReport,
};
use crate::svm::{train, ClassWeighting, KernelSpec, SvmModel, TrainConfig};
use crate::synthgen::{
    default_schema, default_screen_ruleset, generate, mix, write_policy_trace, GenConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

macro_rules! data_errors {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        })*
    };
}

data_errors!(
    std::io::Error,
    crate::dataset::DataError,
    crate::synthgen::GenError,
    crate::detector::DetectorError,
    crate::baseline::RuleError,
    crate::svm::SvmError,
    crate::evaluation::EvalError,
);

#[derive(Parser)]
#[command(
    name = "cadet",
    version,
    about = "Conditional anomaly detection for patient-management decisions"
)]
struct Cli {
    /// Worker threads for scoring (0 = automatic). Affects wall time only,
    /// never output bytes.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled cohort with a policy audit trail
    Gen(GenArgs),
    /// Train the discriminant model on a labelled dataset
    Train(TrainArgs),
    /// Attach an alert threshold calibrated to a target specificity
    Calibrate(CalibrateArgs),
    /// Score a dataset with injected decision flips and compare to a rule baseline
    Evaluate(EvaluateArgs),
    /// Generate, split, train, calibrate, and evaluate in one run
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelChoice {
    Linear,
    Rbf,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Optional key=value config file; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_patients: Option<usize>,
    #[arg(long)]
    mean_states: Option<f64>,
    /// Probability of flipping a recorded decision away from policy
    #[arg(long)]
    noise: Option<f64>,
    /// Probability of the thrombocytopenia-like crash among exposed patients
    #[arg(long)]
    hit_rate: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Labelled dataset CSV
    #[arg(long)]
    data: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelChoice::Rbf)]
    kernel: KernelChoice,
    /// RBF width; defaults to 1 / n_features
    #[arg(long)]
    gamma: Option<f64>,
    /// Soft-margin cost
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Scale the minority-class cost up to balance the classes
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    balanced: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on majority-class rows kept for training
    #[arg(long, default_value_t = 5000)]
    max_train: usize,
    /// Solver stopping tolerance
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Calibration dataset CSV (held out from training)
    #[arg(long)]
    data: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Fraction of normal states that must stay below alert
    #[arg(long, default_value_t = 0.94)]
    target_specificity: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Calibrated model file
    #[arg(long, required_unless_present = "confusion")]
    model: Option<PathBuf>,
    /// Test dataset CSV
    #[arg(long, required_unless_present = "confusion")]
    data: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, required_unless_present = "confusion")]
    out: Option<PathBuf>,
    /// Fraction of test decisions to flip as planted anomalies
    #[arg(long, default_value_t = 0.01)]
    flip_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Baseline rules file (defaults to the built-in screening rule)
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Print metrics for an existing confusion CSV and exit
    #[arg(long, conflicts_with_all = ["model", "data", "out", "rules"])]
    confusion: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Output directory (created if missing)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional key=value generator config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_patients: Option<usize>,
    #[arg(long, value_enum, default_value_t = KernelChoice::Rbf)]
    kernel: KernelChoice,
    /// RBF width; defaults to 1 / n_features
    #[arg(long)]
    gamma: Option<f64>,
    /// Soft-margin cost
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Scale the minority-class cost up to balance the classes
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    balanced: bool,
    /// Fraction of normal states that must stay below alert
    #[arg(long, default_value_t = 0.94)]
    target_specificity: f64,
    /// Fraction of test decisions to flip as planted anomalies
    #[arg(long, default_value_t = 0.01)]
    flip_fraction: f64,
    /// Baseline rules file (defaults to the built-in screening rule)
    #[arg(long)]
    rules: Option<PathBuf>,
}

/// Run the CLI and return the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Ignore failure: the global pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Calibrate(args) => cmd_calibrate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

/// Insertion-ordered `key = value` record of what a run did. Contains no
/// timestamps, so identical runs produce identical manifests.
struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    fn new(subcommand: &str) -> Self {
        let mut m = RunManifest { entries: Vec::new() };
        m.push("tool", format!("cadet {}", env!("CARGO_PKG_VERSION")));
        m.push("subcommand", subcommand);
        m
    }

    fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        for (key, value) in &self.entries {
            writeln!(w, "{key} = {value}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn resolved_gen_config(
    config_file: Option<&Path>,
    seed: Option<u64>,
    n_patients: Option<usize>,
    mean_states: Option<f64>,
    noise: Option<f64>,
    hit_rate: Option<f64>,
) -> Result<GenConfig, CliError> {
    let mut config = match config_file {
        Some(path) => GenConfig::from_file(path)?,
        None => GenConfig::default(),
    };
    if let Some(v) = seed {
        config.seed = v;
    }
    if let Some(v) = n_patients {
        config.n_patients = v;
    }
    if let Some(v) = mean_states {
        config.mean_states_per_patient = v;
    }
    if let Some(v) = noise {
        config.decision_noise = v;
    }
    if let Some(v) = hit_rate {
        config.hit_event_rate = v;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn resolve_kernel(
    choice: KernelChoice,
    gamma: Option<f64>,
    n_features: usize,
) -> Result<KernelSpec, CliError> {
    match (choice, gamma) {
        (KernelChoice::Linear, None) => Ok(KernelSpec::Linear),
        (KernelChoice::Linear, Some(_)) => {
            Err(usage("--gamma only applies to the rbf kernel"))
        }
        (KernelChoice::Rbf, None) => Ok(KernelSpec::rbf_for_dimension(n_features)),
        (KernelChoice::Rbf, Some(g)) => {
            let spec = KernelSpec::Rbf { gamma: g };
            spec.validate().map_err(|e| usage(e.to_string()))?;
            Ok(spec)
        }
    }
}

fn kernel_label(kernel: &KernelSpec) -> String {
    match kernel {
        KernelSpec::Linear => "linear".to_string(),
        KernelSpec::Rbf { gamma } => format!("rbf gamma={gamma}"),
    }
}

fn load_baseline_rules(
    rules_path: Option<&Path>,
    model: &SvmModel,
) -> Result<RuleSet, CliError> {
    match rules_path {
        Some(path) => Ok(RuleSet::from_file(path, model.schema())?),
        None => {
            if model.schema().names() != default_schema().names() {
                return Err(usage(
                    "the built-in baseline rules require the generator's feature schema; \
                     pass --rules with rules written for this dataset",
                ));
            }
            Ok(default_screen_ruleset())
        }
    }
}

fn write_reports(
    out: &Path,
    detector_report: &EvalReport,
    comparison: &Comparison,
) -> Result<(), CliError> {
    if let Some(roc) = &detector_report.roc {
        write_roc_csv(roc, &out.join("roc.csv"))?;
    }
    write_confusion_csv(detector_report, &out.join("confusion.csv"))?;
    let mut text = comparison.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(out.join("summary.txt"), text)?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let config = resolved_gen_config(
        args.config.as_deref(),
        args.seed,
        args.n_patients,
        args.mean_states,
        args.noise,
        args.hit_rate,
    )?;
    fs::create_dir_all(&args.out)?;
    let (ds, trace) = generate(&config)?;
    let data_path = args.out.join("dataset.csv");
    dataset::save_csv(&ds, &data_path)?;
    let trace_path = args.out.join("policy_trace.csv");
    write_policy_trace(&trace, &trace_path)?;

    let (no_orders, orders) = ds.count_decisions();
    let mut manifest = RunManifest::new("gen");
    manifest.push("seed", config.seed);
    manifest.push("n_patients", config.n_patients);
    manifest.push("mean_states_per_patient", config.mean_states_per_patient);
    manifest.push("decision_noise", config.decision_noise);
    manifest.push("hit_event_rate", config.hit_event_rate);
    manifest.push("states", ds.len());
    manifest.push("orders", orders);
    manifest.push("no_orders", no_orders);
    manifest.push("dataset", data_path.display());
    manifest.push("policy_trace", trace_path.display());
    manifest.write(&args.out.join("manifest.txt"))?;

    println!(
        "generated {} states over {} patients ({} orders, {} no-orders)",
        ds.len(),
        ds.patient_ids().len(),
        orders,
        no_orders
    );
    Ok(())
}

fn train_config(
    c: f64,
    balanced: bool,
    seed: u64,
    max_train: usize,
    tol: f64,
) -> Result<TrainConfig, CliError> {
    let config = TrainConfig {
        c,
        class_weighting: if balanced {
            ClassWeighting::Balanced
        } else {
            ClassWeighting::None
        },
        tol,
        max_passes: None,
        seed,
        max_train,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok(config)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let ds = dataset::load_csv(&args.data, None)?;
    let kernel = resolve_kernel(args.kernel, args.gamma, ds.schema().count())?;
    let config = train_config(args.c, args.balanced, args.seed, args.max_train, args.tol)?;

    let (model, diagnostics) = train(&ds, &kernel, &config)?;
    fs::create_dir_all(&args.out)?;
    let model_path = args.out.join("model.cadet");
    save_model(&model, None, &model_path)?;

    let mut manifest = RunManifest::new("train");
    manifest.push("data", args.data.display());
    manifest.push("kernel", kernel_label(&kernel));
    manifest.push("c", config.c);
    manifest.push("balanced", args.balanced);
    manifest.push("seed", config.seed);
    manifest.push("max_train", config.max_train);
    manifest.push("tol", config.tol);
    manifest.push("train_states", ds.len());
    manifest.push("support_vectors", model.support_count());
    manifest.push("dual_objective", diagnostics.dual_objective);
    manifest.push("converged", diagnostics.converged);
    manifest.push("passes", diagnostics.passes);
    manifest.push("model", model_path.display());
    manifest.write(&args.out.join("manifest.txt"))?;

    println!(
        "trained on {} states: {} support vectors, dual objective {:.6}, converged: {}",
        ds.len(),
        model.support_count(),
        diagnostics.dual_objective,
        diagnostics.converged
    );
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    if !(args.target_specificity > 0.0 && args.target_specificity < 1.0) {
        return Err(usage(format!(
            "--target-specificity must lie strictly between 0 and 1, got {}",
            args.target_specificity
        )));
    }
    let (model, _) = load_model(&args.model)?;
    let ds = dataset::load_csv(&args.data, Some(model.schema()))?;
    let scores = score_batch(&model, ds.examples())?;
    let threshold = calibrate(&scores, args.target_specificity)?;
    let achieved = scores.iter().filter(|s| s.value >= threshold.value).count() as f64
        / scores.len() as f64;

    fs::create_dir_all(&args.out)?;
    let model_path = args.out.join("model.cadet");
    save_model(&model, Some(&threshold), &model_path)?;

    let mut manifest = RunManifest::new("calibrate");
    manifest.push("model_in", args.model.display());
    manifest.push("data", args.data.display());
    manifest.push("target_specificity", args.target_specificity);
    manifest.push("calibration_states", ds.len());
    manifest.push("threshold", threshold.value);
    manifest.push("achieved_specificity", achieved);
    manifest.push("model", model_path.display());
    manifest.write(&args.out.join("manifest.txt"))?;

    println!(
        "calibrated threshold {:.6} at target specificity {} (achieved {:.4} on {} states)",
        threshold.value,
        args.target_specificity,
        achieved,
        ds.len()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    if let Some(path) = &args.confusion {
        let cm = read_confusion_csv(path)?;
        let m = metrics(&cm);
        println!(
            "tp={} fp={} tn={} fn={}",
            cm.true_positives, cm.false_positives, cm.true_negatives, cm.false_negatives
        );
        println!("sensitivity: {}", format_pct(m.sensitivity));
        println!("specificity: {}", format_pct(m.specificity));
        println!("ppv: {}", format_pct(m.ppv));
        println!("npv: {}", format_pct(m.npv));
        return Ok(());
    }

    if !(0.0..=1.0).contains(&args.flip_fraction) {
        return Err(usage(format!(
            "--flip-fraction must lie in [0, 1], got {}",
            args.flip_fraction
        )));
    }
    let model_path = args.model.expect("clap enforces presence");
    let data_path = args.data.expect("clap enforces presence");
    let out = args.out.expect("clap enforces presence");

    let (model, threshold) = load_model(&model_path)?;
    let threshold = threshold.ok_or_else(|| {
        CliError::Data(format!(
            "{} has no calibrated threshold; run `cadet calibrate` first",
            model_path.display()
        ))
    })?;
    let ds = dataset::load_csv(&data_path, Some(model.schema()))?;
    let items = inject_flips(&ds, args.flip_fraction, args.seed)?;
    let rules = load_baseline_rules(args.rules.as_deref(), &model)?;

    let (detector_report, _) = evaluate_detector(&model, &threshold, &items)?;
    let baseline_report = evaluate_baseline(&rules, &items);
    let comparison = compare(&detector_report, &baseline_report)?;

    fs::create_dir_all(&out)?;
    write_reports(&out, &detector_report, &comparison)?;

    let mut manifest = RunManifest::new("evaluate");
    manifest.push("model", model_path.display());
    manifest.push("data", data_path.display());
    manifest.push("flip_fraction", args.flip_fraction);
    manifest.push("seed", args.seed);
    manifest.push(
        "rules",
        args.rules
            .as_deref()
            .map_or_else(|| "built-in screen".to_string(), |p| p.display().to_string()),
    );
    manifest.push("test_states", items.len());
    manifest.push("threshold", threshold.value);
    if let Some(auc) = comparison.detector_auc {
        manifest.push("detector_auc", auc);
    }
    manifest.write(&out.join("manifest.txt"))?;

    println!("{comparison}");
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<(), CliError> {
    if !(args.target_specificity > 0.0 && args.target_specificity < 1.0) {
        return Err(usage(format!(
            "--target-specificity must lie strictly between 0 and 1, got {}",
            args.target_specificity
        )));
    }
    if !(0.0..=1.0).contains(&args.flip_fraction) {
        return Err(usage(format!(
            "--flip-fraction must lie in [0, 1], got {}",
            args.flip_fraction
        )));
    }

    let config = resolved_gen_config(
        args.config.as_deref(),
        Some(args.seed),
        args.n_patients,
        None,
        None,
        None,
    )?;
    fs::create_dir_all(&args.out)?;

    let (ds, trace) = generate(&config)?;
    let data_path = args.out.join("dataset.csv");
    dataset::save_csv(&ds, &data_path)?;
    write_policy_trace(&trace, &args.out.join("policy_trace.csv"))?;

    let (train_set, calib_set, test_set) =
        split_by_patient(&ds, (0.6, 0.2, 0.2), mix(args.seed, 1))?;

    let kernel = resolve_kernel(args.kernel, args.gamma, ds.schema().count())?;
    let config_train = train_config(args.c, args.balanced, mix(args.seed, 2), 5000, 1e-3)?;
    let (model, diagnostics) = train(&train_set, &kernel, &config_train)?;

    let scores = score_batch(&model, calib_set.examples())?;
    let threshold = calibrate(&scores, args.target_specificity)?;
    let model_path = args.out.join("model.cadet");
    save_model(&model, Some(&threshold), &model_path)?;

    let items = inject_flips(&test_set, args.flip_fraction, mix(args.seed, 3))?;
    let rules = load_baseline_rules(args.rules.as_deref(), &model)?;
    let (detector_report, _) = evaluate_detector(&model, &threshold, &items)?;
    let baseline_report = evaluate_baseline(&rules, &items);
    let comparison = compare(&detector_report, &baseline_report)?;

    write_reports(&args.out, &detector_report, &comparison)?;

    let mut manifest = RunManifest::new("pipeline");
    manifest.push("seed", args.seed);
    manifest.push("n_patients", config.n_patients);
    manifest.push("states", ds.len());
    manifest.push("split", "0.6/0.2/0.2 by patient");
    manifest.push("train_states", train_set.len());
    manifest.push("calibration_states", calib_set.len());
    manifest.push("test_states", test_set.len());
    manifest.push("kernel", kernel_label(&kernel));
    manifest.push("c", config_train.c);
    manifest.push("balanced", args.balanced);
    manifest.push("target_specificity", args.target_specificity);
    manifest.push("flip_fraction", args.flip_fraction);
    manifest.push(
        "rules",
        args.rules
            .as_deref()
            .map_or_else(|| "built-in screen".to_string(), |p| p.display().to_string()),
    );
    manifest.push("support_vectors", model.support_count());
    manifest.push("converged", diagnostics.converged);
    manifest.push("threshold", threshold.value);
    if let Some(auc) = comparison.detector_auc {
        manifest.push("detector_auc", auc);
    }
    manifest.push("dataset", data_path.display());
    manifest.push("model", model_path.display());
    manifest.write(&args.out.join("manifest.txt"))?;

    println!(
        "pipeline complete: {} train / {} calibration / {} test states",
        train_set.len(),
        calib_set.len(),
        test_set.len()
    );
    println!("{comparison}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(args)
    }

    #[test]
    fn subcommands_parse_with_required_flags() {
        assert!(parse(&["cadet", "gen", "--out", "x"]).is_ok());
        assert!(parse(&["cadet", "train", "--data", "d.csv", "--out", "x"]).is_ok());
        assert!(parse(&["cadet", "evaluate", "--confusion", "c.csv"]).is_ok());
        assert!(parse(&[
            "cadet", "pipeline", "--out", "x", "--seed", "7", "--kernel", "linear"
        ])
        .is_ok());
    }

    #[test]
    fn missing_required_flags_fail() {
        assert!(parse(&["cadet", "gen"]).is_err());
        assert!(parse(&["cadet", "train", "--data", "d.csv"]).is_err());
        assert!(parse(&["cadet", "evaluate"]).is_err());
        assert!(parse(&["cadet", "nonsense"]).is_err());
    }

    #[test]
    fn confusion_mode_conflicts_with_model() {
        let err = parse(&[
            "cadet",
            "evaluate",
            "--confusion",
            "c.csv",
            "--model",
            "m.cadet",
        ])
        .err()
        .expect("conflicting flags must be rejected");
        assert_eq!(err.kind(), ErrorKind::ArgumentConflict);
    }

    #[test]
    fn kernel_resolution_defaults_gamma_by_dimension() {
        let spec = resolve_kernel(KernelChoice::Rbf, None, 43).unwrap();
        match spec {
            KernelSpec::Rbf { gamma } => assert!((gamma - 1.0 / 43.0).abs() < 1e-15),
            other => panic!("expected rbf, got {other:?}"),
        }
        assert!(matches!(
            resolve_kernel(KernelChoice::Linear, None, 10),
            Ok(KernelSpec::Linear)
        ));
        assert!(resolve_kernel(KernelChoice::Linear, Some(0.5), 10).is_err());
        assert!(resolve_kernel(KernelChoice::Rbf, Some(-1.0), 10).is_err());
    }

    #[test]
    fn balanced_flag_takes_an_explicit_value() {
        let cli = parse(&[
            "cadet", "train", "--data", "d.csv", "--out", "x", "--balanced", "false",
        ])
        .unwrap();
        match cli.command {
            Command::Train(args) => assert!(!args.balanced),
            _ => panic!("expected train"),
        }
    }

    #[test]
    fn manifest_is_plain_key_value_lines() {
        let mut m = RunManifest::new("gen");
        m.push("seed", 7);
        let text: String = m
            .entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert!(text.starts_with(&format!("tool = cadet {}\n", env!("CARGO_PKG_VERSION"))));
        assert!(text.contains("subcommand = gen\n"));
        assert!(text.ends_with("seed = 7\n"));
    }

    #[test]
    fn usage_and_data_errors_map_to_exit_codes() {
        assert_eq!(usage("x").code(), EXIT_USAGE);
        let data: CliError = std::io::Error::other("x").into();
        assert_eq!(data.code(), EXIT_DATA);
    }
}
