//! The whole workflow in one file: generate, split, train, calibrate,
//! evaluate, and save every artifact.
//!
//! ```sh
//! cargo run --release --example full_pipeline
//! ```

use cadet::dataset::{save_csv, split_by_patient};
use cadet::detector::{calibrate, save_model, score_batch};
use cadet::evaluation::{
    compare, evaluate_baseline, evaluate_detector, inject_flips, write_confusion_csv,
    write_roc_csv,
};
use cadet::svm::{train, KernelSpec, TrainConfig};
use cadet::synthgen::{default_screen_ruleset, generate, write_policy_trace, GenConfig};

fn main() {
    let out = std::path::Path::new("target/examples-output/pipeline");
    std::fs::create_dir_all(out).expect("create output dir");
    let seed = 20240101;

    // 1. Cohort.
    let config = GenConfig { seed, ..GenConfig::default() };
    let (dataset, trace) = generate(&config).expect("valid config");
    save_csv(&dataset, &out.join("dataset.csv")).expect("write dataset");
    write_policy_trace(&trace, &out.join("policy_trace.csv")).expect("write trace");
    let (_, orders) = dataset.count_decisions();
    println!(
        "1. generated {} states / {} patients ({} orders)",
        dataset.len(),
        dataset.patient_ids().len(),
        orders
    );

    // 2. Patient-level split: train / calibrate / test.
    let (train_set, calib_set, test_set) =
        split_by_patient(&dataset, (0.6, 0.2, 0.2), seed).expect("enough patients");
    println!(
        "2. split into {} / {} / {} states",
        train_set.len(),
        calib_set.len(),
        test_set.len()
    );

    // 3. Model.
    let kernel = KernelSpec::rbf_for_dimension(dataset.schema().count());
    let (model, diagnostics) =
        train(&train_set, &kernel, &TrainConfig::default()).expect("training");
    println!(
        "3. trained: {} support vectors, converged: {}",
        model.support_count(),
        diagnostics.converged
    );

    // 4. Threshold.
    let scores = score_batch(&model, calib_set.examples()).expect("scoring");
    let threshold = calibrate(&scores, 0.94).expect("calibration");
    save_model(&model, Some(&threshold), &out.join("model.cadet")).expect("write model");
    println!("4. calibrated threshold {:.5} (target specificity 0.94)", threshold.value);

    // 5. Evaluation against the built-in screening baseline.
    let items = inject_flips(&test_set, 0.01, seed).expect("valid fraction");
    let (detector_report, _) = evaluate_detector(&model, &threshold, &items).expect("evaluation");
    let baseline_report = evaluate_baseline(&default_screen_ruleset(), &items);
    let comparison = compare(&detector_report, &baseline_report).expect("same eval set");
    if let Some(curve) = &detector_report.roc {
        write_roc_csv(curve, &out.join("roc.csv")).expect("write roc");
    }
    write_confusion_csv(&detector_report, &out.join("confusion.csv")).expect("write confusion");
    std::fs::write(out.join("summary.txt"), format!("{comparison}\n")).expect("write summary");
    println!("5. evaluated on {} flip-injected test states:", items.len());
    println!();
    println!("{comparison}");
    println!();
    println!("artifacts in {}", out.display());
}
