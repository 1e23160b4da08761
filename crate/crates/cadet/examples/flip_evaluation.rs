//! Measure detection quality by planting known anomalies: flip a fraction
//! of recorded decisions and check who finds them.
//!
//! ```sh
//! cargo run --release --example flip_evaluation
//! ```

use cadet::dataset::split_by_patient;
use cadet::detector::{calibrate, score_batch};
use cadet::evaluation::{compare, evaluate_baseline, evaluate_detector, inject_flips, write_roc_csv};
use cadet::svm::{train, KernelSpec, TrainConfig};
use cadet::synthgen::{default_screen_ruleset, generate, GenConfig};

fn main() {
    let (dataset, _) = generate(&GenConfig {
        n_patients: 800,
        seed: 123,
        ..GenConfig::default()
    })
    .expect("valid config");
    let (train_set, calib_set, test_set) =
        split_by_patient(&dataset, (0.6, 0.2, 0.2), 123).expect("enough patients");

    let kernel = KernelSpec::rbf_for_dimension(dataset.schema().count());
    let (model, _) = train(&train_set, &kernel, &TrainConfig::default()).expect("training");
    let threshold = calibrate(
        &score_batch(&model, calib_set.examples()).expect("scoring"),
        0.94,
    )
    .expect("calibration");

    // Plant anomalies: 1% of test decisions are silently inverted.
    let items = inject_flips(&test_set, 0.01, 99).expect("valid fraction");
    let planted = items.iter().filter(|it| it.expected_anomaly).count();
    println!("planted {planted} flipped decisions among {} test states", items.len());
    println!();

    let (detector_report, _) = evaluate_detector(&model, &threshold, &items).expect("evaluation");
    let baseline_report = evaluate_baseline(&default_screen_ruleset(), &items);
    let comparison = compare(&detector_report, &baseline_report).expect("same eval set");
    println!("{comparison}");

    if let Some(curve) = &detector_report.roc {
        let out = std::path::Path::new("target/examples-output");
        std::fs::create_dir_all(out).expect("create output dir");
        let path = out.join("roc.csv");
        write_roc_csv(curve, &path).expect("write roc");
        println!();
        println!("ROC curve ({} points) written to {}", curve.points.len(), path.display());
    }
}
