//! Calibrate the alert threshold on held-out data and save a deployable
//! model file.
//!
//! The threshold is the order statistic of held-out scores that keeps the
//! requested fraction of normal decisions below alert: with N calibration
//! scores, the achieved specificity lands in [target, target + 1/N].
//!
//! ```sh
//! cargo run --release --example calibrate_threshold
//! ```

use cadet::dataset::split_by_patient;
use cadet::detector::{calibrate, load_model, save_model, score_batch};
use cadet::svm::{train, KernelSpec, TrainConfig};
use cadet::synthgen::{generate, GenConfig};

fn main() {
    let (dataset, _) = generate(&GenConfig {
        n_patients: 600,
        seed: 7,
        ..GenConfig::default()
    })
    .expect("valid config");

    // Patient-level split keeps each patient's states on one side.
    let (train_set, calib_set, _test) =
        split_by_patient(&dataset, (0.6, 0.2, 0.2), 7).expect("enough patients");

    let kernel = KernelSpec::rbf_for_dimension(dataset.schema().count());
    let (model, _) = train(&train_set, &kernel, &TrainConfig::default()).expect("training");

    let scores = score_batch(&model, calib_set.examples()).expect("scoring");
    for target in [0.90, 0.94, 0.99] {
        let threshold = calibrate(&scores, target).expect("non-empty calibration set");
        let kept = scores.iter().filter(|s| s.value >= threshold.value).count();
        println!(
            "target specificity {target:.2} -> threshold {:>9.5} (keeps {kept}/{} calibration states quiet)",
            threshold.value,
            scores.len()
        );
    }

    let threshold = calibrate(&scores, 0.94).expect("non-empty calibration set");
    let out = std::path::Path::new("target/examples-output");
    std::fs::create_dir_all(out).expect("create output dir");
    let path = out.join("calibrated.cadet");
    save_model(&model, Some(&threshold), &path).expect("write model");
    println!();
    println!("wrote {}", path.display());

    // Round trip: the file restores the exact same floats.
    let (reloaded, restored) = load_model(&path).expect("read model");
    assert_eq!(reloaded.bias().to_bits(), model.bias().to_bits());
    assert_eq!(restored.unwrap().value.to_bits(), threshold.value.to_bits());
    println!("reload check: bias and threshold restored bit-for-bit");
}
