//! Generate a synthetic cohort and inspect what came out.
//!
//! ```sh
//! cargo run --release --example generate_dataset
//! ```

use cadet::dataset::save_csv;
use cadet::synthgen::{generate, write_policy_trace, GenConfig};

fn main() {
    let config = GenConfig {
        n_patients: 500,
        seed: 42,
        ..GenConfig::default()
    };
    let (dataset, trace) = generate(&config).expect("valid config");

    let out = std::path::Path::new("target/examples-output");
    std::fs::create_dir_all(out).expect("create output dir");
    save_csv(&dataset, &out.join("cohort.csv")).expect("write dataset");
    write_policy_trace(&trace, &out.join("cohort_trace.csv")).expect("write trace");

    let (no_orders, orders) = dataset.count_decisions();
    let flips = trace.iter().filter(|row| row.noise_applied).count();
    println!("patients:        {}", dataset.patient_ids().len());
    println!("states:          {}", dataset.len());
    println!("features/state:  {}", dataset.schema().count());
    println!("orders:          {orders} ({:.2}%)", 100.0 * orders as f64 / dataset.len() as f64);
    println!("no-orders:       {no_orders}");
    println!("noise flips:     {flips}");
    println!();
    println!("wrote {}", out.join("cohort.csv").display());
    println!("wrote {}", out.join("cohort_trace.csv").display());
    println!();
    println!("first three feature names: {:?}", &dataset.schema().names()[..3]);
    let first = &dataset.examples()[0];
    println!(
        "first state: patient {} index {} decision {}",
        first.state.patient_id, first.state.state_index, first.decision
    );
}
