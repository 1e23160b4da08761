//! Train the discriminant model and look at individual state scores.
//!
//! The score of a recorded decision is `d(y|x) = (2y - 1) * f(x)`: the
//! signed margin of the decision actually taken. Low scores mean the
//! model thinks the decision contradicts what usually happens in states
//! like `x`.
//!
//! ```sh
//! cargo run --release --example train_and_score
//! ```

use cadet::detector::score;
use cadet::svm::{train, KernelSpec, TrainConfig};
use cadet::synthgen::{generate, GenConfig};

fn main() {
    let (dataset, _) = generate(&GenConfig {
        n_patients: 500,
        seed: 42,
        ..GenConfig::default()
    })
    .expect("valid config");

    let kernel = KernelSpec::rbf_for_dimension(dataset.schema().count());
    let config = TrainConfig::default();
    let (model, diagnostics) = train(&dataset, &kernel, &config).expect("training succeeds");

    println!("trained on {} states", dataset.len());
    println!("support vectors: {}", model.support_count());
    println!("dual objective:  {:.6}", diagnostics.dual_objective);
    println!("kkt violation:   {:.2e}", diagnostics.max_kkt_violation);
    println!("converged:       {}", diagnostics.converged);
    println!();

    // Score a handful of states, including both decisions for the first
    // one to show the antisymmetry.
    println!("{:<10} {:>6} {:>10} {:>12}", "patient", "state", "decision", "score");
    for ex in dataset.examples().iter().take(5) {
        let s = score(&model, ex).expect("schema matches");
        println!(
            "{:<10} {:>6} {:>10} {:>12.4}",
            ex.state.patient_id, ex.state.state_index, ex.decision.bit(), s.value
        );
    }
    let first = &dataset.examples()[0];
    let mut flipped = first.clone();
    flipped.decision = flipped.decision.inverted();
    let s = score(&model, &flipped).expect("schema matches");
    println!(
        "{:<10} {:>6} {:>10} {:>12.4}  <- the opposite decision, score negated",
        flipped.state.patient_id, flipped.state.state_index, flipped.decision.bit(), s.value
    );
}
