//! Express an alerting policy as text rules and flag disagreements.
//!
//! Rules are first-match conjunctions over named features, with a
//! mandatory default. A state is anomalous when the recorded decision
//! differs from what the rules recommend.
//!
//! ```sh
//! cargo run --release --example rule_baseline
//! ```

use cadet::baseline::{rule_detect, RuleSet};
use cadet::dataset::{Decision, Example};
use cadet::synthgen::{default_schema, extract_features, PatientTrajectory};

fn main() {
    let schema = default_schema();
    let text = "\
# Fire on a halved platelet count during heparin exposure,
# or a depressed count after four days on the drug.
IF on_heparin >= 1 AND plt_drop_from_first >= 0.5 THEN 1
IF on_heparin >= 1 AND plt_last < 100 AND heparin_hours >= 96 THEN 1
DEFAULT 0
";
    let rules = RuleSet::parse(text, &schema).expect("rules parse");
    println!("parsed {} rules + default {}", rules.rules().len(), rules.default_decision());
    println!();

    // A hand-built course: platelets halve while on heparin.
    let trajectory = PatientTrajectory {
        patient_id: "demo".into(),
        platelet: vec![220.0, 180.0, 140.0, 104.0, 88.0],
        hemoglobin: vec![11.0, 10.8, 10.5, 10.2, 10.0],
        on_heparin: vec![true; 5],
        heparin_hours: vec![12.0, 36.0, 60.0, 84.0, 108.0],
    };

    println!(
        "{:>5} {:>9} {:>10} {:>9} {:>9} {:>8}",
        "state", "platelet", "drop", "recorded", "rules", "anomaly"
    );
    for t in 0..trajectory.len() {
        let state = extract_features(&trajectory, t);
        let drop = state.features[schema.index_of("plt_drop_from_first").unwrap()];
        // Chart says "no order" everywhere; the rules start disagreeing
        // once the drop crosses one half.
        let example = Example {
            state,
            decision: Decision::NoOrder,
        };
        let verdict = rule_detect(&rules, &example);
        println!(
            "{:>5} {:>9.0} {:>10.3} {:>9} {:>9} {:>8}",
            t,
            trajectory.platelet[t],
            drop,
            example.decision.bit(),
            verdict.recommended.bit(),
            if verdict.is_anomaly { "YES" } else { "-" }
        );
    }

    println!();
    println!("round trip:\n{}", rules.to_text());
}
