//! Full acceptance suite at desk scale. Prints one PASS/FAIL line per
//! criterion; run with `--nocapture` to see them.

use cspd::acceptance::{run_acceptance, AcceptanceConfig};

#[test]
fn acceptance_criteria() {
    let cfg = AcceptanceConfig::default();
    let results = run_acceptance(&cfg, &mut |o| println!("{o}"));
    assert_eq!(results.len(), 12);
    let failed: Vec<String> = results
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.to_string())
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
