//! Runs every acceptance criterion and prints one line per criterion.

use fjq_core::acceptance::{run_all, CRITERIA};

#[test]
fn acceptance() {
    let outcomes = run_all();
    assert_eq!(outcomes.len(), CRITERIA.len());
    for o in &outcomes {
        println!(
            "{} criterion {}: {} ({})",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
