//! Release gate: every registered self-check must pass at its default
//! thresholds. One line is printed per criterion so a failing run shows the
//! full scoreboard, not just the first broken gate.

use cvdistill::verify::{self, VerifyConfig};

#[test]
fn acceptance_criteria() {
    let reports = verify::run_suite(&VerifyConfig::default(), None).expect("suite runs");
    assert_eq!(
        reports.len(),
        verify::check_names().len(),
        "every registered criterion must be exercised"
    );
    let mut failed = Vec::new();
    for r in &reports {
        println!(
            "{} {} [{:.2}s] — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.detail
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
