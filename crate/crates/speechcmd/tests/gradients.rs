mod common;

use common::gradcheck::{cases, check_loss, run_case, TOLERANCE};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[test]
fn every_layer_matches_finite_differences() {
    let mut failures = Vec::new();
    for case in cases() {
        let r = run_case(&case, &SEEDS);
        assert!(r.checked > 0, "{}: nothing checked", case.name);
        // Kink exclusions only apply to the residual block, and must stay rare.
        assert!(r.kinks * 50 <= r.checked, "{}: {} kinks of {}", case.name, r.kinks, r.checked);
        if !r.passed() {
            failures.push(format!("{}: {:.3e} at {}", case.name, r.worst, r.worst_at));
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn loss_gradient_matches_finite_differences() {
    for s in SEEDS {
        let e = check_loss(s, 3);
        assert!(e < 1e-4, "seed {s}: {e}");
    }
    assert!(TOLERANCE <= 1e-3);
}
