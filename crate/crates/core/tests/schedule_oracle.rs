mod common;

use common::{increment_ratio, numerical_verdict, random_pairs};
use threshold_kw::kw::{validate_schedule, Condition};

#[test]
fn ratio_test_separates_known_series() {
    assert!(increment_ratio(2.0) < 0.2);
    assert!(increment_ratio(0.5) > 2.0);
    assert!((increment_ratio(1.0) - 1.0).abs() < 0.01);
}

#[test]
fn documented_classifications() {
    assert!(validate_schedule(1.0, 1.0 / 3.0).all_satisfied());
    assert_eq!(
        validate_schedule(1.0, 0.6).failed(),
        vec![Condition::RatioSquareSummable]
    );
    assert!(validate_schedule(0.5, 0.4)
        .failed()
        .contains(&Condition::GainWidthSummable));
}

#[test]
fn classification_agrees_with_partial_sums() {
    for (p, q) in random_pairs(10, 0.1, 2024) {
        let report = validate_schedule(p, q);
        let numeric = numerical_verdict(p, q);
        for (check, expected) in report.checks.iter().zip(numeric) {
            assert_eq!(
                check.satisfied,
                expected,
                "(p, q) = ({p}, {q}), condition {}",
                check.condition.number()
            );
        }
    }
}
