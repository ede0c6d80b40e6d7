use super::HarnessError;

/// Relative differences at or below this are rounding noise and count as no gap.
pub const GAP_NOISE: f64 = 1e-9;

/// Relative distance of `value` above `bound`, as a fraction of `value`.
/// Equal values (including 0/0) give 0.
pub fn gap_fraction(value: f64, bound: f64) -> f64 {
    if value == bound {
        return 0.0;
    }
    if !value.is_finite() || !bound.is_finite() {
        return f64::INFINITY;
    }
    let diff = (value - bound).abs();
    if diff <= GAP_NOISE * value.abs().max(bound.abs()) {
        return 0.0;
    }
    diff / value.abs().max(1e-12)
}

/// `gap_fraction` in percent; used where the value may be zero.
pub fn gap_percent(value: f64, bound: f64) -> f64 {
    100.0 * gap_fraction(value, bound)
}

/// Optimality gap |V* - LB| / V* in percent.
pub fn gap(best_value: f64, lower_bound: f64) -> Result<f64, HarnessError> {
    if !(best_value > 0.0) {
        return Err(HarnessError::UndefinedGap(best_value));
    }
    Ok(gap_percent(best_value, lower_bound))
}

/// Percentage increase of `exact_gap` over `heuristic_gap`.
pub fn delta_gap(exact_gap: f64, heuristic_gap: f64) -> f64 {
    if exact_gap == heuristic_gap {
        return 0.0;
    }
    if heuristic_gap == 0.0 {
        return f64::INFINITY.copysign(exact_gap);
    }
    100.0 * (exact_gap - heuristic_gap) / heuristic_gap
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(gap(100.0, 100.0).unwrap(), 0.0);
        assert_eq!(gap(100.0, 50.0).unwrap(), 50.0);
        assert!((gap(4.228, 2.468).unwrap() - 41.62724692526017).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cases() {
        assert!(matches!(gap(0.0, 0.0), Err(HarnessError::UndefinedGap(_))));
        assert!(matches!(gap(-1.0, -2.0), Err(HarnessError::UndefinedGap(_))));
        assert_eq!(gap_percent(0.0, 0.0), 0.0);
        assert_eq!(delta_gap(0.0, 0.0), 0.0);
        assert_eq!(delta_gap(5.0, 0.0), f64::INFINITY);
        assert!(gap_percent(1.0, f64::NEG_INFINITY).is_infinite());
        assert!((delta_gap(30.0, 20.0) - 50.0).abs() < 1e-12);
        assert_eq!(gap(135034.39438987005, 135034.39438987008).unwrap(), 0.0);
    }
}
