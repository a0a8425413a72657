//! Log-domain arithmetic helpers.
//!
//! A weight of exactly zero is represented by `f64::NEG_INFINITY` (see
//! [`MASKED`]). Such terms are skipped by every accumulator here, so zero
//! weights stay exact instead of turning into a tiny positive number.

/// Log-weight sentinel for an edge whose weight is exactly zero.
pub const MASKED: f64 = f64::NEG_INFINITY;

/// `ln(exp(a) + exp(b))` with masked terms treated as zero.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == MASKED {
        return b;
    }
    if b == MASKED {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(sum(exp(x)))` over a slice, shifting by the maximum.
///
/// Returns [`MASKED`] when the slice is empty or every entry is masked.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(MASKED, f64::max);
    if max == MASKED {
        return MASKED;
    }
    let sum: f64 = values
        .iter()
        .filter(|&&v| v != MASKED)
        .map(|&v| (v - max).exp())
        .sum();
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_sum() {
        let got = log_add(2.0_f64.ln(), 3.0_f64.ln());
        assert!((got - 5.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn masked_terms_are_exact_zeros() {
        assert_eq!(log_add(MASKED, 1.5), 1.5);
        assert_eq!(log_add(-0.25, MASKED), -0.25);
        assert_eq!(log_add(MASKED, MASKED), MASKED);
        assert_eq!(log_sum_exp(&[MASKED, 0.0, MASKED]), 0.0);
        assert_eq!(log_sum_exp(&[]), MASKED);
    }

    #[test]
    fn large_magnitudes_do_not_overflow() {
        let got = log_sum_exp(&[1234.0, 1232.0]);
        assert!((got - (1232.0 + (2.0_f64.exp() + 1.0).ln())).abs() < 1e-12);
        let got = log_sum_exp(&[-5000.0, -5000.0]);
        assert!((got - (-5000.0 + 2.0_f64.ln())).abs() < 1e-12);
    }
}
