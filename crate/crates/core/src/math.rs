//! Small numeric helpers shared across the simulation.

/// Binary entropy `H2(x) = -x*log2(x) - (1-x)*log2(1-x)`.
///
/// Defined as 0 at the endpoints (the usual `0*log 0 = 0` convention).
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * libm::log2(x) - (1.0 - x) * libm::log2(1.0 - x)
}

/// Upper-tail probability of the standard normal, `P(Z > z)`.
pub fn gaussian_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// Probability that `|T| < half_width` for `T ~ N(0, sigma^2)`.
///
/// Returns 1.0 when `sigma` is zero (a perfectly timed pulse).
pub fn gaussian_window_probability(half_width: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    libm::erf(half_width / (sigma * core::f64::consts::SQRT_2))
}

/// Smallest z-score whose one-sided Gaussian tail is at most `epsilon`.
///
/// Solved by bisection on [`gaussian_tail`]; accurate to ~1e-9 in z, which is
/// far tighter than any use of the result.
pub fn z_for_tail_probability(epsilon: f64) -> f64 {
    assert!(epsilon > 0.0 && epsilon < 0.5, "tail probability out of range");
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail(mid) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Convert a linear power ratio in (0, 1] to a positive loss in dB.
pub fn ratio_to_db(ratio: f64) -> f64 {
    -10.0 * libm::log10(ratio)
}

/// Convert a positive loss in dB to a linear power ratio.
pub fn db_to_ratio(db: f64) -> f64 {
    libm::pow(10.0, -db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_anchors() {
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-12);
        assert!((binary_entropy(0.11) - 0.4999).abs() < 1e-3);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
    }

    #[test]
    fn entropy_symmetry() {
        for &x in &[0.01, 0.1, 0.3, 0.47] {
            assert!((binary_entropy(x) - binary_entropy(1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn z_score_for_1e9_tail_is_six_sigma() {
        let z = z_for_tail_probability(1e-9);
        assert!((z - 6.0).abs() < 0.01, "z = {z}");
        // Round trip.
        assert!((gaussian_tail(z) - 1e-9).abs() < 1e-11);
    }

    #[test]
    fn db_round_trip() {
        for &r in &[1.0, 0.5, 1e-4, 3.2e-7] {
            assert!((db_to_ratio(ratio_to_db(r)) - r).abs() < r * 1e-12);
        }
    }
}
