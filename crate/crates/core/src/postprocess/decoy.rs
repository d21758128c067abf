//! Finite-statistics decoy-state bounds for the 3-intensity protocol.
//!
//! From the observed gains of the signal, weak-decoy and vacuum classes the
//! analysis lower-bounds the single-photon yield and upper-bounds the
//! single-photon error rate. Every observed rate is first shifted
//! adversarially by `z` standard deviations, with `z` chosen so that each
//! estimate fails with probability at most `epsilon`; the bound is then
//! worst-cased over the corners of the source-intensity fluctuation interval.

use crate::channel::{IntensityClass, SourceConfig};
use crate::math::z_for_tail_probability;
use crate::postprocess::GainStatistics;
use crate::{Error, Result};

/// Certified single-photon bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    /// Background yield estimate, straight from the vacuum class.
    pub y0_est: f64,
    /// Lower bound on the single-photon yield.
    pub y1_lower: f64,
    /// Upper bound on the single-photon error rate.
    pub e1_upper: f64,
    /// Lower bound on the single-photon gain of the signal class.
    pub q1_lower: f64,
    /// Failure probability allotted to each statistical estimate.
    pub epsilon_per_bound: f64,
    /// z-score realizing `epsilon_per_bound`.
    pub z_score: f64,
}

/// Number of adversarially shifted estimates entering the bounds.
pub const ESTIMATES_USED: u32 = 4;

pub fn decoy_bounds(
    stats: &GainStatistics,
    source: &SourceConfig,
    epsilon: f64,
) -> Result<DecoyBounds> {
    stats.validate()?;
    if !(source.mu_signal > source.mu_decoy) {
        return Err(Error::Config("signal intensity must exceed decoy intensity"));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Config("epsilon outside (0, 0.5)"));
    }
    let z = z_for_tail_probability(epsilon);

    let q_signal = stats.gain(IntensityClass::Signal);
    let q_decoy = stats.gain(IntensityClass::Decoy);
    let y0 = stats.gain(IntensityClass::Vacuum);
    let error_gain_decoy = stats.error_gain(IntensityClass::Decoy);

    let sigma_rate = |rate: f64, n_sent: u64| -> f64 {
        libm::sqrt((rate * (1.0 - rate)).max(0.0) / n_sent as f64)
    };
    let n_s = stats.sent[IntensityClass::Signal.index()];
    let n_d = stats.sent[IntensityClass::Decoy.index()];
    let n_v = stats.sent[IntensityClass::Vacuum.index()];

    // Error-gain deviation by propagation through E_d * Q_d.
    let matched_d = stats.matched[IntensityClass::Decoy.index()];
    let e_d = stats.error_rate(IntensityClass::Decoy);
    let sigma_error_gain = if matched_d == 0 {
        0.0
    } else {
        let e_smoothed = e_d.max(1.0 / matched_d as f64);
        let se = libm::sqrt(e_smoothed * (1.0 - e_smoothed) / matched_d as f64);
        libm::sqrt(
            se * q_decoy * se * q_decoy + e_d * sigma_rate(q_decoy, n_d) * e_d * sigma_rate(q_decoy, n_d),
        )
    };

    // Adversarial shifts: each rate moves in the direction that weakens the
    // bound it enters.
    let q_decoy_low = (q_decoy - z * sigma_rate(q_decoy, n_d)).max(0.0);
    let q_signal_high = (q_signal + z * sigma_rate(q_signal, n_s)).min(1.0);
    let y0_high = (y0 + z * sigma_rate(y0, n_v)).min(1.0);
    let y0_low = (y0 - z * sigma_rate(y0, n_v)).max(0.0);
    let error_gain_high = (error_gain_decoy + z * sigma_error_gain).min(1.0);

    // Worst-case over the intensity-fluctuation corners.
    let f = source.intensity_fluctuation;
    let factors: &[f64] = if f > 0.0 { &[-1.0, 1.0] } else { &[0.0] };
    let mut y1_lower = f64::INFINITY;
    let mut e1_upper: f64 = 0.0;
    let mut q1_lower = f64::INFINITY;
    for &fs in factors {
        for &fd in factors {
            let mu_s = source.mu_signal * (1.0 + f * fs);
            let mu_d = source.mu_decoy * (1.0 + f * fd);
            let ratio = mu_d * mu_d / (mu_s * mu_s);
            let y1 = mu_s / (mu_s * mu_d - mu_d * mu_d)
                * (q_decoy_low * libm::exp(mu_d)
                    - q_signal_high * libm::exp(mu_s) * ratio
                    - (1.0 - ratio) * y0_high);
            let y1 = y1.min(1.0);
            if y1 <= 0.0 {
                return Err(Error::DecoyAbort(
                    "single-photon yield bound vanished under worst-casing",
                ));
            }
            let e1 = (error_gain_high * libm::exp(mu_d) - 0.5 * y0_low) / (y1 * mu_d);
            let q1 = mu_s * libm::exp(-mu_s) * y1;
            y1_lower = y1_lower.min(y1);
            e1_upper = e1_upper.max(e1.clamp(0.0, 1.0));
            q1_lower = q1_lower.min(q1);
        }
    }

    Ok(DecoyBounds {
        y0_est: y0,
        y1_lower,
        e1_upper,
        q1_lower: q1_lower.min(q_signal.max(0.0)),
        epsilon_per_bound: epsilon,
        z_score: z,
    })
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::channel::detection_probabilities;
    use crate::rng::stream_rng;

    fn fixed_source() -> SourceConfig {
        SourceConfig {
            intensity_fluctuation: 0.0,
            ..SourceConfig::default()
        }
    }

    /// Expected-value statistics (no sampling noise) for a synthetic channel.
    fn expected_stats(channel: &SyntheticChannel, source: &SourceConfig, n: u64) -> GainStatistics {
        let mut stats = GainStatistics::default();
        for (c, mu) in [
            (0, source.mu_signal),
            (1, source.mu_decoy),
            (2, source.mu_vacuum),
        ] {
            let (q, eq) = channel.expansion_gain(mu);
            let detected = (n as f64 * q).round() as u64;
            let matched = detected / 2;
            let errors = (matched as f64 * (eq / q)).round() as u64;
            stats.sent[c] = n;
            stats.detected[c] = detected;
            stats.matched[c] = matched;
            stats.errors[c] = errors;
        }
        stats
    }

    #[test]
    fn vacuum_class_pins_y0_exactly() {
        let channel = SyntheticChannel {
            eta: 1e-3,
            y0: 2e-5,
            e_pol: 0.01,
        };
        let stats = expected_stats(&channel, &fixed_source(), 100_000_000);
        let bounds = decoy_bounds(&stats, &fixed_source(), 1e-9).unwrap();
        assert_eq!(bounds.y0_est, stats.gain(IntensityClass::Vacuum));
    }

    #[test]
    fn bounds_are_valid_and_tight_on_reference_channel() {
        let channel = SyntheticChannel {
            eta: 0.01,
            y0: 1e-5,
            e_pol: 0.01,
        };
        let source = fixed_source();
        let stats = expected_stats(&channel, &source, 100_000_000);
        let bounds = decoy_bounds(&stats, &source, 1e-9).unwrap();
        assert!((bounds.z_score - 6.0).abs() < 0.01);
        assert!(bounds.y1_lower <= channel.true_y1());
        assert!(bounds.e1_upper >= channel.true_e1());
        let tightness = bounds.y1_lower / channel.true_y1();
        assert!(tightness >= 0.9, "tightness {tightness}");
        assert!(bounds.q1_lower <= stats.gain(IntensityClass::Signal));
    }

    #[test]
    fn expansion_oracle_agrees_with_closed_form() {
        let channel = SyntheticChannel {
            eta: 3e-3,
            y0: 5e-6,
            e_pol: 0.02,
        };
        for mu in [0.1, 0.8] {
            let (q_o, eq_o) = channel.expansion_gain(mu);
            let (q, e) = detection_probabilities(mu, channel.eta, channel.y0, channel.e_pol);
            assert!((q - q_o).abs() / q_o < 1e-9);
            assert!((e * q - eq_o).abs() / eq_o < 1e-9);
        }
    }

    #[test]
    fn all_error_channel_yields_no_secrecy() {
        let channel = SyntheticChannel {
            eta: 1e-2,
            y0: 1e-6,
            e_pol: 0.5,
        };
        let source = fixed_source();
        let stats = expected_stats(&channel, &source, 100_000_000);
        let bounds = decoy_bounds(&stats, &source, 1e-9).unwrap();
        assert!(bounds.e1_upper >= 0.5, "e1 {}", bounds.e1_upper);
        let len = crate::postprocess::secure_key_length(1_000_000, &bounds, &stats, 0, 1e-9);
        assert_eq!(len, 0);
    }

    #[test]
    fn starved_statistics_abort() {
        let channel = SyntheticChannel {
            eta: 1e-4,
            y0: 1e-5,
            e_pol: 0.01,
        };
        let source = fixed_source();
        // So few pulses that the z-shift wipes out the decoy gain.
        let mut rng = stream_rng(5, 1);
        let stats = observe(&channel, &source, 200_000, &mut rng);
        assert!(matches!(
            decoy_bounds(&stats, &source, 1e-9),
            Err(Error::DecoyAbort(_)) | Err(Error::Config(_))
        ));
    }

    #[test]
    fn fluctuation_corners_only_weaken_the_bounds() {
        let channel = SyntheticChannel {
            eta: 5e-3,
            y0: 1e-5,
            e_pol: 0.01,
        };
        let exact = fixed_source();
        let fluctuating = SourceConfig {
            intensity_fluctuation: 0.05,
            ..exact
        };
        let stats = expected_stats(&channel, &exact, 100_000_000);
        let tight = decoy_bounds(&stats, &exact, 1e-9).unwrap();
        let loose = decoy_bounds(&stats, &fluctuating, 1e-9).unwrap();
        assert!(loose.y1_lower <= tight.y1_lower);
        assert!(loose.e1_upper >= tight.e1_upper);
        assert!(loose.q1_lower <= tight.q1_lower);
        // Still valid against the truth.
        assert!(loose.y1_lower <= channel.true_y1());
        assert!(loose.e1_upper >= channel.true_e1());
    }

    #[test]
    fn sampled_channels_respect_bounds() {
        // Mini soundness sweep; the acceptance suite runs the full 1000.
        let source = fixed_source();
        let mut rng = stream_rng(99, 7);
        let mut checked = 0;
        for i in 0..100 {
            let channel = SyntheticChannel {
                eta: libm::pow(10.0, -4.0 + 2.0 * (i as f64 / 100.0)),
                y0: libm::pow(10.0, -6.0 + 2.0 * ((i * 37 % 100) as f64 / 100.0)),
                e_pol: 0.001 + 0.04 * ((i * 61 % 100) as f64 / 100.0),
            };
            let stats = observe(&channel, &source, 100_000_000, &mut rng);
            match decoy_bounds(&stats, &source, 1e-9) {
                Ok(bounds) => {
                    assert!(
                        bounds.y1_lower <= channel.true_y1() + 1e-12,
                        "invalid Y1 bound on channel {i}"
                    );
                    assert!(
                        bounds.e1_upper >= channel.true_e1() - 1e-12,
                        "invalid e1 bound on channel {i}"
                    );
                    checked += 1;
                }
                Err(Error::DecoyAbort(_)) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
        assert!(checked > 80, "only {checked} channels produced bounds");
    }
}
