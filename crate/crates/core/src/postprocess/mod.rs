//! Classical post-processing: sifting, parameter estimation, decoy-state
//! bounds, error correction, privacy amplification and key relay.

pub mod amplify;
pub mod decoy;
pub mod fft;
pub mod reconcile;
pub mod relay;

use alloc::vec::Vec;

use crate::channel::{Basis, DetectionEvent, IntensityClass, PulseRecord, SliceTally};
use crate::math::binary_entropy;
use crate::{Error, Result};

/// Matched-basis signal-class bits held by both sides after sifting.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub tx_bits: Vec<u8>,
    pub rx_bits: Vec<u8>,
    pub source_indices: Vec<u64>,
    pub bases: Vec<Basis>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.tx_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx_bits.is_empty()
    }

    /// Disagreements between the two sides (simulation-truth QBER).
    pub fn error_count(&self) -> u64 {
        self.tx_bits
            .iter()
            .zip(self.rx_bits.iter())
            .filter(|(a, b)| a != b)
            .count() as u64
    }
}

/// Keep events whose measured basis equals the sent basis and whose pulse
/// was a single-click signal-class slot. Decoy and vacuum detections feed
/// parameter estimation only.
pub fn sift(records: &[PulseRecord], events: &[DetectionEvent]) -> Result<SiftedKey> {
    let mut key = SiftedKey::default();
    for event in events {
        let record = records
            .binary_search_by_key(&event.pulse_index, |r| r.index)
            .map(|i| &records[i])
            .map_err(|_| Error::DataIntegrity("detection references unknown pulse index"))?;
        if record.intensity != IntensityClass::Signal
            || event.double_click
            || event.measured_basis() != record.basis
        {
            continue;
        }
        key.tx_bits.push(record.bit);
        key.rx_bits.push(event.measured_bit());
        key.source_indices.push(event.pulse_index);
        key.bases.push(record.basis);
    }
    Ok(key)
}

/// Pass-level gains and error rates per intensity class.
///
/// `gain` is detections over sent pulses (any basis); `error_rate` is the
/// disagreement rate over the matched-basis subset, so that
/// `error_rate * gain` estimates the per-pulse error gain used by the
/// decoy analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GainStatistics {
    pub sent: [u64; 3],
    pub detected: [u64; 3],
    pub matched: [u64; 3],
    pub errors: [u64; 3],
}

impl GainStatistics {
    pub fn from_tallies(tallies: &[SliceTally]) -> Self {
        let mut stats = GainStatistics::default();
        for t in tallies {
            for c in 0..3 {
                stats.sent[c] += t.sent[c];
                stats.detected[c] += t.detected[c];
                stats.matched[c] += t.matched[c];
                stats.errors[c] += t.errors[c];
            }
        }
        stats
    }

    pub fn gain(&self, class: IntensityClass) -> f64 {
        let c = class.index();
        if self.sent[c] == 0 {
            return 0.0;
        }
        self.detected[c] as f64 / self.sent[c] as f64
    }

    pub fn error_rate(&self, class: IntensityClass) -> f64 {
        let c = class.index();
        if self.matched[c] == 0 {
            return 0.0;
        }
        self.errors[c] as f64 / self.matched[c] as f64
    }

    pub fn error_gain(&self, class: IntensityClass) -> f64 {
        self.error_rate(class) * self.gain(class)
    }

    pub fn total_detected(&self) -> u64 {
        self.detected.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sent.iter().any(|&n| n == 0) {
            return Err(Error::Config("every intensity class needs sent pulses"));
        }
        Ok(())
    }
}

/// Final key material and its accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct SecureKeyResult {
    pub n_sifted: u64,
    pub leak_ec_bits: u64,
    pub verification_tag_bits: u64,
    pub final_length_bits: u64,
    pub final_key_tx: Vec<u8>,
    pub final_key_rx: Vec<u8>,
    pub epsilon_total: f64,
}

/// Extractable secure length:
///
/// `l = floor(n_sifted * (Q1_lower / Q_signal) * (1 - H2(e1_upper))
///      - leak_ec - 2 log2(1 / epsilon_pa))`, clamped at zero.
pub fn secure_key_length(
    n_sifted: u64,
    bounds: &decoy::DecoyBounds,
    stats: &GainStatistics,
    leak_ec_bits: u64,
    epsilon_pa: f64,
) -> u64 {
    let q_signal = stats.gain(IntensityClass::Signal);
    if q_signal <= 0.0 {
        return 0;
    }
    let single_photon_fraction = (bounds.q1_lower / q_signal).clamp(0.0, 1.0);
    let secrecy = 1.0 - binary_entropy(bounds.e1_upper);
    let pa_penalty = 2.0 * libm::log2(1.0 / epsilon_pa);
    let length =
        n_sifted as f64 * single_photon_fraction * secrecy - leak_ec_bits as f64 - pa_penalty;
    if length <= 0.0 {
        0
    } else {
        libm::floor(length) as u64
    }
}
