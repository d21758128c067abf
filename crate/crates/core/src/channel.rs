//! Decoy-state BB84 source, lossy channel and gated detection.
//!
//! Pass-scale runs cover ~10^10 pulse slots, so the sampler is
//! detection-driven: per time slice it draws the detection *counts* from the
//! exact binomial law and materializes transmitter records only for the
//! detected slots, with every event attribute (intensity class, bases, bits,
//! photonic-vs-background origin, timing) drawn from the exact conditional
//! distribution given a detection. Slices use independently derived RNG
//! streams, so they can be produced in any order or in parallel and merged.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::math::gaussian_window_probability;
use crate::rng::{stream_rng, tags};
use crate::{Error, Result};

/// Probability that a background click lands on the correct bit: background
/// light is unpolarized.
const BACKGROUND_ERROR_RATE: f64 = 0.5;

/// Preparation/measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

/// Source intensity class of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityClass {
    Signal,
    Decoy,
    Vacuum,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] =
        [IntensityClass::Signal, IntensityClass::Decoy, IntensityClass::Vacuum];

    pub fn index(self) -> usize {
        match self {
            IntensityClass::Signal => 0,
            IntensityClass::Decoy => 1,
            IntensityClass::Vacuum => 2,
        }
    }
}

/// Weak-coherent decoy-state source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceConfig {
    pub pulse_rate_hz: f64,
    pub mu_signal: f64,
    pub mu_decoy: f64,
    pub mu_vacuum: f64,
    pub p_signal: f64,
    pub p_decoy: f64,
    pub p_vacuum: f64,
    /// Relative bound on the per-slice intensity excursion of the signal and
    /// decoy levels.
    pub intensity_fluctuation: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pulse_rate_hz: 1e8,
            mu_signal: 0.8,
            mu_decoy: 0.1,
            mu_vacuum: 0.0,
            p_signal: 0.5,
            p_decoy: 0.25,
            p_vacuum: 0.25,
            intensity_fluctuation: 0.05,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_rate_hz > 0.0) {
            return Err(Error::Config("pulse rate must be positive"));
        }
        let p_sum = self.p_signal + self.p_decoy + self.p_vacuum;
        if (p_sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config("class probabilities must sum to 1"));
        }
        if !(self.p_signal > 0.0 && self.p_decoy > 0.0 && self.p_vacuum > 0.0) {
            return Err(Error::Config("class probabilities must be positive"));
        }
        if !(self.mu_signal > self.mu_decoy && self.mu_decoy > self.mu_vacuum) {
            return Err(Error::Config("intensities must satisfy signal > decoy > vacuum"));
        }
        if self.mu_vacuum != 0.0 {
            return Err(Error::Config("vacuum intensity must be zero"));
        }
        if !(0.0..1.0).contains(&self.intensity_fluctuation) {
            return Err(Error::Config("intensity fluctuation outside [0, 1)"));
        }
        Ok(())
    }

    pub fn mu(&self, class: IntensityClass) -> f64 {
        match class {
            IntensityClass::Signal => self.mu_signal,
            IntensityClass::Decoy => self.mu_decoy,
            IntensityClass::Vacuum => self.mu_vacuum,
        }
    }

    pub fn probability(&self, class: IntensityClass) -> f64 {
        match class {
            IntensityClass::Signal => self.p_signal,
            IntensityClass::Decoy => self.p_decoy,
            IntensityClass::Vacuum => self.p_vacuum,
        }
    }
}

/// Transmitter-side record of one pulse slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseRecord {
    pub index: u64,
    pub basis: Basis,
    pub bit: u8,
    pub intensity: IntensityClass,
}

/// Receiver and timing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Dark counts per detector, Hz.
    pub dark_rate_hz: f64,
    pub detector_count: u32,
    pub timing_jitter_sigma_s: f64,
    pub gate_width_s: f64,
    pub sync_jitter_sigma_s: f64,
    pub pulse_period_s: f64,
    /// Stray-light background across all detectors, Hz.
    pub background_rate_hz: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            efficiency: 0.5,
            dark_rate_hz: 25.0,
            detector_count: 4,
            timing_jitter_sigma_s: 0.35e-9,
            gate_width_s: 2e-9,
            sync_jitter_sigma_s: 0.529e-9,
            pulse_period_s: 10e-9,
            background_rate_hz: 1000.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Config("detector efficiency outside (0, 1]"));
        }
        if !(self.gate_width_s > 0.0 && self.gate_width_s <= self.pulse_period_s) {
            return Err(Error::Config("gate width must be in (0, pulse period]"));
        }
        if !(self.dark_rate_hz >= 0.0 && self.background_rate_hz >= 0.0) {
            return Err(Error::Config("count rates must be non-negative"));
        }
        if self.detector_count == 0 {
            return Err(Error::Config("detector count must be positive"));
        }
        Ok(())
    }

    /// Probability that any background or dark count falls inside one gate.
    pub fn background_click_probability(&self) -> f64 {
        (self.dark_rate_hz * self.detector_count as f64 + self.background_rate_hz)
            * self.gate_width_s
    }
}

/// Whether a click was caused by an arriving photon or by background/dark
/// noise. Simulation truth only; the protocol never sees this tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOrigin {
    Photonic,
    Background,
}

/// One accepted receiver click.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub pulse_index: u64,
    /// 0 = (rectilinear, 0), 1 = (rectilinear, 1), 2 = (diagonal, 0),
    /// 3 = (diagonal, 1).
    pub detector_id: u8,
    /// Measured arrival offset from the gate center, seconds.
    pub timestamp_offset_s: f64,
    pub origin: DetectionOrigin,
    /// More than one detector fired in this gate; the event was squashed to
    /// a random bit and is excluded from keying.
    pub double_click: bool,
}

impl DetectionEvent {
    pub fn measured_basis(&self) -> Basis {
        if self.detector_id < 2 {
            Basis::Rectilinear
        } else {
            Basis::Diagonal
        }
    }

    pub fn measured_bit(&self) -> u8 {
        self.detector_id & 1
    }
}

/// Map a 4-bit source code to a pulse: bits 0-1 select the polarization
/// (basis, bit) uniformly; bits 2-3 select the intensity with the 50/25/25
/// split ({00,01} signal, {10} decoy, {11} vacuum).
pub fn draw_pulse(random_code: u8, _source: &SourceConfig) -> Result<PulseRecord> {
    if random_code > 15 {
        return Err(Error::Domain("source code outside 4 bits"));
    }
    let basis = if random_code & 0b01 == 0 {
        Basis::Rectilinear
    } else {
        Basis::Diagonal
    };
    let bit = (random_code >> 1) & 1;
    let intensity = match random_code >> 2 {
        0 | 1 => IntensityClass::Signal,
        2 => IntensityClass::Decoy,
        _ => IntensityClass::Vacuum,
    };
    Ok(PulseRecord {
        index: 0,
        basis,
        bit,
        intensity,
    })
}

/// Gain and (sifted) error rate of a weak-coherent pulse of mean photon
/// number `mu` through a channel of end-to-end efficiency `eta`:
///
/// `Q = 1 - (1 - y0) exp(-eta mu)`, `E Q = 0.5 y0 + e_pol (1 - exp(-eta mu))`.
pub fn detection_probabilities(mu: f64, eta: f64, y0: f64, e_pol: f64) -> (f64, f64) {
    debug_assert!((0.0..=1.0).contains(&eta));
    debug_assert!((0.0..1.0).contains(&y0));
    debug_assert!((0.0..=0.5).contains(&e_pol));
    let photonic = 1.0 - libm::exp(-eta * mu);
    let gain = 1.0 - (1.0 - y0) * (1.0 - photonic);
    let error_gain = BACKGROUND_ERROR_RATE * y0 + e_pol * photonic;
    let error_rate = if gain > 0.0 { error_gain / gain } else { 0.0 };
    (gain, error_rate)
}

/// Fractions of signal photons and of background clicks that survive the
/// timing filter.
///
/// Signal photons arrive Gaussian-distributed with the combined
/// synchronization and detector jitter; background is uniform in time.
pub fn synchronization_acceptance(det: &DetectorConfig) -> (f64, f64) {
    let sigma = libm::sqrt(
        det.sync_jitter_sigma_s * det.sync_jitter_sigma_s
            + det.timing_jitter_sigma_s * det.timing_jitter_sigma_s,
    );
    let signal = gaussian_window_probability(0.5 * det.gate_width_s, sigma);
    let background = det.gate_width_s / det.pulse_period_s;
    (signal, background)
}

/// Per-slice tally of sent pulses, detections and errors by intensity class.
///
/// `matched`/`errors` count detections whose measured basis equals the sent
/// basis and, of those, the ones with a wrong bit. `sifted` counts the
/// signal-class matched single clicks that enter the key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SliceTally {
    pub slice_index: usize,
    pub sent: [u64; 3],
    pub detected: [u64; 3],
    pub matched: [u64; 3],
    pub errors: [u64; 3],
    pub background: u64,
    pub sifted: u64,
    pub sifted_errors: u64,
}

impl SliceTally {
    pub fn total_detected(&self) -> u64 {
        self.detected.iter().sum()
    }

    pub fn merge(&mut self, other: &SliceTally) {
        for i in 0..3 {
            self.sent[i] += other.sent[i];
            self.detected[i] += other.detected[i];
            self.matched[i] += other.matched[i];
            self.errors[i] += other.errors[i];
        }
        self.background += other.background;
        self.sifted += other.sifted;
        self.sifted_errors += other.sifted_errors;
    }
}

/// Everything the sampler produces for one time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome {
    pub tally: SliceTally,
    /// Accepted clicks, ordered by pulse index.
    pub events: Vec<DetectionEvent>,
    /// Transmitter records for exactly the detected slots, same order.
    pub records: Vec<PulseRecord>,
}

/// Channel conditions for one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceChannel {
    /// End-to-end photon efficiency from the link budget (detector
    /// included, timing acceptance excluded).
    pub eta_end_to_end: f64,
    /// Polarization error probability from the compensated contrast.
    pub e_pol: f64,
    /// Multiplier on the stray-light background rate (elevation-direction
    /// dependent stray light).
    pub background_scale: f64,
}

/// Sample every detection in one slice of `pulses` consecutive slots.
pub fn sample_slice_detections(
    slice_index: usize,
    first_pulse_index: u64,
    pulses: u64,
    channel: &SliceChannel,
    source: &SourceConfig,
    det: &DetectorConfig,
    seed: u64,
) -> Result<SliceOutcome> {
    source.validate()?;
    det.validate()?;
    if !(0.0..=1.0).contains(&channel.eta_end_to_end) {
        return Err(Error::Config("slice efficiency outside [0, 1]"));
    }
    let mut rng = stream_rng(seed, tags::CHANNEL_SLICE + slice_index as u64);

    let (signal_acceptance, _) = synchronization_acceptance(det);
    let eta = channel.eta_end_to_end * signal_acceptance;
    let y0 = (det.background_click_probability() * channel.background_scale).min(0.999);

    // Per-slice source intensity excursion, one factor per keyed class.
    let fluct = source.intensity_fluctuation;
    let mut mu = [source.mu_signal, source.mu_decoy, source.mu_vacuum];
    if fluct > 0.0 {
        for m in mu.iter_mut().take(2) {
            *m *= 1.0 - fluct + 2.0 * fluct * uniform_f64(&mut rng);
        }
    }

    // Class split of the slice's pulse slots.
    let mut sent = [0u64; 3];
    sent[0] = binomial(&mut rng, pulses, source.p_signal);
    let p_decoy_rest = source.p_decoy / (source.p_decoy + source.p_vacuum);
    sent[1] = binomial(&mut rng, pulses - sent[0], p_decoy_rest);
    sent[2] = pulses - sent[0] - sent[1];

    // Detection counts per class.
    let mut detected = [0u64; 3];
    let mut photonic_given_detection = [0.0f64; 3];
    let mut double_click_given_photonic = [0.0f64; 3];
    for class in 0..3 {
        let x = eta * mu[class];
        let photonic = 1.0 - libm::exp(-x);
        let gain = 1.0 - (1.0 - y0) * (1.0 - photonic);
        detected[class] = binomial(&mut rng, sent[class], gain);
        photonic_given_detection[class] = if gain > 0.0 { photonic / gain } else { 0.0 };
        // Probability that a photonic detection came from >= 2 detected
        // photons, half of which split onto a second detector.
        double_click_given_photonic[class] = if photonic > 1e-12 {
            0.5 * (photonic - x * libm::exp(-x)) / photonic
        } else {
            0.0
        };
    }

    let total: u64 = detected.iter().sum();
    let indices = distinct_sorted_indices(&mut rng, first_pulse_index, pulses, total);

    // Class labels for the detected slots: an exact random interleaving of
    // the per-class counts.
    let mut labels: Vec<u8> = Vec::with_capacity(total as usize);
    for class in 0..3 {
        labels.extend(core::iter::repeat(class as u8).take(detected[class] as usize));
    }
    shuffle(&mut rng, &mut labels);

    let timing_sigma = libm::sqrt(
        det.sync_jitter_sigma_s * det.sync_jitter_sigma_s
            + det.timing_jitter_sigma_s * det.timing_jitter_sigma_s,
    );
    let half_gate = 0.5 * det.gate_width_s;

    let mut tally = SliceTally {
        slice_index,
        sent,
        ..SliceTally::default()
    };
    let mut events = Vec::with_capacity(total as usize);
    let mut records = Vec::with_capacity(total as usize);

    for (&index, &label) in indices.iter().zip(labels.iter()) {
        let class = IntensityClass::ALL[label as usize];
        let sent_basis = if rng.next_u32() & 1 == 0 {
            Basis::Rectilinear
        } else {
            Basis::Diagonal
        };
        let sent_bit = (rng.next_u32() & 1) as u8;

        let photonic = uniform_f64(&mut rng) < photonic_given_detection[label as usize];
        let rx_basis = if rng.next_u32() & 1 == 0 {
            Basis::Rectilinear
        } else {
            Basis::Diagonal
        };
        let (rx_bit, double_click, timestamp) = if photonic {
            let double = uniform_f64(&mut rng) < double_click_given_photonic[label as usize];
            let bit = if double || rx_basis != sent_basis {
                (rng.next_u32() & 1) as u8
            } else if uniform_f64(&mut rng) < channel.e_pol {
                sent_bit ^ 1
            } else {
                sent_bit
            };
            (bit, double, truncated_gaussian(&mut rng, timing_sigma, half_gate))
        } else {
            let bit = (rng.next_u32() & 1) as u8;
            let t = (2.0 * uniform_f64(&mut rng) - 1.0) * half_gate;
            (bit, false, t)
        };

        let detector_id = match (rx_basis, rx_bit) {
            (Basis::Rectilinear, b) => b,
            (Basis::Diagonal, b) => 2 + b,
        };
        let origin = if photonic {
            DetectionOrigin::Photonic
        } else {
            DetectionOrigin::Background
        };

        let c = label as usize;
        tally.detected[c] += 1;
        if !photonic {
            tally.background += 1;
        }
        if rx_basis == sent_basis {
            tally.matched[c] += 1;
            if rx_bit != sent_bit {
                tally.errors[c] += 1;
            }
            if class == IntensityClass::Signal && !double_click {
                tally.sifted += 1;
                if rx_bit != sent_bit {
                    tally.sifted_errors += 1;
                }
            }
        }

        events.push(DetectionEvent {
            pulse_index: index,
            detector_id,
            timestamp_offset_s: timestamp,
            origin,
            double_click,
        });
        records.push(PulseRecord {
            index,
            basis: sent_basis,
            bit: sent_bit,
            intensity: class,
        });
    }

    Ok(SliceOutcome {
        tally,
        events,
        records,
    })
}

/// Sample a whole pass: one slice per trajectory interval.
///
/// `slices` gives, per slice, the number of pulse slots and the channel
/// conditions; results are concatenated in slice order.
pub fn sample_pass_detections(
    slices: &[(u64, SliceChannel)],
    source: &SourceConfig,
    det: &DetectorConfig,
    seed: u64,
) -> Result<(Vec<SliceTally>, Vec<DetectionEvent>, Vec<PulseRecord>)> {
    if slices.is_empty() {
        return Err(Error::Config("pass has no slices"));
    }
    let mut tallies = Vec::with_capacity(slices.len());
    let mut events = Vec::new();
    let mut records = Vec::new();
    let mut first_index = 0u64;
    for (i, (pulses, channel)) in slices.iter().enumerate() {
        let outcome =
            sample_slice_detections(i, first_index, *pulses, channel, source, det, seed)?;
        tallies.push(outcome.tally);
        events.extend(outcome.events);
        records.extend(outcome.records);
        first_index += pulses;
    }
    Ok((tallies, events, records))
}

fn uniform_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn binomial(rng: &mut impl RngCore, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("validated binomial parameters").sample(rng)
}

fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}

/// Draw `count` distinct slot indices out of `[first, first + pulses)`,
/// sorted ascending.
fn distinct_sorted_indices(
    rng: &mut impl RngCore,
    first: u64,
    pulses: u64,
    count: u64,
) -> Vec<u64> {
    debug_assert!(count <= pulses);
    let mut set = BTreeSet::new();
    while (set.len() as u64) < count {
        set.insert(first + rng.next_u64() % pulses);
    }
    set.into_iter().collect()
}

/// Zero-mean Gaussian draw truncated to `[-limit, limit]` by rejection.
fn truncated_gaussian(rng: &mut impl RngCore, sigma: f64, limit: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    loop {
        let g: f64 = StandardNormal.sample(rng);
        let t = g * sigma;
        if t.abs() <= limit {
            return t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_mapping_realizes_the_50_25_25_split() {
        let source = SourceConfig::default();
        let mut counts = [0u32; 3];
        let mut pol_counts = [0u32; 4];
        for code in 0..16u8 {
            let p = draw_pulse(code, &source).unwrap();
            counts[p.intensity.index()] += 1;
            let pol = match (p.basis, p.bit) {
                (Basis::Rectilinear, 0) => 0,
                (Basis::Rectilinear, _) => 1,
                (Basis::Diagonal, 0) => 2,
                (Basis::Diagonal, _) => 3,
            };
            pol_counts[pol] += 1;
        }
        assert_eq!(counts, [8, 4, 4]);
        assert_eq!(pol_counts, [4, 4, 4, 4]);
        assert!(draw_pulse(16, &source).is_err());
    }

    #[test]
    fn code_zero_is_rectilinear_zero_signal() {
        let p = draw_pulse(0, &SourceConfig::default()).unwrap();
        assert_eq!(p.basis, Basis::Rectilinear);
        assert_eq!(p.bit, 0);
        assert_eq!(p.intensity, IntensityClass::Signal);
    }

    #[test]
    fn uniform_code_stream_matches_binomial_oracle() {
        // Drive the mapping with a uniform stream and check the class counts
        // against 4-sigma binomial bounds.
        let source = SourceConfig::default();
        let mut rng = stream_rng(11, 99);
        let n = 100_000u32;
        let mut counts = [0u32; 3];
        for _ in 0..n {
            let code = (rng.next_u32() & 15) as u8;
            counts[draw_pulse(code, &source).unwrap().intensity.index()] += 1;
        }
        for (count, p) in counts.iter().zip([0.5, 0.25, 0.25]) {
            let mean = n as f64 * p;
            let sigma = libm::sqrt(n as f64 * p * (1.0 - p));
            assert!(
                (*count as f64 - mean).abs() < 4.0 * sigma,
                "count {count} vs mean {mean}"
            );
        }
    }

    #[test]
    fn vacuum_sees_only_background() {
        let (q, e) = detection_probabilities(0.0, 1e-4, 1e-6, 0.003);
        assert!((q - 1e-6).abs() < 1e-15);
        assert_eq!(e, 0.5);
    }

    #[test]
    fn gain_formula_anchor() {
        let (q, _) = detection_probabilities(0.8, 1e-4, 1e-6, 0.003);
        assert!((q - 8.1e-5).abs() < 0.02e-5, "q = {q}");
    }

    #[test]
    fn error_rate_tends_to_polarization_error_without_background() {
        let e_pol = 0.00356;
        let (_, e) = detection_probabilities(0.8, 1e-4, 1e-12, e_pol);
        assert!((e - e_pol).abs() < 1e-6, "e = {e}");
    }

    /// Brute-force oracle: expand the Poissonian photon-number distribution
    /// and accumulate yields and error yields term by term.
    fn poisson_expansion_oracle(mu: f64, eta: f64, y0: f64, e_pol: f64) -> (f64, f64) {
        let mut q = 0.0;
        let mut eq = 0.0;
        let mut pn = libm::exp(-mu); // P(n = 0)
        for n in 0..80 {
            let miss = libm::pow(1.0 - eta, n as f64);
            let yn = 1.0 - (1.0 - y0) * miss;
            q += pn * yn;
            eq += pn * (0.5 * y0 + e_pol * (1.0 - miss));
            pn *= mu / (n + 1) as f64;
        }
        (q, eq / q)
    }

    #[test]
    fn closed_form_matches_poisson_expansion() {
        for &(mu, eta, y0, e_pol) in &[
            (0.8, 1e-4, 1e-6, 0.003),
            (0.1, 1e-2, 1e-5, 0.01),
            (0.8, 0.3, 1e-4, 0.05),
        ] {
            let (q, e) = detection_probabilities(mu, eta, y0, e_pol);
            let (qo, eo) = poisson_expansion_oracle(mu, eta, y0, e_pol);
            assert!((q - qo).abs() / qo < 1e-9, "gain {q} vs oracle {qo}");
            assert!((e - eo).abs() < 1e-9, "error {e} vs oracle {eo}");
        }
    }

    #[test]
    fn timing_acceptance_anchors() {
        let det = DetectorConfig::default();
        let (signal, background) = synchronization_acceptance(&det);
        assert!((background - 0.2).abs() < 1e-12);
        // sigma = sqrt(0.529^2 + 0.35^2) ns = 0.634 ns; erf(1/(0.634 sqrt 2)).
        assert!((signal - 0.885).abs() < 0.002, "signal acceptance {signal}");
        let perfect = DetectorConfig {
            timing_jitter_sigma_s: 0.0,
            sync_jitter_sigma_s: 0.0,
            ..det
        };
        assert_eq!(synchronization_acceptance(&perfect).0, 1.0);
    }

    fn test_channel(eta: f64) -> SliceChannel {
        SliceChannel {
            eta_end_to_end: eta,
            e_pol: 0.00356,
            background_scale: 1.0,
        }
    }

    #[test]
    fn dead_channel_yields_only_background() {
        let det = DetectorConfig::default();
        let source = SourceConfig::default();
        let outcome = sample_slice_detections(
            0,
            0,
            50_000_000,
            &test_channel(0.0),
            &source,
            &det,
            7,
        )
        .unwrap();
        assert!(outcome
            .events
            .iter()
            .all(|e| e.origin == DetectionOrigin::Background));
        // Expected rate: background click probability per slot.
        let y0 = det.background_click_probability();
        let mean = 50_000_000.0 * y0;
        let total = outcome.tally.total_detected() as f64;
        assert!((total - mean).abs() < 5.0 * libm::sqrt(mean), "{total} vs {mean}");
    }

    #[test]
    fn tallies_match_gain_within_binomial_bounds() {
        let det = DetectorConfig::default();
        let source = SourceConfig {
            intensity_fluctuation: 0.0,
            ..SourceConfig::default()
        };
        let eta = 3e-4;
        let outcome =
            sample_slice_detections(0, 0, 100_000_000, &test_channel(eta), &source, &det, 21)
                .unwrap();
        let (sig_acc, _) = synchronization_acceptance(&det);
        let y0 = det.background_click_probability();
        for class in IntensityClass::ALL {
            let c = class.index();
            let (q, _) =
                detection_probabilities(source.mu(class), eta * sig_acc, y0, 0.00356);
            let n = outcome.tally.sent[c] as f64;
            let mean = n * q;
            let sigma = libm::sqrt(mean.max(1.0));
            assert!(
                (outcome.tally.detected[c] as f64 - mean).abs() < 4.0 * sigma,
                "class {class:?}: {} vs {mean}",
                outcome.tally.detected[c]
            );
        }
    }

    #[test]
    fn vacuum_error_rate_is_one_half() {
        let det = DetectorConfig {
            background_rate_hz: 100_000.0,
            ..DetectorConfig::default()
        };
        let source = SourceConfig::default();
        let outcome =
            sample_slice_detections(0, 0, 50_000_000, &test_channel(1e-4), &source, &det, 3)
                .unwrap();
        let c = IntensityClass::Vacuum.index();
        let matched = outcome.tally.matched[c] as f64;
        let errors = outcome.tally.errors[c] as f64;
        assert!(matched > 1000.0, "not enough vacuum statistics");
        let sigma = 0.5 / libm::sqrt(matched);
        assert!(
            (errors / matched - 0.5).abs() < 4.0 * sigma,
            "vacuum error rate {}",
            errors / matched
        );
    }

    #[test]
    fn detections_increase_with_efficiency() {
        let det = DetectorConfig::default();
        let source = SourceConfig::default();
        let count = |eta: f64| {
            sample_slice_detections(0, 0, 10_000_000, &test_channel(eta), &source, &det, 5)
                .unwrap()
                .tally
                .total_detected()
        };
        assert!(count(1e-4) < count(3e-4));
        assert!(count(3e-4) < count(1e-3));
    }

    #[test]
    fn same_seed_reproduces_event_sequences() {
        let det = DetectorConfig::default();
        let source = SourceConfig::default();
        let run = || {
            sample_slice_detections(3, 1000, 5_000_000, &test_channel(2e-4), &source, &det, 77)
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn events_are_distinct_sorted_and_within_slice() {
        let det = DetectorConfig::default();
        let source = SourceConfig::default();
        let first = 500_000;
        let pulses = 5_000_000;
        let outcome = sample_slice_detections(
            1,
            first,
            pulses,
            &test_channel(1e-3),
            &source,
            &det,
            13,
        )
        .unwrap();
        let mut prev = None;
        for e in &outcome.events {
            assert!(e.pulse_index >= first && e.pulse_index < first + pulses);
            if let Some(p) = prev {
                assert!(e.pulse_index > p, "indices not strictly increasing");
            }
            prev = Some(e.pulse_index);
            assert!(e.timestamp_offset_s.abs() <= 0.5 * det.gate_width_s);
            assert!(e.detector_id < 4);
        }
        assert_eq!(outcome.events.len(), outcome.records.len());
        for (e, r) in outcome.events.iter().zip(outcome.records.iter()) {
            assert_eq!(e.pulse_index, r.index);
        }
    }

    #[test]
    fn pass_sampler_concatenates_slices() {
        let det = DetectorConfig::default();
        let source = SourceConfig::default();
        let slices = alloc::vec![
            (2_000_000u64, test_channel(3e-4)),
            (2_000_000u64, test_channel(2e-4)),
            (2_000_000u64, test_channel(1e-4)),
        ];
        let (tallies, events, records) =
            sample_pass_detections(&slices, &source, &det, 9).unwrap();
        assert_eq!(tallies.len(), 3);
        assert_eq!(events.len(), records.len());
        let sum: u64 = tallies.iter().map(|t| t.total_detected()).sum();
        assert_eq!(sum, events.len() as u64);
        assert!(sample_pass_detections(&[], &source, &det, 9).is_err());
    }
}
