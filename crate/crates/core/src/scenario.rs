//! End-to-end pass pipeline, analytic rate model and source optimization.
//!
//! `run_scenario` composes the full chain: pass geometry -> tracking ->
//! link budget -> polarization compensation -> detection sampling -> sifting
//! -> decoy bounds -> error correction -> privacy amplification, and folds
//! the result into a `PassReport`. Everything downstream of the scenario
//! seed is deterministic.

use alloc::string::String;
use alloc::vec::Vec;

use crate::channel::{
    sample_slice_detections, DetectorConfig, IntensityClass, SliceChannel, SliceTally,
    SourceConfig,
};
use crate::link::{total_link_efficiency, LinkBudget, OpticsConfig};
use crate::math::binary_entropy;
use crate::orbit::{generate_pass, GroundStation, OrbitConfig, TrajectoryPoint};
use crate::polarization::{contrast_series, contrast_to_qber, ContrastSample, PolarizationModel};
use crate::postprocess::decoy::{decoy_bounds, DecoyBounds, ESTIMATES_USED};
use crate::postprocess::reconcile::error_correct;
use crate::postprocess::{
    amplify::privacy_amplify, secure_key_length, sift, GainStatistics, SecureKeyResult, SiftedKey,
};
use crate::rng::{derive_seed, tags};
use crate::tracking::{
    simulate_two_stage_tracking, DisturbanceModel, TrackingStageConfig, TrackingTrace,
};
use crate::{Error, Result};

/// Statistical failure probability per decoy-state estimate.
pub const EPSILON_BOUND: f64 = 1e-9;
/// Privacy-amplification failure probability.
pub const EPSILON_PA: f64 = 1e-9;
/// Reconciliation efficiency assumed by the analytic rate model.
const EC_EFFICIENCY_MODEL: f64 = 1.25;

/// Complete description of one pass experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub station: GroundStation,
    pub orbit: OrbitConfig,
    pub optics: OpticsConfig,
    pub source: SourceConfig,
    pub detectors: DetectorConfig,
    pub polarization: PolarizationModel,
    pub coarse_tracking: TrackingStageConfig,
    pub fine_tracking: TrackingStageConfig,
    pub disturbance: DisturbanceModel,
    /// Peak elevation of the pass.
    pub max_elevation_deg: f64,
    /// Elevation at which data collection starts (rising side).
    pub start_elevation_deg: f64,
    /// Elevation at which data collection ends (setting side).
    pub end_elevation_deg: f64,
    /// Simulation time step.
    pub time_step_s: f64,
    /// Aggregation window for the report series.
    pub slice_duration_s: f64,
    /// Flat per-day weather loss, dB.
    pub weather_db: f64,
    /// Background multiplier on the setting half of the pass (stray light
    /// depends on where the telescope points).
    pub stray_light_second_half_scale: f64,
    pub seed: u64,
}

impl Scenario {
    /// Calibration reproducing the reference pass: 49-degree peak elevation,
    /// data collection between the 1200 km crossings, and background/zenith
    /// terms tuned to the published detection totals and error rates.
    pub fn paper_calibration() -> Self {
        Scenario {
            id: String::from("micius-2016-12-19"),
            station: GroundStation::xinglong(),
            orbit: OrbitConfig::default(),
            optics: OpticsConfig {
                zenith_atm_loss_db: 1.5,
                ..OpticsConfig::default()
            },
            source: SourceConfig::default(),
            detectors: DetectorConfig {
                background_rate_hz: 850.0,
                ..DetectorConfig::default()
            },
            polarization: PolarizationModel::paper_calibration(),
            coarse_tracking: TrackingStageConfig::coarse_default(),
            fine_tracking: TrackingStageConfig::fine_default(),
            disturbance: DisturbanceModel::default(),
            max_elevation_deg: 49.0,
            start_elevation_deg: 19.9,
            end_elevation_deg: 19.9,
            time_step_s: 1.0,
            slice_duration_s: 25.0,
            weather_db: 2.8,
            stray_light_second_half_scale: 1.0,
            seed: 20161219,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.station.validate()?;
        self.orbit.validate()?;
        self.optics.validate()?;
        self.source.validate()?;
        self.detectors.validate()?;
        self.polarization.validate()?;
        self.coarse_tracking.validate()?;
        self.fine_tracking.validate()?;
        self.disturbance.validate()?;
        if (self.detectors.efficiency - self.optics.detector_efficiency).abs() > 1e-9 {
            return Err(Error::Config(
                "detector efficiency differs between optics and detector configs",
            ));
        }
        let period = 1.0 / self.source.pulse_rate_hz;
        if (self.detectors.pulse_period_s - period).abs() > 1e-6 * period {
            return Err(Error::Config("pulse period does not match source rate"));
        }
        if !(self.end_elevation_deg >= 5.0) {
            return Err(Error::Config("data window reaches below 5-degree elevation"));
        }
        if !(self.weather_db >= 0.0) {
            return Err(Error::Config("weather offset negative"));
        }
        if !(self.time_step_s > 0.0 && self.slice_duration_s >= self.time_step_s) {
            return Err(Error::Config("slice duration must cover the time step"));
        }
        if !(self.stray_light_second_half_scale >= 0.0) {
            return Err(Error::Config("stray light scale negative"));
        }
        Ok(())
    }
}

/// Tracking performance digest kept in the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingSummary {
    pub rms_x_rad: f64,
    pub rms_y_rad: f64,
    pub effective_jitter_rms_rad: f64,
    pub coarse_saturated_frames: u64,
    pub fine_saturated_frames: u64,
    pub loss_of_lock_at_s: Option<f64>,
}

impl TrackingSummary {
    fn from_trace(trace: &TrackingTrace) -> Self {
        let (rms_x_rad, rms_y_rad) = trace.rms_per_axis();
        TrackingSummary {
            rms_x_rad,
            rms_y_rad,
            effective_jitter_rms_rad: trace.effective_jitter_rms(),
            coarse_saturated_frames: trace.coarse_saturated_frames,
            fine_saturated_frames: trace.fine_saturated_frames,
            loss_of_lock_at_s: trace.loss_of_lock_at_s,
        }
    }
}

/// Aggregated report row covering one slice window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceReport {
    pub t_start_s: f64,
    pub t_end_s: f64,
    pub elevation_deg: f64,
    pub range_km: f64,
    pub channel_total_db: f64,
    pub end_to_end_db: f64,
    pub detections: u64,
    pub detection_rate_hz: f64,
    pub sifted: u64,
    pub sifted_rate_bps: f64,
    pub sifted_errors: u64,
    pub qber: f64,
}

/// Pass totals and key accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PassTotals {
    pub duration_s: f64,
    pub pulses_sent: u64,
    pub detections: u64,
    pub sifted_bits: u64,
    pub sifted_errors: u64,
    pub qber: f64,
    pub final_key_bits: u64,
    pub abort_reason: Option<String>,
}

/// Everything produced by one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct PassReport {
    pub scenario_id: String,
    pub seed: u64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub budgets: Vec<LinkBudget>,
    pub contrast: Vec<ContrastSample>,
    pub tracking: TrackingSummary,
    pub tallies: Vec<SliceTally>,
    pub slices: Vec<SliceReport>,
    pub stats: GainStatistics,
    pub decoy: Option<DecoyBounds>,
    pub key: Option<SecureKeyResult>,
    pub totals: PassTotals,
}

/// Run the tracking loop for a pass of the given duration and reduce it to
/// a summary plus the effective jitter fed to the link budget.
pub fn simulate_pass_tracking(scenario: &Scenario, duration_s: f64) -> Result<TrackingTrace> {
    let disturbance = DisturbanceModel {
        seed: derive_seed(scenario.seed, tags::TRACKING),
        ..scenario.disturbance
    };
    simulate_two_stage_tracking(
        duration_s.max(1.0),
        &scenario.coarse_tracking,
        &scenario.fine_tracking,
        &disturbance,
    )
}

/// Deterministic per-slice channel conditions for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    /// Per slice: pulse slots and channel conditions.
    pub slices: Vec<(u64, SliceChannel)>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub budgets: Vec<LinkBudget>,
    pub contrast: Vec<ContrastSample>,
    pub tracking: TrackingSummary,
}

/// Build the deterministic part of the pipeline: trajectory, tracking,
/// budgets, polarization and per-slice pulse counts.
pub fn rate_profile(scenario: &Scenario) -> Result<RateProfile> {
    scenario.validate()?;
    let trajectory = generate_pass(
        scenario.max_elevation_deg,
        scenario.start_elevation_deg,
        scenario.end_elevation_deg,
        scenario.time_step_s,
        &scenario.orbit,
    )?;
    let duration = trajectory.last().map(|p| p.t_s).unwrap_or(0.0);
    let trace = simulate_pass_tracking(scenario, duration)?;
    let tracking = TrackingSummary::from_trace(&trace);

    let budgets: Vec<LinkBudget> = trajectory
        .iter()
        .map(|p| {
            total_link_efficiency(
                p,
                &scenario.optics,
                tracking.effective_jitter_rms_rad,
                scenario.weather_db,
            )
        })
        .collect::<Result<_>>()?;
    let contrast = contrast_series(&trajectory, &scenario.polarization, true);

    let apex_t = trajectory
        .iter()
        .max_by(|a, b| a.elevation_deg.total_cmp(&b.elevation_deg))
        .map(|p| p.t_s)
        .unwrap_or(0.0);

    let mut slices = Vec::with_capacity(trajectory.len().saturating_sub(1));
    for i in 0..trajectory.len().saturating_sub(1) {
        let dt = trajectory[i + 1].t_s - trajectory[i].t_s;
        let pulses = libm::round(scenario.source.pulse_rate_hz * dt) as u64;
        let background_scale = if trajectory[i].t_s >= apex_t {
            scenario.stray_light_second_half_scale
        } else {
            1.0
        };
        slices.push((
            pulses,
            SliceChannel {
                eta_end_to_end: budgets[i].end_to_end_efficiency(),
                e_pol: contrast_to_qber(contrast[i].contrast_compensated),
                background_scale,
            },
        ));
    }
    Ok(RateProfile {
        slices,
        trajectory,
        budgets,
        contrast,
        tracking,
    })
}

/// Run the full pipeline for one scenario.
pub fn run_scenario(scenario: &Scenario) -> Result<PassReport> {
    let profile = rate_profile(scenario)?;
    if profile.slices.is_empty() {
        return Err(Error::Config("pass window contains no slices"));
    }
    let channel_seed = derive_seed(scenario.seed, tags::CHANNEL);

    let mut tallies = Vec::with_capacity(profile.slices.len());
    let mut sifted = SiftedKey::default();
    let mut first_index = 0u64;
    for (i, (pulses, channel)) in profile.slices.iter().enumerate() {
        let outcome = sample_slice_detections(
            i,
            first_index,
            *pulses,
            channel,
            &scenario.source,
            &scenario.detectors,
            channel_seed,
        )?;
        let slice_key = sift(&outcome.records, &outcome.events)?;
        sifted.tx_bits.extend_from_slice(&slice_key.tx_bits);
        sifted.rx_bits.extend_from_slice(&slice_key.rx_bits);
        sifted.source_indices.extend_from_slice(&slice_key.source_indices);
        sifted.bases.extend_from_slice(&slice_key.bases);
        tallies.push(outcome.tally);
        first_index += pulses;
    }

    let stats = GainStatistics::from_tallies(&tallies);
    let totals_detections = stats.total_detected();
    let sifted_bits: u64 = tallies.iter().map(|t| t.sifted).sum();
    let sifted_errors: u64 = tallies.iter().map(|t| t.sifted_errors).sum();
    let qber = if sifted_bits > 0 {
        sifted_errors as f64 / sifted_bits as f64
    } else {
        0.0
    };
    let pulses_sent: u64 = profile.slices.iter().map(|(p, _)| *p).sum();
    debug_assert_eq!(sifted.len() as u64, sifted_bits);

    let slices = aggregate_slices(scenario, &profile, &tallies);

    // Classical chain; a decoy abort is reported, not propagated.
    let mut abort_reason = None;
    let mut decoy = None;
    let mut key = None;
    match decoy_bounds(&stats, &scenario.source, EPSILON_BOUND) {
        Ok(bounds) => {
            decoy = Some(bounds);
            let reconciled = error_correct(&sifted.tx_bits, &sifted.rx_bits, qber, scenario.seed)?;
            let length = secure_key_length(
                sifted_bits,
                &bounds,
                &stats,
                reconciled.leak_ec_bits,
                EPSILON_PA,
            )
            .min(sifted_bits);
            let final_key_tx = privacy_amplify(&sifted.tx_bits, length as usize, scenario.seed)?;
            let final_key_rx =
                privacy_amplify(&reconciled.corrected_rx, length as usize, scenario.seed)?;
            debug_assert_eq!(final_key_tx, final_key_rx);
            let epsilon_total =
                ESTIMATES_USED as f64 * EPSILON_BOUND + EPSILON_PA + libm::pow(2.0, -64.0);
            key = Some(SecureKeyResult {
                n_sifted: sifted_bits,
                leak_ec_bits: reconciled.leak_ec_bits,
                verification_tag_bits: reconciled.verification_tag_bits,
                final_length_bits: length,
                final_key_tx,
                final_key_rx,
                epsilon_total,
            });
        }
        Err(Error::DecoyAbort(reason)) => {
            abort_reason = Some(String::from(reason));
        }
        Err(e) => return Err(e),
    }

    let final_key_bits = key.as_ref().map(|k| k.final_length_bits).unwrap_or(0);
    Ok(PassReport {
        scenario_id: scenario.id.clone(),
        seed: scenario.seed,
        trajectory: profile.trajectory,
        budgets: profile.budgets,
        contrast: profile.contrast,
        tracking: profile.tracking,
        tallies,
        slices,
        stats,
        decoy,
        key,
        totals: PassTotals {
            duration_s: pulses_sent as f64 / scenario.source.pulse_rate_hz,
            pulses_sent,
            detections: totals_detections,
            sifted_bits,
            sifted_errors,
            qber,
            final_key_bits,
            abort_reason,
        },
    })
}

fn aggregate_slices(
    scenario: &Scenario,
    profile: &RateProfile,
    tallies: &[SliceTally],
) -> Vec<SliceReport> {
    let mut out: Vec<SliceReport> = Vec::new();
    let window = scenario.slice_duration_s;
    let mut group_start = 0usize;
    while group_start < tallies.len() {
        let t_start = profile.trajectory[group_start].t_s;
        let mut group_end = group_start;
        while group_end < tallies.len()
            && profile.trajectory[group_end].t_s < t_start + window - 1e-9
        {
            group_end += 1;
        }
        let t_end = profile.trajectory[group_end.min(profile.trajectory.len() - 1)].t_s;
        let mid = (group_start + group_end) / 2;
        let span = (t_end - t_start).max(scenario.time_step_s);
        let detections: u64 = tallies[group_start..group_end]
            .iter()
            .map(|t| t.total_detected())
            .sum();
        let sifted: u64 = tallies[group_start..group_end].iter().map(|t| t.sifted).sum();
        let errors: u64 = tallies[group_start..group_end]
            .iter()
            .map(|t| t.sifted_errors)
            .sum();
        out.push(SliceReport {
            t_start_s: t_start,
            t_end_s: t_end,
            elevation_deg: profile.trajectory[mid].elevation_deg,
            range_km: profile.trajectory[mid].slant_range_km,
            channel_total_db: profile.budgets[mid].channel_total_db,
            end_to_end_db: profile.budgets[mid].end_to_end_db,
            detections,
            detection_rate_hz: detections as f64 / span,
            sifted,
            sifted_rate_bps: sifted as f64 / span,
            sifted_errors: errors,
            qber: if sifted > 0 {
                errors as f64 / sifted as f64
            } else {
                0.0
            },
        });
        group_start = group_end;
    }
    out
}

/// Expected (no Monte Carlo) final key length for a source candidate over a
/// fixed channel profile.
pub fn expected_final_key_bits(
    profile: &RateProfile,
    source: &SourceConfig,
    detectors: &DetectorConfig,
    epsilon: f64,
) -> u64 {
    let (signal_acceptance, _) = crate::channel::synchronization_acceptance(detectors);
    let y0_base = detectors.background_click_probability();

    let mut sent = [0.0f64; 3];
    let mut detected = [0.0f64; 3];
    let mut errors = [0.0f64; 3];
    for (pulses, channel) in &profile.slices {
        let eta = channel.eta_end_to_end * signal_acceptance;
        let y0 = (y0_base * channel.background_scale).min(0.999);
        for class in IntensityClass::ALL {
            let c = class.index();
            let n = *pulses as f64 * source.probability(class);
            let (q, e) = crate::channel::detection_probabilities(
                source.mu(class),
                eta,
                y0,
                channel.e_pol,
            );
            sent[c] += n;
            detected[c] += n * q;
            errors[c] += n * q * e / 2.0;
        }
    }

    let stats = GainStatistics {
        sent: sent.map(|x| libm::round(x) as u64),
        detected: detected.map(|x| libm::round(x) as u64),
        matched: detected.map(|x| libm::round(x / 2.0) as u64),
        errors: errors.map(|x| libm::round(x) as u64),
    };
    if stats.sent.iter().any(|&n| n == 0) {
        return 0;
    }
    let bounds = match decoy_bounds(&stats, source, epsilon) {
        Ok(b) => b,
        Err(_) => return 0,
    };
    let n_sifted = stats.matched[IntensityClass::Signal.index()];
    let qber = stats.error_rate(IntensityClass::Signal);
    let leak = libm::ceil(EC_EFFICIENCY_MODEL * binary_entropy(qber) * n_sifted as f64) as u64;
    secure_key_length(n_sifted, &bounds, &stats, leak, EPSILON_PA)
}

/// Grid ranges for the source optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRanges {
    pub mu_signal: Vec<f64>,
    pub mu_decoy: Vec<f64>,
    pub p_signal: Vec<f64>,
    pub p_decoy: Vec<f64>,
}

impl SearchRanges {
    /// Evenly spaced inclusive grid.
    pub fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
        if steps <= 1 {
            return alloc::vec![lo];
        }
        (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect()
    }

    pub fn default_for_optimization() -> Self {
        SearchRanges {
            mu_signal: Self::grid(0.3, 1.2, 19),
            mu_decoy: Self::grid(0.02, 0.30, 15),
            p_signal: Self::grid(0.30, 0.70, 9),
            p_decoy: Self::grid(0.10, 0.45, 8),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mu_signal.is_empty()
            || self.mu_decoy.is_empty()
            || self.p_signal.is_empty()
            || self.p_decoy.is_empty()
        {
            return Err(Error::Config("empty optimization range"));
        }
        let max_mu = self.mu_signal.iter().fold(0.0f64, |a, &b| a.max(b));
        if max_mu > 1.5 {
            return Err(Error::Config("signal intensity range exceeds 1.5"));
        }
        Ok(())
    }
}

/// Result of the source-parameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub best: SourceConfig,
    pub expected_key_bits: u64,
    pub evaluations: u64,
}

/// Coordinate-descent grid search over (mu_s, mu_d, p_s, p_d) maximizing the
/// analytic expected key length. Zero expected bits everywhere means no key
/// is possible on this channel.
pub fn optimize_source_parameters(
    scenario: &Scenario,
    ranges: &SearchRanges,
) -> Result<OptimizationOutcome> {
    ranges.validate()?;
    let profile = rate_profile(scenario)?;
    let mut evaluations = 0u64;

    let candidate = |mu_s: f64, mu_d: f64, p_s: f64, p_d: f64| -> Option<SourceConfig> {
        let p_v = 1.0 - p_s - p_d;
        if !(p_v > 0.01) || !(mu_s > mu_d) {
            return None;
        }
        Some(SourceConfig {
            mu_signal: mu_s,
            mu_decoy: mu_d,
            p_signal: p_s,
            p_decoy: p_d,
            p_vacuum: p_v,
            ..scenario.source
        })
    };
    let mut evaluate = |source: &Option<SourceConfig>| -> u64 {
        evaluations += 1;
        source
            .as_ref()
            .map(|s| expected_final_key_bits(&profile, s, &scenario.detectors, EPSILON_BOUND))
            .unwrap_or(0)
    };

    // Start from the middle of each grid.
    let mid = |v: &Vec<f64>| v[v.len() / 2];
    let mut current = [
        mid(&ranges.mu_signal),
        mid(&ranges.mu_decoy),
        mid(&ranges.p_signal),
        mid(&ranges.p_decoy),
    ];
    let axes = [
        ranges.mu_signal.clone(),
        ranges.mu_decoy.clone(),
        ranges.p_signal.clone(),
        ranges.p_decoy.clone(),
    ];
    let mut best_value = evaluate(&candidate(current[0], current[1], current[2], current[3]));

    for _sweep in 0..20 {
        let mut improved = false;
        for axis in 0..4 {
            for &value in &axes[axis] {
                let mut trial = current;
                trial[axis] = value;
                let v = evaluate(&candidate(trial[0], trial[1], trial[2], trial[3]));
                if v > best_value {
                    best_value = v;
                    current = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let best = candidate(current[0], current[1], current[2], current[3])
        .ok_or(Error::Config("optimizer landed on an infeasible point"))?;
    Ok(OptimizationOutcome {
        best,
        expected_key_bits: best_value,
        evaluations,
    })
}
