//! Downlink loss ledger and the fiber-equivalent comparison.
//!
//! Losses are kept as separate positive dB components so a report can show
//! exactly where the photons go: beam diffraction, atmospheric absorption,
//! residual pointing error, receiver optics and detector efficiency.
//! `channel_total` is the ratio of the intensity arriving in front of the
//! detectors to the intensity at the transmitter output; `end_to_end` adds
//! the detector.

use crate::math::{db_to_ratio, ratio_to_db};
use crate::orbit::{elevation_for_range, OrbitConfig, TrajectoryPoint};
use crate::tracking::pointing_transmission_factor;
use crate::{Error, Result};

/// Minimum operating elevation; below this the link is not acquired.
pub const MIN_OPERATING_ELEVATION_DEG: f64 = 5.0;

/// Transmitter/receiver optics and the static efficiencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsConfig {
    /// Transmitter telescope aperture, m.
    pub tx_aperture_m: f64,
    /// Receiver telescope aperture, m.
    pub rx_aperture_m: f64,
    /// Far-field beam divergence, full angle at 1/e^2, rad.
    pub divergence_full_angle_rad: f64,
    /// Receiver telescope + fiber coupling efficiency, lumped.
    pub rx_optics_efficiency: f64,
    /// Single-photon detector efficiency.
    pub detector_efficiency: f64,
    /// One-way atmospheric loss at zenith, dB.
    pub zenith_atm_loss_db: f64,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig {
            tx_aperture_m: 0.3,
            rx_aperture_m: 1.0,
            divergence_full_angle_rad: 10e-6,
            rx_optics_efficiency: 0.16,
            detector_efficiency: 0.50,
            zenith_atm_loss_db: 2.0,
        }
    }
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_aperture_m > 0.0 && self.rx_aperture_m > 0.0) {
            return Err(Error::Config("apertures must be positive"));
        }
        if !(self.divergence_full_angle_rad > 0.0) {
            return Err(Error::Config("divergence must be positive"));
        }
        let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
        if !eff_ok(self.rx_optics_efficiency) || !eff_ok(self.detector_efficiency) {
            return Err(Error::Config("efficiencies must be in (0, 1]"));
        }
        if !(self.zenith_atm_loss_db >= 0.0) {
            return Err(Error::Config("zenith atmospheric loss negative"));
        }
        Ok(())
    }

    /// 1/e^2 far-field half angle used for pointing-loss coupling.
    pub fn beam_half_angle_rad(&self) -> f64 {
        0.5 * self.divergence_full_angle_rad
    }
}

/// Per-time-point loss ledger, all entries in positive dB.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkBudget {
    pub diffraction_db: f64,
    pub atmosphere_db: f64,
    pub pointing_db: f64,
    pub rx_optics_db: f64,
    pub detector_db: f64,
    /// Sum of all channel terms, detector excluded.
    pub channel_total_db: f64,
    /// Channel total plus detector.
    pub end_to_end_db: f64,
}

impl LinkBudget {
    /// Linear end-to-end efficiency (pulse in, detectable photon out).
    pub fn end_to_end_efficiency(&self) -> f64 {
        db_to_ratio(self.end_to_end_db)
    }
}

/// Geometric beam-spread loss at the given range.
///
/// The beam diameter grows linearly, `D = tx_aperture + divergence * range`;
/// the collected fraction is `min(1, (rx_aperture / D)^2)`.
pub fn diffraction_loss_db(range_km: f64, optics: &OpticsConfig) -> f64 {
    let beam_diameter_m =
        optics.tx_aperture_m + optics.divergence_full_angle_rad * range_km * 1000.0;
    let collected = {
        let r = optics.rx_aperture_m / beam_diameter_m;
        (r * r).min(1.0)
    };
    ratio_to_db(collected)
}

/// Plane-parallel airmass model: `zenith_loss / sin(elevation)`.
///
/// Elevations below the 5-degree acquisition threshold are outside the
/// operating envelope.
pub fn atmospheric_loss_db(elevation_deg: f64, zenith_atm_loss_db: f64) -> Result<f64> {
    if !(elevation_deg >= MIN_OPERATING_ELEVATION_DEG) {
        return Err(Error::Domain("elevation below 5-degree operating envelope"));
    }
    Ok(zenith_atm_loss_db / libm::sin(elevation_deg.to_radians()))
}

/// Fill the loss ledger for one trajectory point.
///
/// `weather_db` is a flat per-day offset added to the atmospheric term;
/// `jitter_rms_rad` is the per-axis residual pointing jitter from the
/// tracking loop.
pub fn total_link_efficiency(
    point: &TrajectoryPoint,
    optics: &OpticsConfig,
    jitter_rms_rad: f64,
    weather_db: f64,
) -> Result<LinkBudget> {
    let diffraction_db = diffraction_loss_db(point.slant_range_km, optics);
    let atmosphere_db =
        atmospheric_loss_db(point.elevation_deg, optics.zenith_atm_loss_db)? + weather_db;
    let pointing_db = ratio_to_db(pointing_transmission_factor(
        jitter_rms_rad,
        optics.beam_half_angle_rad(),
    ));
    let rx_optics_db = ratio_to_db(optics.rx_optics_efficiency);
    let detector_db = ratio_to_db(optics.detector_efficiency);
    let channel_total_db = diffraction_db + atmosphere_db + pointing_db + rx_optics_db;
    Ok(LinkBudget {
        diffraction_db,
        atmosphere_db,
        pointing_db,
        rx_optics_db,
        detector_db,
        channel_total_db,
        end_to_end_db: channel_total_db + detector_db,
    })
}

/// Result of comparing the satellite channel against direct fiber
/// transmission of the same length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberComparison {
    pub fiber_loss_db: f64,
    /// Satellite channel total (detector excluded) at the same length.
    pub satellite_channel_db: f64,
    /// Expected seconds per sifted bit through the fiber, ideal detectors.
    pub seconds_per_sifted_bit: f64,
    /// Orders of magnitude by which the satellite channel wins.
    pub advantage_orders: f64,
}

/// Compare fiber transmission at `length_km` with the satellite downlink
/// whose slant range equals the same length.
///
/// The fiber side assumes a perfect source at `source_rate_hz`, ideal
/// lossless detectors, and the factor 1/2 from basis sifting.
pub fn fiber_comparison(
    length_km: f64,
    fiber_loss_coeff_db_per_km: f64,
    source_rate_hz: f64,
    optics: &OpticsConfig,
    orbit: &OrbitConfig,
    jitter_rms_rad: f64,
    weather_db: f64,
) -> Result<FiberComparison> {
    if !(length_km > 0.0 && fiber_loss_coeff_db_per_km > 0.0 && source_rate_hz > 0.0) {
        return Err(Error::Domain("fiber comparison arguments must be positive"));
    }
    let fiber_loss_db = fiber_loss_coeff_db_per_km * length_km;
    let sifted_rate = 0.5 * source_rate_hz * db_to_ratio(fiber_loss_db);
    let elevation = elevation_for_range(length_km, orbit)?;
    let point = TrajectoryPoint {
        t_s: 0.0,
        elevation_deg: elevation,
        azimuth_deg: 0.0,
        slant_range_km: length_km,
        angular_rate_degps: 0.0,
    };
    let budget = total_link_efficiency(&point, optics, jitter_rms_rad, weather_db)?;
    Ok(FiberComparison {
        fiber_loss_db,
        satellite_channel_db: budget.channel_total_db,
        seconds_per_sifted_bit: 1.0 / sifted_rate,
        advantage_orders: (fiber_loss_db - budget.channel_total_db) / 10.0,
    })
}
