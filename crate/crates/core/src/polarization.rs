//! Pass-dependent polarization-frame rotation and its dynamic compensation.
//!
//! The relative motion of satellite and station rotates the polarization
//! frame seen by the receiver. Rotation angles here are expressed in
//! compensator (half-wave-plate) orientation units: the polarization plane
//! turns by twice the quoted angle, so the natural period is 180 degrees and
//! the analyzer contrast collapses to zero where the angle crosses +/-45
//! degrees. A motorized plate driven from the predicted angle restores the
//! frame up to its step quantization.

use alloc::vec::Vec;

use crate::orbit::TrajectoryPoint;

/// Compensator step size, degrees.
const HWP_STEP_DEG: f64 = 0.5;
/// Compensator update period, seconds.
const HWP_UPDATE_PERIOD_S: f64 = 1.0;

/// Calibrated description of the optical path's polarization behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationModel {
    /// Static birefringence of the whole optical path, folded into one
    /// offset angle (degrees, compensator units).
    pub static_offset_deg: f64,
    /// Source/analyzer contrast with a perfectly aligned frame.
    pub intrinsic_contrast: f64,
}

impl PolarizationModel {
    /// Offset calibrated so the reference pass starts near 150:1
    /// uncompensated contrast and sweeps through the zero-contrast crossing
    /// once.
    pub fn paper_calibration() -> Self {
        PolarizationModel {
            static_offset_deg: -76.7,
            intrinsic_contrast: 300.0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.intrinsic_contrast > 1.0) {
            return Err(crate::Error::Config("intrinsic contrast must exceed 1"));
        }
        Ok(())
    }
}

/// Contrast of the analyzer with and without compensation at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastSample {
    pub t_s: f64,
    pub rotation_angle_deg: f64,
    pub contrast_uncompensated: f64,
    pub contrast_compensated: f64,
}

/// Normalize an angle to the half-turn interval (-90, 90].
pub fn normalize_half_turn_deg(angle_deg: f64) -> f64 {
    let mut a = angle_deg % 180.0;
    if a <= -90.0 {
        a += 180.0;
    } else if a > 90.0 {
        a -= 180.0;
    }
    a
}

/// Predicted rotation angle of the polarization frame for one trajectory
/// point: the line-of-sight bearing angle (in compensator units, i.e.
/// halved) plus the calibrated static offset.
pub fn predicted_rotation_angle_deg(point: &TrajectoryPoint, model: &PolarizationModel) -> f64 {
    normalize_half_turn_deg(0.5 * point.azimuth_deg + model.static_offset_deg)
}

/// Analyzer contrast for a frame misaligned by `angle_deg` (compensator
/// units), capped at the intrinsic contrast.
pub fn contrast_for_angle(angle_deg: f64, intrinsic_contrast: f64) -> f64 {
    let t = libm::tan((2.0 * angle_deg).to_radians());
    if t == 0.0 {
        return intrinsic_contrast;
    }
    (1.0 / (t * t)).min(intrinsic_contrast)
}

/// Contrast along a pass, with the compensator servo either running or held.
///
/// The servo re-reads the predicted angle once per update period and snaps
/// the plate to the nearest step, so the compensated frame error is bounded
/// by the step quantization plus the drift accumulated between updates.
pub fn contrast_series(
    pass: &[TrajectoryPoint],
    model: &PolarizationModel,
    compensate: bool,
) -> Vec<ContrastSample> {
    let mut samples = Vec::with_capacity(pass.len());
    let mut hwp_angle = 0.0;
    let mut last_update = f64::NEG_INFINITY;
    for point in pass {
        let rotation = predicted_rotation_angle_deg(point, model);
        if point.t_s - last_update >= HWP_UPDATE_PERIOD_S {
            hwp_angle = libm::round(rotation / HWP_STEP_DEG) * HWP_STEP_DEG;
            last_update = point.t_s;
        }
        let uncompensated = contrast_for_angle(rotation, model.intrinsic_contrast);
        let compensated = if compensate {
            let residual = normalize_half_turn_deg(rotation - hwp_angle);
            contrast_for_angle(residual, model.intrinsic_contrast)
        } else {
            uncompensated
        };
        samples.push(ContrastSample {
            t_s: point.t_s,
            rotation_angle_deg: rotation,
            contrast_uncompensated: uncompensated,
            contrast_compensated: compensated,
        });
    }
    samples
}

/// Probability of analyzing a photon into the wrong port at the given
/// contrast ratio: `1 / (1 + contrast)`.
pub fn contrast_to_qber(contrast: f64) -> f64 {
    debug_assert!(contrast >= 0.0);
    1.0 / (1.0 + contrast)
}
