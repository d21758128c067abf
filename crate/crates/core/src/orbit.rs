//! Satellite pass geometry over a fixed ground station.
//!
//! A pass is modelled as a circular two-body orbit over a spherical Earth and
//! parameterized by its maximum elevation; the full orbital elements add no
//! observable beyond range, elevation, azimuth and angular rate. The station
//! sits at the origin of a local east/north/up frame and the orbit ground
//! track is a great circle whose closest angular approach to the station is
//! fixed by the requested maximum elevation.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Ground station site. The coordinates are carried through configs and
/// reports; the pass geometry itself is expressed station-relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStation {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GroundStation {
    /// Xinglong observatory site.
    pub fn xinglong() -> Self {
        GroundStation {
            latitude_deg: 40.395_866,
            longitude_deg: 117.577_458,
            altitude_m: 890.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude_deg.abs() <= 90.0) {
            return Err(Error::Config("station latitude outside [-90, 90]"));
        }
        if !(self.longitude_deg.abs() <= 180.0) {
            return Err(Error::Config("station longitude outside [-180, 180]"));
        }
        if !(self.altitude_m >= 0.0) {
            return Err(Error::Config("station altitude negative"));
        }
        Ok(())
    }
}

/// Circular-orbit parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitConfig {
    pub altitude_km: f64,
    pub orbital_speed_kms: f64,
    pub earth_radius_km: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            altitude_km: 500.0,
            orbital_speed_kms: 7.6,
            earth_radius_km: 6371.0,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km > 0.0 && self.orbital_speed_kms > 0.0 && self.earth_radius_km > 0.0)
        {
            return Err(Error::Config("orbit parameters must be positive"));
        }
        Ok(())
    }

    /// Angular speed of the satellite about the Earth's center, rad/s.
    pub fn angular_speed_rad_s(&self) -> f64 {
        self.orbital_speed_kms / (self.earth_radius_km + self.altitude_km)
    }
}

/// One time-stamped sample of the satellite as seen from the station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    /// Seconds since the start of the pass.
    pub t_s: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub slant_range_km: f64,
    pub angular_rate_degps: f64,
}

/// Line-of-sight distance to the satellite at a given elevation.
///
/// Solves `d^2 + 2 d R sin(el) = (R+h)^2 - R^2` for the spherical-Earth
/// geometry; strictly decreasing in elevation, equal to the orbit altitude at
/// zenith.
pub fn slant_range(elevation_deg: f64, orbit: &OrbitConfig) -> Result<f64> {
    if !(0.0..=90.0).contains(&elevation_deg) {
        return Err(Error::Domain("elevation outside [0, 90] degrees"));
    }
    let r = orbit.earth_radius_km;
    let h = orbit.altitude_km;
    let s = libm::sin(elevation_deg.to_radians());
    Ok(-r * s + libm::sqrt(r * r * s * s + 2.0 * r * h + h * h))
}

/// Elevation at which the slant range equals `range_km` (inverse of
/// [`slant_range`]).
pub fn elevation_for_range(range_km: f64, orbit: &OrbitConfig) -> Result<f64> {
    let r = orbit.earth_radius_km;
    let h = orbit.altitude_km;
    let horizon = slant_range(0.0, orbit)?;
    if !(h..=horizon).contains(&range_km) {
        return Err(Error::Domain("range outside [altitude, horizon distance]"));
    }
    let s = (2.0 * r * h + h * h - range_km * range_km) / (2.0 * range_km * r);
    Ok(libm::asin(s.clamp(-1.0, 1.0)).to_degrees())
}

/// Central angle (station to sub-satellite point, at Earth's center) at which
/// the satellite appears at the given elevation.
fn central_angle_for_elevation(elevation_deg: f64, orbit: &OrbitConfig) -> f64 {
    let el = elevation_deg.to_radians();
    let ratio = orbit.earth_radius_km / (orbit.earth_radius_km + orbit.altitude_km);
    libm::acos((ratio * libm::cos(el)).clamp(-1.0, 1.0)) - el
}

/// Generate a pass from `start_elevation` up through `max_elevation` and back
/// down to `end_elevation`, sampled every `dt_s` seconds.
///
/// The last sample is pinned to `end_elevation` exactly, so its spacing from
/// the previous sample may be shorter than `dt_s`.
pub fn generate_pass(
    max_elevation_deg: f64,
    start_elevation_deg: f64,
    end_elevation_deg: f64,
    dt_s: f64,
    orbit: &OrbitConfig,
) -> Result<Vec<TrajectoryPoint>> {
    orbit.validate()?;
    if !(dt_s > 0.0) {
        return Err(Error::Config("dt must be positive"));
    }
    if !(0.0..=90.0).contains(&max_elevation_deg) {
        return Err(Error::Config("max elevation outside [0, 90]"));
    }
    if max_elevation_deg < start_elevation_deg {
        return Err(Error::Config("max elevation below start elevation"));
    }
    if start_elevation_deg < end_elevation_deg {
        return Err(Error::Config("start elevation below end elevation"));
    }
    if end_elevation_deg < 0.0 {
        return Err(Error::Config("end elevation negative"));
    }

    let beta = central_angle_for_elevation(max_elevation_deg, orbit);
    let cos_beta = libm::cos(beta);
    // Along-track angle from the closest-approach point at which the
    // satellite crosses a given elevation: cos(gamma) = cos(beta) cos(alpha).
    let alpha_at = |el_deg: f64| -> f64 {
        let gamma = central_angle_for_elevation(el_deg, orbit);
        libm::acos((libm::cos(gamma) / cos_beta).clamp(-1.0, 1.0))
    };
    let alpha_start = -alpha_at(start_elevation_deg);
    let alpha_end = alpha_at(end_elevation_deg);

    let omega = orbit.angular_speed_rad_s();
    let duration = (alpha_end - alpha_start) / omega;

    let mut times: Vec<f64> = Vec::new();
    let mut t = 0.0;
    while t < duration - 1e-9 {
        times.push(t);
        t += dt_s;
    }
    times.push(duration);

    let samples: Vec<[f64; 3]> = times
        .iter()
        .map(|&t| line_of_sight(alpha_start + omega * t, beta, orbit))
        .collect();

    let mut points = Vec::with_capacity(times.len());
    for (i, (&t, los)) in times.iter().zip(samples.iter()).enumerate() {
        let range = norm(los);
        let elevation = libm::asin((los[2] / range).clamp(-1.0, 1.0)).to_degrees();
        let azimuth = normalize_azimuth(libm::atan2(los[0], los[1]).to_degrees());
        // Finite-difference the line-of-sight unit vector, the way a tracking
        // loop experiences the motion.
        let angular_rate = if samples.len() < 2 {
            0.0
        } else {
            let (a, b, step) = if i + 1 < samples.len() {
                (los, &samples[i + 1], times[i + 1] - t)
            } else {
                (&samples[i - 1], los, t - times[i - 1])
            };
            let dot = (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0);
            libm::acos(dot).to_degrees() / step
        };
        points.push(TrajectoryPoint {
            t_s: t,
            elevation_deg: elevation,
            azimuth_deg: azimuth,
            slant_range_km: range,
            angular_rate_degps: angular_rate,
        });
    }
    Ok(points)
}

/// Station-frame line-of-sight vector (east, north, up components, km) for a
/// satellite at along-track angle `alpha` on a track with closest approach
/// `beta`.
fn line_of_sight(alpha: f64, beta: f64, orbit: &OrbitConfig) -> [f64; 3] {
    let r = orbit.earth_radius_km;
    let rs = r + orbit.altitude_km;
    let (sa, ca) = (libm::sin(alpha), libm::cos(alpha));
    let (sb, cb) = (libm::sin(beta), libm::cos(beta));
    [rs * sb * ca, rs * sa, rs * cb * ca - r]
}

fn normalize_azimuth(az_deg: f64) -> f64 {
    let mut a = az_deg % 360.0;
    if a < 0.0 {
        a += 360.0;
    }
    a
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    libm::sqrt(dot(a, a))
}
