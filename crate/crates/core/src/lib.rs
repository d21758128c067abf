//! Simulation core for a satellite-to-ground decoy-state BB84 QKD link.
//!
//! The crate models the full chain from pass geometry to final secure keys:
//!
//! * [`orbit`] — circular-orbit pass geometry over a fixed ground station
//!   (elevation, azimuth, slant range, angular rate vs. time)
//! * [`tracking`] — cascaded coarse/fine pointing loops and the conversion of
//!   residual jitter into a link transmission factor
//! * [`link`] — the downlink loss ledger (diffraction, atmosphere, pointing,
//!   receiver optics, detector) and the fiber-equivalent comparison
//! * [`polarization`] — pass-dependent polarization-frame rotation, dynamic
//!   half-wave-plate compensation and the resulting error contribution
//! * [`channel`] — decoy-state source, lossy channel, gated detection with
//!   background, and timing acceptance; detection-driven Monte Carlo sampling
//! * [`postprocess`] — sifting, decoy-state bounds, Hamming-syndrome error
//!   correction, Toeplitz privacy amplification, secure-length computation and
//!   one-time-pad key relay
//! * [`scenario`] — end-to-end pass pipeline, source-parameter optimization
//!   and report assembly
//!
//! The crate is `no_std` (with `alloc`); all I/O, file formats and the CLI
//! live in the companion `satqkd-cli` crate. Every simulation is
//! deterministic under a fixed seed.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

use core::fmt;

pub mod channel;
pub mod link;
pub mod math;
pub mod orbit;
pub mod polarization;
pub mod postprocess;
pub mod rng;
pub mod scenario;
pub mod tracking;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    Domain(&'static str),
    /// A configuration value violated an invariant.
    Config(&'static str),
    /// Cross-referenced data (e.g. event indices) failed an integrity check.
    DataIntegrity(&'static str),
    /// Error correction did not converge within the pass budget.
    ReconciliationFailed { passes: u32 },
    /// The decoy-state analysis could not certify any single-photon yield.
    DecoyAbort(&'static str),
    /// A requested output length exceeded the available input.
    Length(&'static str),
    /// Key material was presented for one-time-pad use a second time.
    OneTimePadViolation,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::DataIntegrity(msg) => write!(f, "data integrity error: {msg}"),
            Error::ReconciliationFailed { passes } => {
                write!(f, "reconciliation failed to verify after {passes} passes")
            }
            Error::DecoyAbort(msg) => write!(f, "decoy analysis abort: {msg}"),
            Error::Length(msg) => write!(f, "length error: {msg}"),
            Error::OneTimePadViolation => write!(f, "one-time-pad material already consumed"),
        }
    }
}

impl core::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
