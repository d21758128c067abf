//! One-time-pad key relay through the satellite as a trusted node.
//!
//! The satellite holds one key per ground station from independent passes.
//! Announcing the XOR of two keys lets station A recover station B's key
//! while revealing nothing to anyone holding neither. Consumed material is
//! marked unusable; pad reuse is refused.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Secure key bits held for one station, with one-time-pad bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    bits: Vec<u8>,
    consumed: bool,
}

impl KeyMaterial {
    pub fn new(bits: Vec<u8>) -> Self {
        KeyMaterial {
            bits,
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }
}

/// Public XOR announcement joining two station keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayAnnouncement {
    pub xor_bits: Vec<u8>,
}

impl RelayAnnouncement {
    pub fn shared_key_length(&self) -> usize {
        self.xor_bits.len()
    }
}

/// Announce `key_a XOR key_b`, truncated to the shorter key, and mark both
/// pads consumed.
pub fn otp_relay(key_a: &mut KeyMaterial, key_b: &mut KeyMaterial) -> Result<RelayAnnouncement> {
    if key_a.is_empty() || key_b.is_empty() {
        return Err(Error::Config("relay requires nonempty keys on both sides"));
    }
    if key_a.consumed || key_b.consumed {
        return Err(Error::OneTimePadViolation);
    }
    key_a.consumed = true;
    key_b.consumed = true;
    let len = key_a.len().min(key_b.len());
    let xor_bits = key_a.bits[..len]
        .iter()
        .zip(key_b.bits[..len].iter())
        .map(|(a, b)| a ^ b)
        .collect();
    Ok(RelayAnnouncement { xor_bits })
}

/// Recover the remote station's key from the announcement and the local key.
pub fn recover_remote_key(
    announcement: &RelayAnnouncement,
    own_bits: &[u8],
) -> Result<Vec<u8>> {
    if own_bits.len() < announcement.xor_bits.len() {
        return Err(Error::Length("own key shorter than the announcement"));
    }
    Ok(announcement
        .xor_bits
        .iter()
        .zip(own_bits.iter())
        .map(|(x, k)| x ^ k)
        .collect())
}
