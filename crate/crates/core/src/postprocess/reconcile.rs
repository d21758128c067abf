//! Information reconciliation by block-wise Hamming syndrome exchange.
//!
//! Each pass shuffles both keys with a shared seeded permutation, splits them
//! into blocks of `2^m - 1` bits sized from the current error estimate, and
//! exchanges one parity bit per block. Blocks with differing parity exchange
//! an m-bit Hamming syndrome and flip the indicated position. Passes repeat,
//! with fresh permutations, until a 64-bit verification tag over the whole
//! key matches. All disclosed bits (parities, syndromes, tags) are charged to
//! `leak_ec_bits` and later subtracted from the secure length.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::rng::{splitmix64, stream_rng, tags};
use crate::{Error, Result};

/// Reconciliation gives up after this many shuffled passes.
pub const MAX_PASSES: u32 = 10;

/// Verification tag width, bits.
pub const TAG_BITS: u64 = 64;

/// Hamming-convergence ceiling on the tolerable error-rate estimate.
pub const MAX_QBER_ESTIMATE: f64 = 0.11;

/// Outcome of a successful reconciliation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconcileResult {
    /// Receiver key after correction; equals the transmitter key.
    pub corrected_rx: Vec<u8>,
    /// Total classical information disclosed: parities + syndromes + tags.
    pub leak_ec_bits: u64,
    /// Tag bits included in `leak_ec_bits`.
    pub verification_tag_bits: u64,
    /// Passes actually run.
    pub passes: u32,
}

/// Correct `rx` against the reference `tx`.
///
/// `qber_estimate` seeds the block-length schedule and must be below the
/// convergence ceiling; the estimate is refreshed from the corrections
/// observed in each pass.
pub fn error_correct(
    tx: &[u8],
    rx: &[u8],
    qber_estimate: f64,
    seed: u64,
) -> Result<ReconcileResult> {
    if tx.len() != rx.len() {
        return Err(Error::Length("key sides differ in length"));
    }
    if tx.is_empty() {
        return Err(Error::Config("cannot reconcile an empty key"));
    }
    if !(0.0..MAX_QBER_ESTIMATE).contains(&qber_estimate) {
        return Err(Error::Domain("qber estimate outside [0, 0.11)"));
    }

    let n = tx.len();
    let mut rx = rx.to_vec();
    let mut p_est = qber_estimate.max(0.5 / n as f64);
    let mut leak = 0u64;
    let mut tag_bits_total = 0u64;
    let mut prev_order: Option<u32> = None;
    let tag_salt = splitmix64(seed ^ 0x7461_675f_7361_6c74);

    for pass in 1..=MAX_PASSES {
        let mut rng = stream_rng(seed, tags::RECONCILE.wrapping_add(pass as u64));
        let perm = permutation(n, &mut rng);
        // Block growth is capped at two doublings per pass so an optimistic
        // error estimate cannot outrun the real error rate.
        let mut m = block_order(p_est);
        if let Some(prev) = prev_order {
            m = m.min(prev + 2);
        }
        prev_order = Some(m);
        let block_len = (1usize << m) - 1;

        let mut corrections = 0u64;
        let mut blocks = 0u64;
        let mut odd_blocks = 0u64;
        for chunk in perm.chunks(block_len) {
            blocks += 1;
            leak += 1;
            let (par_tx, syn_tx) = parity_and_syndrome(tx, chunk);
            let (par_rx, syn_rx) = parity_and_syndrome(&rx, chunk);
            if par_tx == par_rx {
                continue;
            }
            odd_blocks += 1;
            leak += m as u64;
            let pointer = (syn_tx ^ syn_rx) as usize;
            if pointer >= 1 && pointer <= chunk.len() {
                rx[chunk[pointer - 1]] ^= 1;
                corrections += 1;
            }
        }

        leak += TAG_BITS;
        tag_bits_total += TAG_BITS;
        if tag64(tx, tag_salt) == tag64(&rx, tag_salt) {
            return Ok(ReconcileResult {
                corrected_rx: rx,
                leak_ec_bits: leak,
                verification_tag_bits: tag_bits_total,
                passes: pass,
            });
        }

        // Re-estimate the error rate from the observed odd-parity fraction
        // (inverting P_odd = (1 - (1-2p)^L) / 2), then credit most of this
        // pass's corrections. The floor keeps the estimate honest when
        // miscorrections offset the gains.
        let ratio = (1.0 - 2.0 * odd_blocks as f64 / blocks as f64).max(0.02);
        let p_observed = 0.5 * (1.0 - libm::exp(libm::log(ratio) / block_len as f64));
        let progressed = (p_observed * n as f64 - 0.75 * corrections as f64) / n as f64;
        p_est = progressed.max(0.25 * p_observed).max(0.5 / n as f64);
    }

    Err(Error::ReconciliationFailed { passes: MAX_PASSES })
}

/// Largest Hamming order m (block 2^m - 1) keeping the expected errors per
/// block at or below one half.
fn block_order(p_est: f64) -> u32 {
    for m in (3..=13u32).rev() {
        let block = (1u64 << m) - 1;
        if block as f64 * p_est <= 0.5 {
            return m;
        }
    }
    3
}

/// Block parity and the position-code XOR ("syndrome") of the set bits.
fn parity_and_syndrome(bits: &[u8], chunk: &[usize]) -> (u8, u32) {
    let mut parity = 0u8;
    let mut syndrome = 0u32;
    for (j, &idx) in chunk.iter().enumerate() {
        if bits[idx] == 1 {
            parity ^= 1;
            syndrome ^= (j + 1) as u32;
        }
    }
    (parity, syndrome)
}

fn permutation(n: usize, rng: &mut impl RngCore) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Seeded 64-bit verification tag over a bit string.
fn tag64(bits: &[u8], salt: u64) -> u64 {
    let mut state = salt;
    let mut word = 0u64;
    for (i, &b) in bits.iter().enumerate() {
        word = (word << 1) | b as u64;
        if i % 64 == 63 {
            state = splitmix64(state ^ word);
            word = 0;
        }
    }
    splitmix64(state ^ word ^ bits.len() as u64)
}
