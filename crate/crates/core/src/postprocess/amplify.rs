//! Privacy amplification with a seeded random binary Toeplitz matrix.
//!
//! Both sides derive the same `target_length x n` Toeplitz matrix from the
//! shared seed and multiply their (identical, reconciled) key by it over
//! GF(2). The matrix is defined by `n + target_length - 1` diagonal bits, so
//! the product is a slice of a GF(2) convolution and is computed through the
//! FFT path in [`crate::postprocess::fft`].

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::postprocess::fft::convolve_parity;
use crate::rng::{stream_rng, tags};
use crate::{Error, Result};

/// Diagonal bits defining the seeded Toeplitz matrix: entry `(i, j)` of the
/// matrix is `bits[n - 1 + i - j]`.
pub fn toeplitz_diagonal_bits(input_len: usize, target_length: usize, seed: u64) -> Vec<u8> {
    let count = input_len + target_length - 1;
    let mut rng = stream_rng(seed, tags::AMPLIFY);
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let mut word = rng.next_u64();
        for _ in 0..64 {
            if bits.len() == count {
                break;
            }
            bits.push((word & 1) as u8);
            word >>= 1;
        }
    }
    bits
}

/// Compress `key` (a 0/1 bit sequence) to `target_length` bits.
pub fn privacy_amplify(key: &[u8], target_length: usize, seed: u64) -> Result<Vec<u8>> {
    if target_length > key.len() {
        return Err(Error::Length("target length exceeds input key length"));
    }
    if target_length == 0 {
        return Ok(Vec::new());
    }
    let n = key.len();
    let diag = toeplitz_diagonal_bits(n, target_length, seed);
    // Row i of the product is coefficient n-1+i of diag (*) key.
    Ok(convolve_parity(&diag, key, n - 1, target_length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand_core::RngCore;

    /// Independent oracle: explicit row-by-row Toeplitz product.
    fn naive_amplify(key: &[u8], target_length: usize, seed: u64) -> Vec<u8> {
        let n = key.len();
        let diag = toeplitz_diagonal_bits(n, target_length, seed);
        (0..target_length)
            .map(|i| {
                let mut acc = 0u8;
                for (j, &bit) in key.iter().enumerate() {
                    acc ^= diag[n - 1 + i - j] & bit;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn empty_target_is_empty() {
        let key = alloc::vec![1, 0, 1, 1];
        assert!(privacy_amplify(&key, 0, 5).unwrap().is_empty());
    }

    #[test]
    fn oversized_target_is_rejected() {
        let key = alloc::vec![1, 0, 1];
        assert!(matches!(
            privacy_amplify(&key, 4, 5),
            Err(Error::Length(_))
        ));
    }

    #[test]
    fn matches_row_by_row_oracle() {
        let mut rng = stream_rng(31, 7);
        let key: Vec<u8> = (0..4096).map(|_| (rng.next_u32() & 1) as u8).collect();
        let fast = privacy_amplify(&key, 1111, 99).unwrap();
        let slow = naive_amplify(&key, 1111, 99);
        assert_eq!(fast, slow);
    }

    #[test]
    fn biased_input_passes_monobit_test() {
        // Extract 1e5 bits from a heavily biased 4e5-bit input; the output
        // frequency must sit within 4/sqrt(n) of one half.
        let mut rng = stream_rng(8, 15);
        let key: Vec<u8> = (0..400_000)
            .map(|_| u8::from(rng.next_u64() < u64::MAX / 5))
            .collect();
        let ones_in = key.iter().map(|&b| b as f64).sum::<f64>() / key.len() as f64;
        assert!(ones_in < 0.3, "input not biased as intended");
        let out = privacy_amplify(&key, 100_000, 4242).unwrap();
        let n = out.len() as f64;
        let ones = out.iter().map(|&b| b as f64).sum::<f64>();
        let deviation = (ones / n - 0.5).abs();
        assert!(deviation < 4.0 / libm::sqrt(n), "monobit deviation {deviation}");
    }

    proptest! {
        #[test]
        fn gf2_linearity(
            a in proptest::collection::vec(0u8..2, 32..200),
            b_seed in 0u64..1000,
            seed in 0u64..1000,
        ) {
            let n = a.len();
            let mut rng = stream_rng(b_seed, 3);
            let b: Vec<u8> = (0..n).map(|_| (rng.next_u32() & 1) as u8).collect();
            let xored: Vec<u8> = a.iter().zip(b.iter()).map(|(x, y)| x ^ y).collect();
            let m = n / 2;
            let ta = privacy_amplify(&a, m, seed).unwrap();
            let tb = privacy_amplify(&b, m, seed).unwrap();
            let txor = privacy_amplify(&xored, m, seed).unwrap();
            let combined: Vec<u8> = ta.iter().zip(tb.iter()).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(txor, combined);
        }
    }
}
