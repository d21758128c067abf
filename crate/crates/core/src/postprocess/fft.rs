//! GF(2) polynomial products via an integer-exact floating FFT.
//!
//! Toeplitz hashing of a pass-scale key is a multi-megabit GF(2) convolution;
//! schoolbook word multiplication is far too slow. Coefficients of the
//! integer convolution of two 0/1 sequences are bounded by the shorter
//! length (~2^21 here), so a complex f64 FFT recovers them exactly after
//! rounding, with orders of magnitude of error margin.

use alloc::vec::Vec;

type C = (f64, f64);

#[inline]
fn add(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

#[inline]
fn sub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

#[inline]
fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

#[inline]
fn conj(a: C) -> C {
    (a.0, -a.1)
}

/// Iterative radix-2 FFT with a precomputed twiddle table.
struct Fft {
    n: usize,
    twiddles: Vec<C>,
}

impl Fft {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let mut twiddles = Vec::with_capacity(n / 2);
        for k in 0..n / 2 {
            let angle = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
            twiddles.push((libm::cos(angle), libm::sin(angle)));
        }
        Fft { n, twiddles }
    }

    fn forward(&self, buf: &mut [C]) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        // Bit-reversal reorder.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let u = buf[start + k];
                    let v = mul(buf[start + k + half], w);
                    buf[start + k] = add(u, v);
                    buf[start + k + half] = sub(u, v);
                }
            }
            len <<= 1;
        }
    }

    fn inverse(&self, buf: &mut [C]) {
        for c in buf.iter_mut() {
            *c = conj(*c);
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c = (c.0 * scale, -c.1 * scale);
        }
    }
}

/// Parities of the integer convolution `c[k] = sum_i a[i] b[k-i]` for
/// `k` in `[from, from + len)`. Inputs are 0/1 sequences.
pub fn convolve_parity(a: &[u8], b: &[u8], from: usize, len: usize) -> Vec<u8> {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let need = a.len() + b.len() - 1;
    debug_assert!(from + len <= need);
    let n = need.next_power_of_two().max(2);
    let fft = Fft::new(n);

    // Pack both real sequences into one complex transform.
    let mut buf: Vec<C> = alloc::vec![(0.0, 0.0); n];
    for (i, &bit) in a.iter().enumerate() {
        buf[i].0 = bit as f64;
    }
    for (i, &bit) in b.iter().enumerate() {
        buf[i].1 = bit as f64;
    }
    fft.forward(&mut buf);

    // Separate the spectra and multiply: with Z = FFT(a + i b),
    // A[k] = (Z[k] + conj(Z[-k]))/2 and B[k] = (Z[k] - conj(Z[-k]))/(2i);
    // the product spectrum is conjugate-symmetric.
    let mask = n - 1;
    for k in 0..=n / 2 {
        let nk = (n - k) & mask;
        let zk = buf[k];
        let znk = buf[nk];
        let ak = (0.5 * (zk.0 + znk.0), 0.5 * (zk.1 - znk.1));
        let d = sub(zk, conj(znk));
        let bk = (0.5 * d.1, -0.5 * d.0);
        let ck = mul(ak, bk);
        buf[k] = ck;
        if nk != k {
            buf[nk] = conj(ck);
        }
    }
    fft.inverse(&mut buf);

    let mut out = Vec::with_capacity(len);
    let mut worst = 0.0f64;
    for k in from..from + len {
        let value = buf[k].0;
        let rounded = libm::round(value);
        worst = worst.max((value - rounded).abs());
        out.push((rounded as i64 & 1) as u8);
    }
    assert!(
        worst < 0.4,
        "FFT convolution lost integer exactness (deviation {worst})"
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand_core::RngCore;

    fn naive_convolve_parity(a: &[u8], b: &[u8], from: usize, len: usize) -> Vec<u8> {
        (from..from + len)
            .map(|k| {
                let mut acc = 0u64;
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 1 && k >= i && k - i < b.len() {
                        acc += b[k - i] as u64;
                    }
                }
                (acc & 1) as u8
            })
            .collect()
    }

    #[test]
    fn tiny_known_product() {
        // (1 + x) * (1 + x) = 1 + 2x + x^2 -> parities 1, 0, 1.
        let c = convolve_parity(&[1, 1], &[1, 1], 0, 3);
        assert_eq!(c, alloc::vec![1, 0, 1]);
    }

    #[test]
    fn medium_product_matches_naive() {
        let mut rng = stream_rng(5, 50);
        let a: Vec<u8> = (0..5000).map(|_| (rng.next_u32() & 1) as u8).collect();
        let b: Vec<u8> = (0..1200).map(|_| (rng.next_u32() & 1) as u8).collect();
        let fast = convolve_parity(&a, &b, 1199, 3000);
        let slow = naive_convolve_parity(&a, &b, 1199, 3000);
        assert_eq!(fast, slow);
    }

    proptest! {
        #[test]
        fn product_matches_naive(
            a in proptest::collection::vec(0u8..2, 1..260),
            b in proptest::collection::vec(0u8..2, 1..260),
        ) {
            let need = a.len() + b.len() - 1;
            let fast = convolve_parity(&a, &b, 0, need);
            let slow = naive_convolve_parity(&a, &b, 0, need);
            prop_assert_eq!(fast, slow);
        }
    }
}
