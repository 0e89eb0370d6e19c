//! Inner loops shared by the convolution forward and backward passes.
//!
//! All three convolution products (output, input gradient, weight gradient)
//! reduce to one primitive: a valid-mode cross-correlation accumulated into an
//! output buffer. The loop is vectorized over the output index and unrolled
//! four taps at a time so each output element is loaded and stored once per
//! four multiply-adds.

use crate::scalar::Scalar;

/// `out[j] += Σ_i kernel[i] · signal[j + i]` for every `j < out.len()`.
///
/// Requires `signal.len() >= out.len() + kernel.len() - 1`.
#[inline]
pub(crate) fn correlate_accumulate<S: Scalar>(out: &mut [S], signal: &[S], kernel: &[S]) {
    let n = out.len();
    if kernel.is_empty() || n == 0 {
        return;
    }
    assert!(
        signal.len() + 1 >= n + kernel.len(),
        "signal too short for correlation"
    );
    let mut taps = kernel.chunks_exact(4);
    let mut offset = 0;
    for w in &mut taps {
        let (w0, w1, w2, w3) = (w[0], w[1], w[2], w[3]);
        let s0 = &signal[offset..offset + n];
        let s1 = &signal[offset + 1..offset + 1 + n];
        let s2 = &signal[offset + 2..offset + 2 + n];
        let s3 = &signal[offset + 3..offset + 3 + n];
        for t in 0..n {
            out[t] = out[t] + w0 * s0[t] + w1 * s1[t] + w2 * s2[t] + w3 * s3[t];
        }
        offset += 4;
    }
    for &w in taps.remainder() {
        let s = &signal[offset..offset + n];
        for (o, &x) in out.iter_mut().zip(s) {
            *o += w * x;
        }
        offset += 1;
    }
}

/// Copies `row` into `dst` surrounded by `left` and `right` zeros.
#[inline]
pub(crate) fn pad_into<S: Scalar>(dst: &mut [S], row: &[S], left: usize) {
    dst.iter_mut().for_each(|v| *v = S::zero());
    dst[left..left + row.len()].copy_from_slice(row);
}

/// Sum in a fixed sequential order.
#[inline]
pub(crate) fn sum<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, &v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(out_len: usize, signal: &[f64], kernel: &[f64]) -> Vec<f64> {
        (0..out_len)
            .map(|j| kernel.iter().enumerate().map(|(i, w)| w * signal[j + i]).sum())
            .collect()
    }

    #[test]
    fn matches_brute_force_for_all_tap_remainders() {
        for k in 1..=9 {
            let n = 13;
            let signal: Vec<f64> = (0..n + k - 1).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
            let kernel: Vec<f64> = (0..k).map(|i| 0.5 - i as f64 * 0.25).collect();
            let mut out = vec![1.0; n];
            correlate_accumulate(&mut out, &signal, &kernel);
            let expected: Vec<f64> = brute(n, &signal, &kernel).iter().map(|v| v + 1.0).collect();
            for (a, b) in out.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn padding_places_row_at_offset() {
        let mut dst = [9.0f32; 6];
        pad_into(&mut dst, &[1.0, 2.0, 3.0], 1);
        assert_eq!(dst, [0.0, 1.0, 2.0, 3.0, 0.0, 0.0]);
    }
}
