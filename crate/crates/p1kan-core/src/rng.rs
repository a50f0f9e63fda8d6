//! Seedable random streams.
//!
//! The generator is PCG-XSL-RR 128/64 (O'Neill's permuted congruential
//! generator with a 128-bit LCG state and 64-bit output), as provided by
//! `rand_pcg::Pcg64`. A seed and a stream id fully determine the sequence on
//! every platform. Unit uniforms take the top 53 bits of each output, so they
//! are exact multiples of 2^-53 in `[0, 1)`.

use alloc::vec::Vec;
use rand_core::RngCore;
use rand_pcg::Pcg64;

use crate::domain::HyperRectangle;
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    stream: u64,
    inner: Pcg64,
}

/// Stream 0 for `seed`.
pub fn seed_rng(seed: u64) -> RngState {
    RngState::with_stream(seed, 0)
}

impl RngState {
    /// An independent stream derived from the same seed. Different stream ids
    /// select different LCG increments.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RngState {
            seed,
            stream,
            inner: Pcg64::new(u128::from(seed), u128::from(stream)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; exactly `lo` when `lo == hi`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// `n` points uniform on `bounds`, one per row.
pub fn sample_uniform_batch(
    rng: &mut RngState,
    n: usize,
    bounds: &HyperRectangle,
) -> Result<Matrix> {
    // re-validate: callers may hand us a box assembled from raw parts
    let bounds = HyperRectangle::new(bounds.lower().to_vec(), bounds.upper().to_vec())?;
    let d = bounds.dim();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for (&lo, &hi) in bounds.lower().iter().zip(bounds.upper()) {
            data.push(rng.uniform(lo, hi));
        }
    }
    Matrix::from_vec(n, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn first_doubles(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = seed_rng(seed);
        (0..n).map(|_| rng.next_f64()).collect()
    }

    #[test]
    fn same_seed_same_stream() {
        assert_eq!(first_doubles(42, 1000), first_doubles(42, 1000));
    }

    #[test]
    fn different_seeds_differ() {
        let a = first_doubles(1, 100);
        let b = first_doubles(2, 100);
        assert!(a.iter().zip(&b).any(|(x, y)| x != y));
    }

    #[test]
    fn zero_seed_is_usable() {
        let xs = first_doubles(0, 1000);
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn streams_are_distinct() {
        let mut a = RngState::with_stream(9, 1);
        let mut b = RngState::with_stream(9, 2);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn batch_in_unit_square() {
        let mut rng = seed_rng(3);
        let x = sample_uniform_batch(&mut rng, 1000, &HyperRectangle::unit(2)).unwrap();
        assert_eq!((x.rows(), x.cols()), (1000, 2));
        assert!(x.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn degenerate_box_repeats_its_point() {
        let mut rng = seed_rng(3);
        let b = HyperRectangle::new(vec![0.5], vec![0.5]).unwrap();
        let x = sample_uniform_batch(&mut rng, 50, &b).unwrap();
        assert!(x.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn mean_of_large_sample() {
        // sd of the mean is sqrt(1/12)/sqrt(1e5) ~ 9.1e-4, so 0.005 is > 5 sd
        let mut rng = seed_rng(11);
        let x = sample_uniform_batch(&mut rng, 100_000, &HyperRectangle::unit(1)).unwrap();
        let mean = x.as_slice().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn affine_map_onto_box() {
        let b = HyperRectangle::new(vec![-2.0, 10.0], vec![2.0, 10.5]).unwrap();
        let mut rng = seed_rng(5);
        let x = sample_uniform_batch(&mut rng, 500, &b).unwrap();
        assert!(x.iter_rows().all(|r| b.contains(r, 0.0)));
    }
}
