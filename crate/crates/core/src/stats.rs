//! Document-length statistics in whitespace tokens.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub count: usize,
    pub mean: f64,
    /// Mean of the two middle values for even counts.
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: u64,
    pub max: u64,
    pub total: u64,
}

/// Collects per-document token counts; shards can be merged in order.
#[derive(Debug, Clone, Default)]
pub struct LengthAccumulator {
    counts: Vec<u64>,
}

impl LengthAccumulator {
    pub fn push(&mut self, tokens: u64) {
        self.counts.push(tokens);
    }

    pub fn merge(&mut self, other: LengthAccumulator) {
        self.counts.extend(other.counts);
    }

    pub fn finish(mut self) -> Result<LengthStats> {
        let n = self.counts.len();
        if n == 0 {
            return Err(Error::EmptyCorpus);
        }
        let total: u64 = self.counts.iter().sum();
        let mean = total as f64 / n as f64;
        let var = self.counts.iter().map(|&c| {
            let d = c as f64 - mean;
            d * d
        }).sum::<f64>() / n as f64;
        self.counts.sort_unstable();
        let median = if n % 2 == 1 {
            self.counts[n / 2] as f64
        } else {
            (self.counts[n / 2 - 1] as f64 + self.counts[n / 2] as f64) / 2.0
        };
        Ok(LengthStats {
            count: n,
            mean,
            median,
            std: libm::sqrt(var),
            min: self.counts[0],
            max: self.counts[n - 1],
            total,
        })
    }
}

impl FromIterator<u64> for LengthAccumulator {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        Self { counts: iter.into_iter().collect() }
    }
}

pub fn length_stats<I: IntoIterator<Item = u64>>(counts: I) -> Result<LengthStats> {
    counts.into_iter().collect::<LengthAccumulator>().finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed() {
        let s = length_stats([1, 2, 3]).unwrap();
        assert_eq!((s.mean, s.median), (2.0, 2.0));
        assert!((s.std - libm::sqrt(2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(length_stats([1, 2, 3, 4]).unwrap().median, 2.5);
        assert_eq!(length_stats([7]).unwrap().std, 0.0);
        assert_eq!(length_stats([]).unwrap_err(), Error::EmptyCorpus);
    }

    proptest! {
        #[test]
        fn matches_single_pass(counts in proptest::collection::vec(0u64..100_000, 1..200)) {
            let s = length_stats(counts.iter().copied()).unwrap();
            // naive single-pass sums
            let (mut sum, mut sq) = (0.0f64, 0.0f64);
            for &c in &counts { sum += c as f64; sq += (c as f64) * (c as f64); }
            let n = counts.len() as f64;
            let mean = sum / n;
            let var = (sq / n - mean * mean).max(0.0);
            prop_assert!((s.mean - mean).abs() <= 1e-9 * mean.max(1.0));
            prop_assert!((s.std * s.std - var).abs() <= 1e-9 * (sq / n).max(1.0));
            prop_assert!(s.median >= s.min as f64 && s.median <= s.max as f64);
        }
    }
}
