//! Reproducible parallel random streams and mean/standard-error accumulators.
//!
//! Worker `k` of a run seeded with `seed` draws from ChaCha8 keyed by
//! `ChaCha8Rng::seed_from_u64(seed)` (PCG32 key expansion, as documented by
//! `rand_core`) with its stream id set to `k`. ChaCha output is defined
//! bit-for-bit by the algorithm, so results depend only on
//! `(seed, sample count, worker count)`, never on the platform or on thread
//! scheduling: each worker owns a contiguous share of the samples and shares
//! are merged in worker order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample counts per worker: the first `n % workers` get one extra.
pub fn split(n: usize, workers: usize) -> Vec<usize> {
    let workers = workers.max(1);
    (0..workers)
        .map(|k| n / workers + usize::from(k < n % workers))
        .collect()
}

/// Runs `job(rng, share)` on every worker and returns results in worker order.
pub fn run_streams<T, F>(seed: u64, n: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    split(n, workers)
        .into_par_iter()
        .enumerate()
        .map(|(k, share)| {
            let mut rng = stream_rng(seed, k as u64);
            job(&mut rng, share)
        })
        .collect()
}

/// Running sums for the sample mean and standard error of several
/// quantities observed together.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAccumulator {
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MeanAccumulator {
    pub fn new(width: usize) -> Self {
        MeanAccumulator {
            count: 0,
            sum: vec![0.0; width],
            sum_sq: vec![0.0; width],
        }
    }

    #[inline]
    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.sum.len());
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn merge(mut self, other: &MeanAccumulator) -> Self {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of each mean (unbiased variance); infinite below two samples.
    pub fn std_errors(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![f64::INFINITY; self.sum.len()];
        }
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let mean = s / n;
                let var = ((q - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

/// Merges per-worker accumulators in worker order.
pub fn merge_all(parts: Vec<MeanAccumulator>, width: usize) -> MeanAccumulator {
    parts
        .iter()
        .fold(MeanAccumulator::new(width), |acc, p| acc.merge(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn split_covers_all_samples() {
        assert_eq!(split(10, 3), vec![4, 3, 3]);
        assert_eq!(split(2, 4), vec![1, 1, 0, 0]);
        assert_eq!(split(7, 0), vec![7]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, workers| {
            run_streams(seed, 8, workers, |rng, share| {
                (0..share).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
            })
        };
        assert_eq!(draw(5, 2), draw(5, 2));
        let parts = draw(5, 2);
        assert_ne!(parts[0], parts[1]);
        assert_ne!(draw(5, 2), draw(6, 2));
    }

    #[test]
    fn accumulator_matches_direct_formula() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let mut acc = MeanAccumulator::new(1);
        for x in xs {
            acc.push(&[x]);
        }
        let mean = 3.5;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 3.0;
        assert!((acc.means()[0] - mean).abs() < 1e-15);
        assert!((acc.std_errors()[0] - (var / 4.0).sqrt()).abs() < 1e-14);
    }
}
