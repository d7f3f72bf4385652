//! Execution modes and the shard/stream discipline used by every Monte Carlo
//! estimator.
//!
//! A run with `samples` draws and `shards` shards gives shard `s` the
//! contiguous sample block `[s * samples / shards, (s + 1) * samples / shards)`
//! and the random stream
//!
//! ```text
//! ChaCha8Rng::seed_from_u64(seed) with set_stream(s)
//! ```
//!
//! ChaCha is counter based: streams for different `s` never overlap, so the
//! shard count can change without correlating streams. Shard results are
//! merged left to right in shard order, which makes the output depend only
//! on `(seed, shards)` and not on the thread pool.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats::Moments;
use crate::Result;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is enabled and
    /// falls back to sequential execution otherwise.
    #[default]
    Parallel,
}

/// Sample budget and stream layout of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub shards: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig {
            samples,
            seed,
            shards: 16,
            execution: Execution::Parallel,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Shard count actually used: at least one, at most one per sample.
    pub fn effective_shards(&self) -> usize {
        self.shards.clamp(1, self.samples.max(1))
    }

    pub fn shard_len(&self, shard: usize) -> usize {
        let k = self.effective_shards();
        (shard + 1) * self.samples / k - shard * self.samples / k
    }

    pub fn shard_rng(&self, shard: usize) -> ChaCha8Rng {
        stream_rng(self.seed, shard as u64)
    }
}

/// The random stream `stream` of master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Evaluates `f(0..count)` and returns the results in index order.
pub fn map_indexed<T, F>(count: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Runs a sharded ensemble. `init` builds per-shard scratch state and
/// `draw` produces one observation vector per sample.
pub fn ensemble<const K: usize, S, I, D>(cfg: &McConfig, init: I, draw: D) -> Moments<K>
where
    I: Fn() -> S + Sync + Send,
    D: Fn(&mut S, &mut ChaCha8Rng) -> [f64; K] + Sync + Send,
{
    let parts = map_indexed(cfg.effective_shards(), cfg.execution, |shard| {
        let mut rng = cfg.shard_rng(shard);
        let mut state = init();
        let mut acc = Moments::new();
        for _ in 0..cfg.shard_len(shard) {
            acc.push(&draw(&mut state, &mut rng));
        }
        acc
    });
    parts.into_iter().fold(Moments::new(), |mut acc, part| {
        acc.merge(&part);
        acc
    })
}

/// Like [`ensemble`], for draws that can fail. The first error in shard
/// order is returned.
pub fn try_ensemble<const K: usize, S, I, D>(cfg: &McConfig, init: I, draw: D) -> Result<Moments<K>>
where
    I: Fn() -> S + Sync + Send,
    D: Fn(&mut S, &mut ChaCha8Rng) -> Result<[f64; K]> + Sync + Send,
{
    let parts = map_indexed(cfg.effective_shards(), cfg.execution, |shard| {
        let mut rng = cfg.shard_rng(shard);
        let mut state = init();
        let mut acc = Moments::new();
        for _ in 0..cfg.shard_len(shard) {
            acc.push(&draw(&mut state, &mut rng)?);
        }
        Ok(acc)
    });
    let mut total = Moments::new();
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shard_lengths_cover_samples() {
        for (samples, shards) in [(10, 3), (7, 16), (100_000, 16), (1, 1), (0, 4)] {
            let cfg = McConfig::new(samples, 1).with_shards(shards);
            let total: usize = (0..cfg.effective_shards()).map(|s| cfg.shard_len(s)).sum();
            assert_eq!(total, samples);
        }
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream_rng(9, 0).random();
        let b: u64 = stream_rng(9, 1).random();
        let c: u64 = stream_rng(9, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn ensemble_is_independent_of_execution_mode() {
        let cfg = McConfig::new(5_000, 3).with_shards(7);
        let draw = |_: &mut (), rng: &mut ChaCha8Rng| [rng.random::<f64>()];
        let par = ensemble(&cfg, || (), draw);
        let seq = ensemble(&cfg.with_execution(Execution::Sequential), || (), draw);
        assert_eq!(par.mean()[0].to_bits(), seq.mean()[0].to_bits());
        assert_eq!(par.count(), 5_000);
    }
}
