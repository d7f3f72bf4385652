//! Brute-force enumeration over all `2^(2L+1)` configurations.
//!
//! Configurations are bit patterns: bit `k` set means storage index `k` has
//! spin `+1`. With the shift `Σ_A J(A)` every log-weight
//! `-E(σ) - Σ_A J(A) = -2 Σ_{A : σ_A = -1} J(A)` is `<= 0` and the all-up
//! configuration has log-weight exactly 0, so sums never overflow or
//! underflow to zero.

use serde::Serialize;

use super::{InteractionMap, Lattice, SpinConfiguration, TwoPoint};
use crate::exec::{map_indexed, Execution};
use crate::{Error, Result};

/// Default enumeration cap in sites.
pub const DEFAULT_MAX_SITES: usize = 24;

const CHUNK_BITS: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactOptions {
    pub max_sites: usize,
    pub execution: Execution,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            max_sites: DEFAULT_MAX_SITES,
            execution: Execution::Parallel,
        }
    }
}

/// A positive quantity carried in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogValue {
    pub log_value: f64,
}

impl LogValue {
    pub fn from_log(log_value: f64) -> Self {
        LogValue { log_value }
    }

    /// `exp(log_value)`; may be `inf` for very large values.
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `E(σ) = -Σ_A J(A) σ_A`.
pub fn energy(config: &SpinConfiguration, j: &InteractionMap) -> Result<f64> {
    let mut e = 0.0;
    for (a, strength) in j.iter() {
        let sign = config.product(a)?;
        e -= strength * sign as f64;
    }
    Ok(e)
}

#[derive(Clone, Debug)]
enum Compiled {
    General(Vec<(u64, f64)>),
    /// `(k, w_k, mask of the n - k low bits)`
    Pair(Vec<(u32, f64, u64)>),
}

/// Compiled energy function of an interaction on a small lattice.
#[derive(Clone, Debug)]
pub(crate) struct Enumerator {
    lattice: Lattice,
    compiled: Compiled,
    shift: f64,
    execution: Execution,
}

impl Enumerator {
    pub(crate) fn new(j: &InteractionMap, opts: ExactOptions) -> Result<Self> {
        let lattice = j.lattice();
        let n = lattice.len();
        let cap = opts.max_sites.min(40);
        if n > cap {
            return Err(Error::Capacity {
                what: "exact enumeration (sites)",
                needed: n,
                cap,
            });
        }
        let compiled = match j.as_pair_coupling() {
            Some(w) => Compiled::Pair(
                (1..=w.range())
                    .filter(|&k| k < n && w.get(k) > 0.0)
                    .map(|k| (k as u32, w.get(k), (1u64 << (n - k)) - 1))
                    .collect(),
            ),
            None => Compiled::General(
                j.iter()
                    .map(|(a, v)| Ok((lattice.product_mask(a)?, v)))
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Enumerator {
            lattice,
            compiled,
            shift: j.total_strength(),
            execution: opts.execution,
        })
    }

    fn sites(&self) -> usize {
        self.lattice.len()
    }

    #[inline]
    fn log_weight(&self, x: u64) -> f64 {
        let full = (1u64 << self.sites()) - 1;
        let mut odd = 0.0;
        match &self.compiled {
            Compiled::General(terms) => {
                let down = !x & full;
                for &(mask, v) in terms {
                    if (down & mask).count_ones() & 1 == 1 {
                        odd += v;
                    }
                }
            }
            Compiled::Pair(terms) => {
                for &(k, w, low) in terms {
                    odd += w * ((x ^ (x >> k)) & low).count_ones() as f64;
                }
            }
        }
        -2.0 * odd
    }

    /// `(Σ_x e^{lw(x)}, Σ_x e^{lw(x)} f(x))`, summed over fixed chunks in
    /// index order so the result does not depend on the execution mode.
    pub(crate) fn weighted_sums<const K: usize, F>(&self, f: F) -> (f64, [f64; K])
    where
        F: Fn(u64) -> [f64; K] + Sync + Send,
    {
        let total = 1u64 << self.sites();
        let chunk = 1u64 << CHUNK_BITS.min(self.sites() as u32);
        let chunks = (total / chunk) as usize;
        let parts = map_indexed(chunks, self.execution, |c| {
            let start = c as u64 * chunk;
            let mut z = 0.0;
            let mut acc = [0.0; K];
            for x in start..start + chunk {
                let w = self.log_weight(x).exp();
                z += w;
                let v = f(x);
                for k in 0..K {
                    acc[k] += w * v[k];
                }
            }
            (z, acc)
        });
        parts.into_iter().fold((0.0, [0.0; K]), |(z, mut acc), (pz, pa)| {
            for k in 0..K {
                acc[k] += pa[k];
            }
            (z + pz, acc)
        })
    }

    pub(crate) fn log_partition(&self) -> f64 {
        let (z, _) = self.weighted_sums::<0, _>(|_| []);
        self.shift + z.ln()
    }

    pub(crate) fn expectation_mask(&self, mask: u64) -> f64 {
        let (z, [s]) = self.weighted_sums(|x| [parity_sign(x, mask, self.sites())]);
        s / z
    }

    /// `<f>` for an arbitrary observable of the bit pattern.
    pub(crate) fn expectation_fn<F>(&self, f: F) -> f64
    where
        F: Fn(u64) -> f64 + Sync + Send,
    {
        let (z, [s]) = self.weighted_sums(|x| [f(x)]);
        s / z
    }
}

#[inline]
pub(crate) fn parity_sign(x: u64, mask: u64, sites: usize) -> f64 {
    let full = (1u64 << sites) - 1;
    if (!x & full & mask).count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `Z = Σ_σ exp(-E(σ))` by full enumeration, with the default cap.
pub fn partition_exact(j: &InteractionMap) -> Result<LogValue> {
    partition_exact_with(j, ExactOptions::default())
}

pub fn partition_exact_with(j: &InteractionMap, opts: ExactOptions) -> Result<LogValue> {
    Ok(LogValue::from_log(Enumerator::new(j, opts)?.log_partition()))
}

/// `<σ_A>` by full enumeration. Sites are multiplied with multiplicity.
pub fn expectation_exact(j: &InteractionMap, sites: &[i64]) -> Result<f64> {
    expectation_exact_with(j, sites, ExactOptions::default())
}

pub fn expectation_exact_with(j: &InteractionMap, sites: &[i64], opts: ExactOptions) -> Result<f64> {
    let mask = j.lattice().product_mask(sites)?;
    if mask == 0 {
        return Ok(1.0);
    }
    Ok(Enumerator::new(j, opts)?.expectation_mask(mask))
}

/// Normalized Gibbs probabilities of every configuration, for workloads
/// that issue many queries against one interaction.
#[derive(Clone, Debug)]
pub struct GibbsTable {
    lattice: Lattice,
    probabilities: Vec<f64>,
    log_partition: f64,
}

impl GibbsTable {
    pub fn new(j: &InteractionMap) -> Result<Self> {
        Self::with_options(j, ExactOptions::default())
    }

    pub fn with_options(j: &InteractionMap, opts: ExactOptions) -> Result<Self> {
        let e = Enumerator::new(j, opts)?;
        let total = 1usize << e.sites();
        let mut probabilities: Vec<f64> = (0..total as u64).map(|x| e.log_weight(x).exp()).collect();
        let z: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= z);
        Ok(GibbsTable {
            lattice: j.lattice(),
            probabilities,
            log_partition: e.shift + z.ln(),
        })
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn probability(&self, config: &SpinConfiguration) -> f64 {
        let bits = config
            .spins()
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &s)| if s > 0 { acc | 1 << k } else { acc });
        self.probabilities[bits as usize]
    }

    /// `<σ_A>`; sites outside the lattice are a domain error.
    pub fn expectation(&self, sites: &[i64]) -> Result<f64> {
        let mask = self.lattice.product_mask(sites)?;
        Ok(self.expectation_mask(mask))
    }

    fn expectation_mask(&self, mask: u64) -> f64 {
        if mask == 0 {
            return 1.0;
        }
        let n = self.lattice.len();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(x, p)| p * parity_sign(x as u64, mask, n))
            .sum()
    }

    pub fn expect_fn<F: Fn(&SpinConfiguration) -> f64>(&self, f: F) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(x, p)| p * f(&SpinConfiguration::from_bits(self.lattice, x as u64)))
            .sum()
    }
}

impl TwoPoint for GibbsTable {
    fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn two_point(&self, i: i64, j: i64) -> f64 {
        match self.lattice.product_mask(&[i, j]) {
            Ok(mask) => self.expectation_mask(mask),
            Err(_) => 0.0,
        }
    }
}
