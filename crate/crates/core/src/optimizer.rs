//! Independent checks on the CHSH bound: exhaustive enumeration of
//! deterministic strategies, the combined-integrand route to `S`, and a
//! parallel hunt over random local models for a violation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::{chsh_from, LhvModel, SettingUniverse};
use crate::pool::{random_model, PoolEntry};
use crate::rng::mix_seed;

/// `|S|` beyond this counts as a violation in a hunt.
pub const VIOLATION_THRESHOLD: f64 = 2.0 + 1e-9;

pub const HISTOGRAM_LO: f64 = -2.2;
pub const HISTOGRAM_HI: f64 = 2.2;
pub const HISTOGRAM_WIDTH: f64 = 0.05;
const HISTOGRAM_BUCKETS: usize = 88;

/// Outcomes of a single-point model at the four quartet settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub a1: i8,
    pub a2: i8,
    pub b1: i8,
    pub b2: i8,
}

impl DeterministicStrategy {
    /// `a1 b1 - a1 b2 - a2 b1 - a2 b2` in integer arithmetic.
    pub fn chsh(&self) -> i32 {
        let [a1, a2, b1, b2] = [self.a1, self.a2, self.b1, self.b2].map(i32::from);
        a1 * b1 - a1 * b2 - a2 * b1 - a2 * b2
    }

    pub fn to_model(&self) -> LhvModel {
        LhvModel::standard(vec![1.0], &[[self.a1, self.a2]], &[[self.b1, self.b2]])
            .expect("strategy entries are +/-1")
    }
}

/// All 16 deterministic strategies with their exact `S`.
pub fn enumerate_deterministic() -> Vec<(DeterministicStrategy, i32)> {
    let sign = |bit: u8| if bit == 0 { 1 } else { -1 };
    (0u8..16)
        .map(|m| {
            let s = DeterministicStrategy {
                a1: sign(m >> 3 & 1),
                a2: sign(m >> 2 & 1),
                b1: sign(m >> 1 & 1),
                b2: sign(m & 1),
            };
            (s, s.chsh())
        })
        .collect()
}

/// `S` as the weighted mean of the per-point integrand, bypassing the four
/// correlations.
pub fn brute_force_chsh(model: &LhvModel) -> f64 {
    model
        .integrand_values()
        .iter()
        .map(|v| v.weight * f64::from(v.value))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Default for Histogram {
    fn default() -> Self {
        Histogram {
            lo: HISTOGRAM_LO,
            hi: HISTOGRAM_HI,
            width: HISTOGRAM_WIDTH,
            counts: vec![0; HISTOGRAM_BUCKETS],
        }
    }
}

impl Histogram {
    /// Buckets are `[lo + k w, lo + (k+1) w)`. Values within
    /// [`VIOLATION_THRESHOLD`] of the bound always land in the 80 buckets
    /// covering `[-2, 2]`, so out-of-range mass equals the violation count.
    pub fn bucket(s: f64) -> usize {
        let k = ((s - HISTOGRAM_LO) * 20.0).floor();
        let k = k.clamp(0.0, (HISTOGRAM_BUCKETS - 1) as f64) as usize;
        if s.abs() <= VIOLATION_THRESHOLD {
            k.clamp(4, 83)
        } else {
            k
        }
    }

    pub fn add(&mut self, s: f64) {
        self.counts[Self::bucket(s)] += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count in buckets lying entirely outside `[-2, 2]`.
    pub fn out_of_bound(&self) -> u64 {
        self.counts[..4].iter().chain(&self.counts[84..]).sum()
    }
}

/// A model that broke the bound, with the seed that regenerates it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Falsification {
    pub model_index: u64,
    pub seed: u64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntReport {
    pub master_seed: u64,
    pub space_size: usize,
    pub n_models: u64,
    pub max_abs_s: f64,
    pub argmax_s: f64,
    pub argmax_index: u64,
    pub argmax_seed: u64,
    pub histogram: Histogram,
    pub violations: u64,
    pub falsifications: Vec<Falsification>,
}

impl HuntReport {
    fn empty(master_seed: u64, space_size: usize) -> Self {
        HuntReport {
            master_seed,
            space_size,
            n_models: 0,
            max_abs_s: f64::NEG_INFINITY,
            argmax_s: 0.0,
            argmax_index: 0,
            argmax_seed: 0,
            histogram: Histogram::default(),
            violations: 0,
            falsifications: Vec::new(),
        }
    }

    fn record(&mut self, index: u64, seed: u64, s: f64) {
        self.n_models += 1;
        self.histogram.add(s);
        let a = s.abs();
        if a > self.max_abs_s || (a == self.max_abs_s && index < self.argmax_index) {
            self.max_abs_s = a;
            self.argmax_s = s;
            self.argmax_index = index;
            self.argmax_seed = seed;
        }
        if a.is_nan() || a > VIOLATION_THRESHOLD {
            self.violations += 1;
            self.falsifications.push(Falsification { model_index: index, seed, s });
        }
    }

    /// Order-independent: max with earliest-index tie break, sums, and a
    /// falsification list sorted by index.
    fn merge(mut self, other: HuntReport) -> HuntReport {
        self.n_models += other.n_models;
        self.histogram.merge(&other.histogram);
        self.violations += other.violations;
        if other.max_abs_s > self.max_abs_s
            || (other.max_abs_s == self.max_abs_s && other.argmax_index < self.argmax_index)
        {
            self.max_abs_s = other.max_abs_s;
            self.argmax_s = other.argmax_s;
            self.argmax_index = other.argmax_index;
            self.argmax_seed = other.argmax_seed;
        }
        self.falsifications.extend(other.falsifications);
        self.falsifications.sort_by_key(|f| f.model_index);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuntConfig {
    /// Models per parallel work item.
    pub chunk_size: usize,
    /// Thread cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for HuntConfig {
    fn default() -> Self {
        HuntConfig { chunk_size: 4096, threads: None }
    }
}

/// Seed of hunt model `index` (1-based).
pub fn hunt_seed(master_seed: u64, index: u64) -> u64 {
    mix_seed(master_seed, index)
}

pub fn hunt(master_seed: u64, count: u64, space_size: usize, universe: &Arc<SettingUniverse>) -> Result<HuntReport> {
    hunt_with(master_seed, count, space_size, universe, &HuntConfig::default())
}

/// Generate `count` random models on independent substreams and tally `S`.
pub fn hunt_with(
    master_seed: u64,
    count: u64,
    space_size: usize,
    universe: &Arc<SettingUniverse>,
    config: &HuntConfig,
) -> Result<HuntReport> {
    if count < 1 {
        return Err(Error::ZeroCount);
    }
    if space_size < 1 {
        return Err(Error::SpaceSize(space_size));
    }
    let chunk = config.chunk_size.max(1) as u64;
    let n_chunks = count.div_ceil(chunk);
    let run = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut part = HuntReport::empty(master_seed, space_size);
                for index in (c * chunk + 1)..=((c + 1) * chunk).min(count) {
                    let seed = hunt_seed(master_seed, index);
                    let model = random_model(seed, space_size, universe)?;
                    part.record(index, seed, chsh_from(&model.quartet_correlations()));
                }
                Ok(part)
            })
            .try_reduce(|| HuntReport::empty(master_seed, space_size), |a, b| Ok(a.merge(b)))
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?
            .install(run),
        None => run(),
    }
}

/// Pool entry with the largest `|S|`, earliest trial on ties.
pub fn max_over_pool(pool: &[PoolEntry]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for e in pool {
        let s = e.model.chsh();
        best = match best {
            Some((n, b)) if b.abs() > s.abs() || (b.abs() == s.abs() && n < e.trial_index) => Some((n, b)),
            _ => Some((e.trial_index, s)),
        };
    }
    best.ok_or(Error::EmptyPool)
}
