//! Finite-N event-by-event CHSH experiments.
//!
//! Each trial draws a fresh hidden point from the model's weights, independent
//! of the settings, and reads both parties' outcomes off their own tables.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::{LhvModel, Quartet, QuartetPair, SettingUniverse};
use crate::pool::{chsh_nonlocal, uniform_pair, StitchedModel};
use crate::rng::{mix_seed, rng_from_seed, tagged_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub pair: QuartetPair,
    pub a_out: i8,
    pub b_out: i8,
}

/// `n_per_pair` rounds cycling through the four pairs in quartet order.
pub fn round_robin(n_per_pair: usize) -> Vec<QuartetPair> {
    (0..4 * n_per_pair).map(|i| QuartetPair::ALL[i % 4]).collect()
}

/// `n_trials` pairs drawn uniformly, trial by trial from substreams of `seed`.
pub fn uniform_schedule(seed: u64, n_trials: usize) -> Vec<QuartetPair> {
    (1..=n_trials).map(|n| uniform_pair(seed, n as u64)).collect()
}

/// Resolve named setting pairs; anything outside the quartet is rejected.
pub fn resolve_schedule(universe: &SettingUniverse, named: &[(String, String)]) -> Result<Vec<QuartetPair>> {
    named.iter().map(|(a, b)| universe.pair_of(a, b)).collect()
}

struct PointSampler<'a> {
    model: &'a LhvModel,
    index: WeightedIndex<f64>,
}

impl<'a> PointSampler<'a> {
    fn new(model: &'a LhvModel) -> Self {
        let index = WeightedIndex::new(model.space().weights()).expect("valid models have positive mass");
        PointSampler { model, index }
    }

    #[inline]
    fn outcomes<R: Rng>(&self, pair: QuartetPair, rng: &mut R) -> (i8, i8) {
        let l = self.index.sample(rng);
        let (a, b) = self.model.universe().pair_indices(pair);
        (self.model.alice_table().get(l, a), self.model.bob_table().get(l, b))
    }
}

fn simulate<'a>(
    samplers: impl Fn(QuartetPair) -> &'a PointSampler<'a>,
    schedule: impl Iterator<Item = QuartetPair>,
    seed: u64,
    mut sink: impl FnMut(TrialRecord),
) {
    let mut rng = rng_from_seed(seed);
    for (i, pair) in schedule.enumerate() {
        let (a_out, b_out) = samplers(pair).outcomes(pair, &mut rng);
        sink(TrialRecord { n: i + 1, pair, a_out, b_out });
    }
}

pub fn run_trials(model: &LhvModel, schedule: &[QuartetPair], seed: u64) -> Result<Vec<TrialRecord>> {
    if schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let sampler = PointSampler::new(model);
    let mut records = Vec::with_capacity(schedule.len());
    simulate(|_| &sampler, schedule.iter().copied(), seed, |r| records.push(r));
    Ok(records)
}

/// Trials where each pair's outcomes come from that pair's own component.
pub fn run_stitched_trials(stitched: &StitchedModel, schedule: &[QuartetPair], seed: u64) -> Result<Vec<TrialRecord>> {
    if schedule.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let samplers = Quartet::from_fn(|p| PointSampler::new(stitched.component(p)));
    let mut records = Vec::with_capacity(schedule.len());
    simulate(|p| &samplers[p], schedule.iter().copied(), seed, |r| records.push(r));
    Ok(records)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct ProductTally {
    count: u64,
    sum: i64,
}

impl ProductTally {
    fn push(&mut self, product: i8) {
        self.count += 1;
        self.sum += i64::from(product);
    }

    fn estimate(&self) -> PairEstimate {
        let n = self.count as f64;
        let mean = self.sum as f64 / n;
        // Products are +/-1, so the sum of squares is the count.
        let stderr = if self.count > 1 {
            let var = (n * (1.0 - mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        PairEstimate { mean, stderr, count: self.count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub stderr: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalChsh {
    pub s_hat: f64,
    pub s_stderr: f64,
}

fn tally(records: &[TrialRecord]) -> Quartet<ProductTally> {
    let mut t = Quartet::<ProductTally>::default();
    for r in records {
        t[r.pair].push(r.a_out * r.b_out);
    }
    t
}

fn chsh_from_tallies(t: &Quartet<ProductTally>) -> Result<EmpiricalChsh> {
    let missing: Vec<QuartetPair> = t.iter().filter(|(_, x)| x.count == 0).map(|(p, _)| p).collect();
    if !missing.is_empty() {
        return Err(Error::MissingPairs(missing));
    }
    let est = t.map(ProductTally::estimate);
    let counts_agree = t.iter().all(|(_, x)| x.count == t.a1b1.count);
    let s_hat = if counts_agree {
        // One division, so an exact S stays exact.
        let numer: i64 = t.iter().map(|(p, x)| i64::from(p.sign()) * x.sum).sum();
        numer as f64 / t.a1b1.count as f64
    } else {
        est.iter().map(|(p, e)| f64::from(p.sign()) * e.mean).sum()
    };
    let s_stderr = est.iter().map(|(_, e)| e.stderr * e.stderr).sum::<f64>().sqrt();
    Ok(EmpiricalChsh { s_hat, s_stderr })
}

/// Per-pair mean product and standard error; pairs with no trials are absent.
pub fn empirical_correlations(records: &[TrialRecord]) -> BTreeMap<QuartetPair, PairEstimate> {
    tally(records)
        .iter()
        .filter(|(_, t)| t.count > 0)
        .map(|(p, t)| (p, t.estimate()))
        .collect()
}

/// `S` from the four empirical means; standard errors add in quadrature.
pub fn empirical_chsh(records: &[TrialRecord]) -> Result<EmpiricalChsh> {
    chsh_from_tallies(&tally(records))
}

/// Round-robin experiment with `n_per_pair` trials per pair, summarized
/// without keeping the records. Same draws as
/// `run_trials(model, &round_robin(n_per_pair), seed)`.
pub fn estimate_chsh(model: &LhvModel, n_per_pair: usize, seed: u64) -> Result<EmpiricalChsh> {
    if n_per_pair == 0 {
        return Err(Error::ZeroCount);
    }
    let sampler = PointSampler::new(model);
    let mut t = Quartet::<ProductTally>::default();
    let schedule = (0..4 * n_per_pair).map(|i| QuartetPair::ALL[i % 4]);
    simulate(|_| &sampler, schedule, seed, |r| t[r.pair].push(r.a_out * r.b_out));
    chsh_from_tallies(&t)
}

/// Seed of run `r` in a batch of repeated experiments.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    mix_seed(tagged_seed(seed, "runs"), run)
}

/// `runs` independent round-robin experiments, in run order.
pub fn estimate_runs(model: &LhvModel, n_per_pair: usize, runs: usize, seed: u64) -> Result<Vec<EmpiricalChsh>> {
    if runs == 0 {
        return Err(Error::ZeroCount);
    }
    (0..runs as u64)
        .into_par_iter()
        .map(|r| estimate_chsh(model, n_per_pair, run_seed(seed, r)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    pub pair: QuartetPair,
    pub alice: String,
    pub bob: String,
    pub exact: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub per_pair: Vec<PairComparison>,
    pub s_exact: f64,
    pub s_hat: f64,
    pub s_stderr: f64,
    pub n_trials: usize,
}

fn comparison(universe: &SettingUniverse, exact: Quartet<f64>, s_exact: f64, records: &[TrialRecord]) -> Result<EmpiricalReport> {
    let chsh = empirical_chsh(records)?;
    let est = empirical_correlations(records);
    let per_pair = QuartetPair::ALL
        .into_iter()
        .map(|pair| {
            let e = est[&pair];
            let (alice, bob) = universe.pair_names(pair);
            PairComparison {
                pair,
                alice: alice.to_string(),
                bob: bob.to_string(),
                exact: exact[pair],
                mean: e.mean,
                stderr: e.stderr,
                count: e.count,
            }
        })
        .collect();
    Ok(EmpiricalReport {
        per_pair,
        s_exact,
        s_hat: chsh.s_hat,
        s_stderr: chsh.s_stderr,
        n_trials: records.len(),
    })
}

/// Exact-versus-empirical table for records drawn from `model`.
pub fn compare(model: &LhvModel, records: &[TrialRecord]) -> Result<EmpiricalReport> {
    comparison(model.universe(), model.quartet_correlations(), model.chsh(), records)
}

pub fn compare_stitched(stitched: &StitchedModel, records: &[TrialRecord]) -> Result<EmpiricalReport> {
    comparison(stitched.universe(), stitched.selected_correlations(), chsh_nonlocal(stitched), records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationReport {
    /// Theoretical `S` of the model; never above 2 for a local model.
    pub exact_s: f64,
    pub n_per_pair: usize,
    pub runs: usize,
    pub exceed_count: usize,
    /// Fraction of runs with `|s_hat| > 2`.
    pub fraction_exceeding: f64,
    pub mean_s_hat: f64,
    pub max_s_hat: f64,
    pub min_s_hat: f64,
}

/// Repeat a finite experiment and count how often the estimate lands beyond 2
/// even though the model's own `S` cannot.
pub fn fluctuation_demo(model: &LhvModel, n_per_pair: usize, runs: usize, seed: u64) -> Result<FluctuationReport> {
    let estimates = estimate_runs(model, n_per_pair, runs, seed)?;
    let s: Vec<f64> = estimates.iter().map(|e| e.s_hat).collect();
    let exceed_count = s.iter().filter(|x| x.abs() > 2.0).count();
    Ok(FluctuationReport {
        exact_s: model.chsh(),
        n_per_pair,
        runs,
        exceed_count,
        fraction_exceeding: exceed_count as f64 / runs as f64,
        mean_s_hat: s.iter().sum::<f64>() / runs as f64,
        max_s_hat: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_s_hat: s.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// CSV trial log with header `n,pair,a_out,b_out`.
pub fn write_trial_log<W: Write>(records: &[TrialRecord], mut out: W) -> Result<()> {
    writeln!(out, "n,pair,a_out,b_out")?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.n, r.pair, r.a_out, r.b_out)?;
    }
    Ok(())
}
