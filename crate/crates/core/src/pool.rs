//! Seeded pools of random local models, selection of trials whose model hits
//! a target correlation, and stitching of per-pair models.
//!
//! Stitching picks a model *after* both settings are known. The result
//! reproduces any four target correlations, including the quantum ones, but
//! it is not a local model and is deliberately not an [`LhvModel`].

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lhv::{chsh_from, HiddenSpace, LhvModel, Quartet, QuartetPair, ResponseTable, SettingUniverse};
use crate::rng::{mix_seed, rng_from_seed, tagged_seed};

/// Default for `select_matching_trials`.
pub const DEFAULT_MATCH_TOL: f64 = 0.01;

/// Random model: weights are normalized uniform variates on `(0, 1]`, table
/// entries are independent fair signs.
pub fn random_model(seed: u64, space_size: usize, universe: &Arc<SettingUniverse>) -> Result<LhvModel> {
    if space_size < 1 {
        return Err(Error::SpaceSize(space_size));
    }
    let mut rng = rng_from_seed(seed);
    let raw: Vec<f64> = (0..space_size).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw[..space_size - 1].iter().map(|u| u / total).collect();
    // Closing the sum with 1 - (rest) makes the in-order weight sum exactly 1.
    let rest: f64 = weights.iter().sum();
    weights.push((1.0 - rest).max(0.0));
    let alice = ResponseTable::from_fn(space_size, universe.alice_settings().len(), |_, _| rng.gen());
    let bob = ResponseTable::from_fn(space_size, universe.bob_settings().len(), |_, _| rng.gen());
    LhvModel::new(HiddenSpace::with_weights(weights)?, universe.clone(), alice, bob)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    /// 1-based trial number `n`.
    pub trial_index: usize,
    pub pair: QuartetPair,
    /// Seed that reproduces `model` through [`random_model`].
    pub seed: u64,
    pub model: LhvModel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Explicit(Vec<QuartetPair>),
    UniformRandom,
}

/// Pair drawn for trial `n` under a uniform-random schedule.
pub fn uniform_pair(master_seed: u64, n: u64) -> QuartetPair {
    let mut rng = rng_from_seed(mix_seed(tagged_seed(master_seed, "schedule"), n));
    QuartetPair::ALL[rng.gen_range(0..4)]
}

/// Draw `n_trials` entries; trial `n` gets its own model from substream `n`.
pub fn draw_pool(
    seed: u64,
    n_trials: usize,
    universe: &Arc<SettingUniverse>,
    space_size: usize,
    schedule: &Schedule,
) -> Result<Vec<PoolEntry>> {
    if n_trials < 1 {
        return Err(Error::ZeroCount);
    }
    if space_size < 1 {
        return Err(Error::SpaceSize(space_size));
    }
    if let Schedule::Explicit(pairs) = schedule {
        if pairs.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if pairs.len() != n_trials {
            return Err(Error::ScheduleLength { expected: n_trials, got: pairs.len() });
        }
    }
    (1..=n_trials)
        .into_par_iter()
        .map(|n| {
            let pair = match schedule {
                Schedule::Explicit(pairs) => pairs[n - 1],
                Schedule::UniformRandom => uniform_pair(seed, n as u64),
            };
            let model_seed = mix_seed(seed, n as u64);
            Ok(PoolEntry {
                trial_index: n,
                pair,
                seed: model_seed,
                model: random_model(model_seed, space_size, universe)?,
            })
        })
        .collect()
}

/// Target correlation per quartet pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumTargets {
    pub per_pair: Quartet<f64>,
}

impl QuantumTargets {
    pub fn new(per_pair: Quartet<f64>) -> Result<Self> {
        for (_, &c) in per_pair.iter() {
            if !(-1.0..=1.0).contains(&c) {
                return Err(Error::TargetOutOfRange(c));
            }
        }
        Ok(QuantumTargets { per_pair })
    }

    /// Singlet correlations at the standard CHSH angles: `+1/sqrt 2` on
    /// `(1_A, 1_B)`, `-1/sqrt 2` on the rest.
    pub fn quantum() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        QuantumTargets { per_pair: Quartet { a1b1: c, a1b2: -c, a2b1: -c, a2b2: -c } }
    }

    /// `(+1, -1, -1, -1)`: the algebraic maximum `S = 4`.
    pub fn extremal() -> Self {
        QuantumTargets { per_pair: Quartet { a1b1: 1.0, a1b2: -1.0, a2b1: -1.0, a2b2: -1.0 } }
    }

    pub fn get(&self, pair: QuartetPair) -> f64 {
        self.per_pair[pair]
    }

    /// CHSH value the four targets would give if a single model met them all.
    pub fn chsh(&self) -> f64 {
        chsh_from(&self.per_pair)
    }
}

impl Default for QuantumTargets {
    fn default() -> Self {
        Self::quantum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub matches: BTreeMap<QuartetPair, usize>,
    pub missing: Vec<QuartetPair>,
}

impl Selection {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// Stitch the selected models. Fails on a partial selection.
    pub fn stitch_from(&self, pool: &[PoolEntry]) -> Result<StitchedModel> {
        if !self.is_complete() {
            return Err(Error::MissingPairs(self.missing.clone()));
        }
        let per_pair = self
            .matches
            .iter()
            .map(|(&pair, &n)| {
                let entry = pool.iter().find(|e| e.trial_index == n).ok_or(Error::EmptyPool)?;
                Ok((pair, entry.model.clone()))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        stitch(per_pair)
    }
}

/// For each pair, the earliest trial scheduled on that pair whose own model
/// reproduces the pair's target within `tol`.
pub fn select_matching_trials(pool: &[PoolEntry], targets: &QuantumTargets, tol: f64) -> Result<Selection> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Tolerance(tol));
    }
    let mut matches = BTreeMap::new();
    let mut entries: Vec<&PoolEntry> = pool.iter().collect();
    entries.sort_by_key(|e| e.trial_index);
    for e in entries {
        if matches.contains_key(&e.pair) {
            continue;
        }
        if (e.model.pair_correlation(e.pair) - targets.get(e.pair)).abs() <= tol {
            matches.insert(e.pair, e.trial_index);
        }
        if matches.len() == 4 {
            break;
        }
    }
    let missing = QuartetPair::ALL.into_iter().filter(|p| !matches.contains_key(p)).collect();
    Ok(Selection { matches, missing })
}

/// Whether one model reproduces all four targets at once.
pub fn matches_all_targets(model: &LhvModel, targets: &QuantumTargets, tol: f64) -> bool {
    let e = model.quartet_correlations();
    QuartetPair::ALL.into_iter().all(|p| (e[p] - targets.get(p)).abs() <= tol)
}

/// Trial indices of pool models that match all four targets simultaneously.
pub fn full_target_matches(pool: &[PoolEntry], targets: &QuantumTargets, tol: f64) -> Vec<usize> {
    pool.par_iter()
        .filter(|e| matches_all_targets(&e.model, targets, tol))
        .map(|e| e.trial_index)
        .collect()
}

/// Two-point model with weights `(p, 1 - p)`, `p = (1 + c) / 2`, whose
/// correlation at `pair` is exactly `c`. Alice answers +1 everywhere; Bob
/// answers +1 everywhere except -1 at the pair's Bob setting on the second
/// point.
pub fn construct_target_model(pair: QuartetPair, c: f64, universe: &Arc<SettingUniverse>) -> Result<LhvModel> {
    if !(-1.0..=1.0).contains(&c) {
        return Err(Error::TargetOutOfRange(c));
    }
    let p = (1.0 + c) / 2.0;
    let (_, bob_col) = universe.pair_indices(pair);
    let alice = ResponseTable::constant(2, universe.alice_settings().len(), 1);
    let bob = ResponseTable::from_fn(2, universe.bob_settings().len(), |l, b| !(l == 1 && b == bob_col));
    LhvModel::new(HiddenSpace::with_weights(vec![p, 1.0 - p])?, universe.clone(), alice, bob)
}

/// Four local models, one consulted per setting pair.
///
/// Not convertible into an [`LhvModel`]: which table answers depends on both
/// parties' settings at once.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchedModel {
    per_pair: Quartet<LhvModel>,
}

pub fn stitch(mut per_pair: BTreeMap<QuartetPair, LhvModel>) -> Result<StitchedModel> {
    let missing: Vec<QuartetPair> = QuartetPair::ALL.into_iter().filter(|p| !per_pair.contains_key(p)).collect();
    if !missing.is_empty() {
        return Err(Error::MissingPairs(missing));
    }
    let per_pair = Quartet::from_fn(|p| per_pair.remove(&p).expect("checked above"));
    StitchedModel::from_quartet(per_pair)
}

impl StitchedModel {
    pub fn from_quartet(per_pair: Quartet<LhvModel>) -> Result<Self> {
        let first = per_pair.a1b1.universe();
        let shared = per_pair
            .iter()
            .all(|(_, m)| Arc::ptr_eq(m.universe(), first) || **m.universe() == **first);
        if !shared {
            return Err(Error::UniverseMismatch);
        }
        Ok(StitchedModel { per_pair })
    }

    /// Build from [`construct_target_model`] components.
    pub fn from_targets(targets: &QuantumTargets, universe: &Arc<SettingUniverse>) -> Result<Self> {
        let per_pair = Quartet::try_from_fn(|p| construct_target_model(p, targets.get(p), universe))?;
        Self::from_quartet(per_pair)
    }

    pub fn component(&self, pair: QuartetPair) -> &LhvModel {
        &self.per_pair[pair]
    }

    pub fn universe(&self) -> &Arc<SettingUniverse> {
        self.per_pair.a1b1.universe()
    }

    /// `E_{L_q}(q)` for each pair `q`.
    pub fn selected_correlations(&self) -> Quartet<f64> {
        Quartet::from_fn(|p| self.per_pair[p].pair_correlation(p))
    }
}

/// `S*` of a stitched model. No bound applies; values up to 4 are reachable.
pub fn chsh_nonlocal(stitched: &StitchedModel) -> f64 {
    chsh_from(&stitched.selected_correlations())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchComponent {
    pub pair: QuartetPair,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_index: Option<usize>,
    pub target: f64,
    /// The component's correlation at its own pair.
    pub selected_correlation: f64,
    /// All four correlations of the component on its own.
    pub own_correlations: Quartet<f64>,
    pub own_chsh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchReport {
    pub selected_correlations: Quartet<f64>,
    pub s_star: f64,
    pub components: Vec<StitchComponent>,
    pub max_component_abs_chsh: f64,
}

pub fn stitch_report(stitched: &StitchedModel, targets: &QuantumTargets, selection: Option<&Selection>) -> StitchReport {
    let components: Vec<StitchComponent> = QuartetPair::ALL
        .into_iter()
        .map(|pair| {
            let m = stitched.component(pair);
            StitchComponent {
                pair,
                trial_index: selection.and_then(|s| s.matches.get(&pair).copied()),
                target: targets.get(pair),
                selected_correlation: m.pair_correlation(pair),
                own_correlations: m.quartet_correlations(),
                own_chsh: m.chsh(),
            }
        })
        .collect();
    let max_component_abs_chsh = components.iter().map(|c| c.own_chsh.abs()).fold(0.0, f64::max);
    StitchReport {
        selected_correlations: stitched.selected_correlations(),
        s_star: chsh_nonlocal(stitched),
        components,
        max_component_abs_chsh,
    }
}

/// One line of the pool manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestLine {
    pub trial_index: usize,
    pub pair: QuartetPair,
    pub seed: u64,
    pub correlations: Quartet<f64>,
    pub chsh: f64,
}

impl From<&PoolEntry> for ManifestLine {
    fn from(e: &PoolEntry) -> Self {
        let correlations = e.model.quartet_correlations();
        ManifestLine {
            trial_index: e.trial_index,
            pair: e.pair,
            seed: e.seed,
            chsh: chsh_from(&correlations),
            correlations,
        }
    }
}

/// JSON-lines manifest, one entry per trial.
pub fn write_manifest<W: Write>(pool: &[PoolEntry], mut out: W) -> Result<()> {
    for e in pool {
        serde_json::to_writer(&mut out, &ManifestLine::from(e))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn universe() -> Arc<SettingUniverse> {
        Arc::new(SettingUniverse::standard())
    }

    #[test]
    fn random_model_is_deterministic_and_valid() {
        let u = Arc::new(SettingUniverse::with_extra_settings(2));
        let a = random_model(11, 8, &u).unwrap();
        let b = random_model(11, 8, &u).unwrap();
        assert_eq!(a.to_document().to_json(), b.to_document().to_json());
        assert!(a.validate().passed());
        assert_ne!(a, random_model(12, 8, &u).unwrap());
        assert!(matches!(random_model(1, 0, &u), Err(Error::SpaceSize(0))));
    }

    #[test]
    fn explicit_schedule_passes_through() {
        let schedule = Schedule::Explicit(QuartetPair::ALL.to_vec());
        let pool = draw_pool(5, 4, &universe(), 3, &schedule).unwrap();
        let pairs: Vec<_> = pool.iter().map(|e| e.pair).collect();
        assert_eq!(pairs, QuartetPair::ALL.to_vec());
        let idx: Vec<_> = pool.iter().map(|e| e.trial_index).collect();
        assert_eq!(idx, vec![1, 2, 3, 4]);
        assert_eq!(pool[2].model, random_model(pool[2].seed, 3, &universe()).unwrap());
    }

    #[test]
    fn schedule_errors() {
        let u = universe();
        assert!(matches!(draw_pool(1, 4, &u, 2, &Schedule::Explicit(vec![])), Err(Error::EmptySchedule)));
        assert!(matches!(
            draw_pool(1, 4, &u, 2, &Schedule::Explicit(vec![QuartetPair::A1B1])),
            Err(Error::ScheduleLength { expected: 4, got: 1 })
        ));
        assert!(matches!(draw_pool(1, 0, &u, 2, &Schedule::UniformRandom), Err(Error::ZeroCount)));
    }

    #[test]
    fn target_model_examples() {
        let u = universe();
        let m = construct_target_model(QuartetPair::A1B1, 1.0, &u).unwrap();
        assert_eq!(m.space().weights(), &[1.0, 0.0]);
        assert_eq!(m.pair_correlation(QuartetPair::A1B1), 1.0);

        let m = construct_target_model(QuartetPair::A1B1, FRAC_1_SQRT_2, &u).unwrap();
        assert!((m.space().weights()[0] - 0.853_553_390_6).abs() < 1e-10);
        assert!((m.pair_correlation(QuartetPair::A1B1) - FRAC_1_SQRT_2).abs() < 1e-15);

        let m = construct_target_model(QuartetPair::A2B2, -FRAC_1_SQRT_2, &u).unwrap();
        assert!((m.space().weights()[0] - 0.146_446_609_4).abs() < 1e-10);
        assert!((m.pair_correlation(QuartetPair::A2B2) + FRAC_1_SQRT_2).abs() < 1e-15);

        assert!(matches!(construct_target_model(QuartetPair::A1B2, 1.5, &u), Err(Error::TargetOutOfRange(_))));
        assert!(construct_target_model(QuartetPair::A1B2, f64::NAN, &u).is_err());
    }

    #[test]
    fn target_model_filler_is_plus_one() {
        let u = Arc::new(SettingUniverse::with_extra_settings(1));
        let m = construct_target_model(QuartetPair::A2B1, -0.3, &u).unwrap();
        // b2 and b3 are filler: both points answer +1, so E(a, b2) = 1.
        assert_eq!(m.correlation("a3", "b2").unwrap().value, 1.0);
        assert_eq!(m.correlation("a1", "b3").unwrap().value, 1.0);
        assert!((m.correlation("a3", "b1").unwrap().value + 0.3).abs() < 1e-15);
    }

    #[test]
    fn quantum_stitch_reaches_two_sqrt_two() {
        let s = StitchedModel::from_targets(&QuantumTargets::quantum(), &universe()).unwrap();
        assert!((chsh_nonlocal(&s) - 2.0 * SQRT_2).abs() < 1e-9);
        let report = stitch_report(&s, &QuantumTargets::quantum(), None);
        assert!(report.max_component_abs_chsh <= 2.0);
    }

    #[test]
    fn extremal_stitch_reaches_four() {
        let s = StitchedModel::from_targets(&QuantumTargets::extremal(), &universe()).unwrap();
        assert_eq!(chsh_nonlocal(&s), 4.0);
    }

    #[test]
    fn stitching_one_model_is_vacuous() {
        let m = random_model(3, 6, &universe()).unwrap();
        let map = QuartetPair::ALL.into_iter().map(|p| (p, m.clone())).collect();
        let s = stitch(map).unwrap();
        assert!((chsh_nonlocal(&s) - m.chsh()).abs() < 1e-12);
    }

    #[test]
    fn stitch_rejects_partial_or_mixed() {
        let u = universe();
        let m = random_model(3, 2, &u).unwrap();
        let mut map: BTreeMap<_, _> = [(QuartetPair::A1B1, m.clone())].into_iter().collect();
        assert!(matches!(stitch(map.clone()), Err(Error::MissingPairs(ref p)) if p.len() == 3));
        let other = random_model(4, 2, &Arc::new(SettingUniverse::with_extra_settings(1))).unwrap();
        map.insert(QuartetPair::A1B2, m.clone());
        map.insert(QuartetPair::A2B1, m);
        map.insert(QuartetPair::A2B2, other);
        assert!(matches!(stitch(map), Err(Error::UniverseMismatch)));
    }

    #[test]
    fn planted_match_is_found() {
        let u = universe();
        let mut pool = draw_pool(8, 10, &u, 4, &Schedule::UniformRandom).unwrap();
        pool[6].pair = QuartetPair::A1B1;
        pool[6].model = construct_target_model(QuartetPair::A1B1, FRAC_1_SQRT_2, &u).unwrap();
        // Clear any earlier accidental a1b1 matches.
        for e in pool.iter_mut().take(6) {
            if e.pair == QuartetPair::A1B1 {
                e.pair = QuartetPair::A2B2;
            }
        }
        let sel = select_matching_trials(&pool, &QuantumTargets::quantum(), 1e-9).unwrap();
        assert_eq!(sel.matches.get(&QuartetPair::A1B1), Some(&7));
    }

    #[test]
    fn wide_tolerance_picks_earliest_occurrence() {
        let pool = draw_pool(21, 40, &universe(), 4, &Schedule::UniformRandom).unwrap();
        let sel = select_matching_trials(&pool, &QuantumTargets::quantum(), 2.0).unwrap();
        for pair in QuartetPair::ALL {
            let first = pool.iter().find(|e| e.pair == pair).map(|e| e.trial_index);
            assert_eq!(sel.matches.get(&pair).copied(), first);
        }
        assert!(select_matching_trials(&pool, &QuantumTargets::quantum(), 0.0).is_err());
    }

    #[test]
    fn manifest_has_one_line_per_trial() {
        let pool = draw_pool(2, 5, &universe(), 3, &Schedule::UniformRandom).unwrap();
        let mut buf = Vec::new();
        write_manifest(&pool, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        for key in ["trial_index", "pair", "seed", "correlations", "chsh"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn targets_reject_out_of_range() {
        let mut q = QuantumTargets::quantum().per_pair;
        q.a2b1 = -1.01;
        assert!(QuantumTargets::new(q).is_err());
        assert!((QuantumTargets::quantum().chsh() - 2.0 * SQRT_2).abs() < 1e-15);
    }
}
