use crate::error::{Error, Result};

use super::document::{failure_summary, universe_checks};
use super::{Party, QuartetNames, QuartetPair};

/// All settings each party's model can respond to, plus the positions of the
/// two experimental settings per party. The universe may be larger than the
/// quartet: a model can define responses to settings no experiment uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingUniverse {
    alice: Vec<String>,
    bob: Vec<String>,
    quartet_alice: [usize; 2],
    quartet_bob: [usize; 2],
}

impl SettingUniverse {
    pub fn new(
        alice: Vec<String>,
        bob: Vec<String>,
        quartet_alice: [&str; 2],
        quartet_bob: [&str; 2],
    ) -> Result<Self> {
        let names = QuartetNames {
            a1: quartet_alice[0].to_string(),
            a2: quartet_alice[1].to_string(),
            b1: quartet_bob[0].to_string(),
            b2: quartet_bob[1].to_string(),
        };
        Self::from_names(alice, bob, &names)
    }

    pub(crate) fn from_names(alice: Vec<String>, bob: Vec<String>, q: &QuartetNames) -> Result<Self> {
        let checks = universe_checks(&alice, &bob, q);
        if let Some(msg) = failure_summary(&checks) {
            return Err(Error::InvalidUniverse(msg));
        }
        let find = |list: &[String], name: &str| list.iter().position(|s| s == name).unwrap();
        Ok(SettingUniverse {
            quartet_alice: [find(&alice, &q.a1), find(&alice, &q.a2)],
            quartet_bob: [find(&bob, &q.b1), find(&bob, &q.b2)],
            alice,
            bob,
        })
    }

    /// Alice `{a1, a2}`, Bob `{b1, b2}`; the universe equals the quartet.
    pub fn standard() -> Self {
        Self::new(
            vec!["a1".into(), "a2".into()],
            vec!["b1".into(), "b2".into()],
            ["a1", "a2"],
            ["b1", "b2"],
        )
        .expect("standard universe is valid")
    }

    /// Standard quartet plus `extra` unused settings per party (`a3`, `b3`, ...).
    pub fn with_extra_settings(extra: usize) -> Self {
        let alice = (1..=2 + extra).map(|i| format!("a{i}")).collect();
        let bob = (1..=2 + extra).map(|i| format!("b{i}")).collect();
        Self::new(alice, bob, ["a1", "a2"], ["b1", "b2"]).expect("generated universe is valid")
    }

    pub fn alice_settings(&self) -> &[String] {
        &self.alice
    }

    pub fn bob_settings(&self) -> &[String] {
        &self.bob
    }

    pub fn quartet_names(&self) -> QuartetNames {
        QuartetNames {
            a1: self.alice[self.quartet_alice[0]].clone(),
            a2: self.alice[self.quartet_alice[1]].clone(),
            b1: self.bob[self.quartet_bob[0]].clone(),
            b2: self.bob[self.quartet_bob[1]].clone(),
        }
    }

    pub fn alice_index(&self, name: &str) -> Result<usize> {
        self.alice
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSetting { party: Party::Alice, name: name.to_string() })
    }

    pub fn bob_index(&self, name: &str) -> Result<usize> {
        self.bob
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSetting { party: Party::Bob, name: name.to_string() })
    }

    /// Table column indices `(alice, bob)` of a quartet pair.
    pub fn pair_indices(&self, pair: QuartetPair) -> (usize, usize) {
        (self.quartet_alice[pair.alice_role()], self.quartet_bob[pair.bob_role()])
    }

    pub fn pair_names(&self, pair: QuartetPair) -> (&str, &str) {
        let (a, b) = self.pair_indices(pair);
        (&self.alice[a], &self.bob[b])
    }

    /// Resolve named settings to a quartet pair. Settings that exist in the
    /// universe but are not experimental are rejected.
    pub fn pair_of(&self, alice: &str, bob: &str) -> Result<QuartetPair> {
        let a = self.alice_index(alice)?;
        let b = self.bob_index(bob)?;
        let ra = self.quartet_alice.iter().position(|&i| i == a);
        let rb = self.quartet_bob.iter().position(|&i| i == b);
        match (ra, rb) {
            (Some(ra), Some(rb)) => Ok(QuartetPair::from_roles(ra, rb).unwrap()),
            _ => Err(Error::PairOutsideQuartet { alice: alice.to_string(), bob: bob.to_string() }),
        }
    }
}
