//! Local hidden variable models over finite hidden-variable spaces.
//!
//! A model is a hidden space (points with probability weights), a setting
//! universe for each party with a designated quartet of experimental settings,
//! and two response tables mapping `(point, setting)` to an outcome in
//! `{-1, +1}`. Alice's table never sees Bob's setting and vice versa; that
//! separation is the locality structure every bound in this crate rests on.

mod document;
mod model;
mod product;
mod space;
mod universe;

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

pub use document::{validate_model, Check, ModelDocument, QuartetNames, ValidationReport};
pub use model::{
    chsh_from, CorrelationReport, FactorizationReport, IntegrandValue, LhvModel,
    PairFactorization, ResponseTable,
};
pub use product::ProductLhvModel;
pub use space::{HiddenSpace, NORMALIZATION_TOL};
pub use universe::SettingUniverse;

/// Slack on the `|S| <= 2` postcondition of [`LhvModel::chsh`].
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Alice => f.write_str("alice"),
            Party::Bob => f.write_str("bob"),
        }
    }
}

/// One of the four experimental setting pairs, identified by quartet role
/// rather than by setting name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuartetPair {
    #[serde(rename = "a1b1")]
    A1B1,
    #[serde(rename = "a1b2")]
    A1B2,
    #[serde(rename = "a2b1")]
    A2B1,
    #[serde(rename = "a2b2")]
    A2B2,
}

impl QuartetPair {
    pub const ALL: [QuartetPair; 4] = [
        QuartetPair::A1B1,
        QuartetPair::A1B2,
        QuartetPair::A2B1,
        QuartetPair::A2B2,
    ];

    pub fn from_roles(alice_role: usize, bob_role: usize) -> Option<Self> {
        match (alice_role, bob_role) {
            (0, 0) => Some(QuartetPair::A1B1),
            (0, 1) => Some(QuartetPair::A1B2),
            (1, 0) => Some(QuartetPair::A2B1),
            (1, 1) => Some(QuartetPair::A2B2),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// 0 for `1_A`, 1 for `2_A`.
    pub fn alice_role(self) -> usize {
        self.index() / 2
    }

    /// 0 for `1_B`, 1 for `2_B`.
    pub fn bob_role(self) -> usize {
        self.index() % 2
    }

    /// Coefficient of this pair's correlation in `S`: `+1` for `(1_A, 1_B)`,
    /// `-1` for the other three.
    pub fn sign(self) -> i32 {
        if self == QuartetPair::A1B1 {
            1
        } else {
            -1
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QuartetPair::A1B1 => "a1b1",
            QuartetPair::A1B2 => "a1b2",
            QuartetPair::A2B1 => "a2b1",
            QuartetPair::A2B2 => "a2b2",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label() == label)
    }
}

impl fmt::Display for QuartetPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub(crate) fn pair_list(pairs: &[QuartetPair]) -> String {
    pairs
        .iter()
        .map(|p| p.label())
        .collect::<Vec<_>>()
        .join(", ")
}

/// A value for each of the four quartet pairs, indexable by [`QuartetPair`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quartet<T> {
    pub a1b1: T,
    pub a1b2: T,
    pub a2b1: T,
    pub a2b2: T,
}

impl<T> Quartet<T> {
    pub fn from_fn(mut f: impl FnMut(QuartetPair) -> T) -> Self {
        Quartet {
            a1b1: f(QuartetPair::A1B1),
            a1b2: f(QuartetPair::A1B2),
            a2b1: f(QuartetPair::A2B1),
            a2b2: f(QuartetPair::A2B2),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(QuartetPair) -> Result<T, E>) -> Result<Self, E> {
        Ok(Quartet {
            a1b1: f(QuartetPair::A1B1)?,
            a1b2: f(QuartetPair::A1B2)?,
            a2b1: f(QuartetPair::A2B1)?,
            a2b2: f(QuartetPair::A2B2)?,
        })
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Quartet<U> {
        Quartet::from_fn(|p| f(&self[p]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (QuartetPair, &T)> {
        QuartetPair::ALL.into_iter().map(move |p| (p, &self[p]))
    }
}

impl<T> Index<QuartetPair> for Quartet<T> {
    type Output = T;

    fn index(&self, pair: QuartetPair) -> &T {
        match pair {
            QuartetPair::A1B1 => &self.a1b1,
            QuartetPair::A1B2 => &self.a1b2,
            QuartetPair::A2B1 => &self.a2b1,
            QuartetPair::A2B2 => &self.a2b2,
        }
    }
}

impl<T> IndexMut<QuartetPair> for Quartet<T> {
    fn index_mut(&mut self, pair: QuartetPair) -> &mut T {
        match pair {
            QuartetPair::A1B1 => &mut self.a1b1,
            QuartetPair::A1B2 => &mut self.a1b2,
            QuartetPair::A2B1 => &mut self.a2b1,
            QuartetPair::A2B2 => &mut self.a2b2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_round_trip() {
        for pair in QuartetPair::ALL {
            assert_eq!(QuartetPair::from_roles(pair.alice_role(), pair.bob_role()), Some(pair));
            assert_eq!(QuartetPair::parse(pair.label()), Some(pair));
        }
        assert_eq!(QuartetPair::from_roles(2, 0), None);
    }

    #[test]
    fn sign_pattern_is_plus_minus_minus_minus() {
        let signs: Vec<i32> = QuartetPair::ALL.iter().map(|p| p.sign()).collect();
        assert_eq!(signs, vec![1, -1, -1, -1]);
    }

    #[test]
    fn pair_serializes_as_label() {
        let json = serde_json::to_string(&QuartetPair::A2B1).unwrap();
        assert_eq!(json, "\"a2b1\"");
    }
}
