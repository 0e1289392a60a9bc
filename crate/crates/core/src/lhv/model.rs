use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

use super::document::{table_checks, validate_model, ModelDocument, ValidationReport};
use super::{HiddenSpace, Quartet, QuartetPair, SettingUniverse, BOUND_SLACK};

/// Dense `point x setting` table of outcomes, every entry exactly `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseTable {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl ResponseTable {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(if f(r, c) { 1 } else { -1 });
            }
        }
        ResponseTable { rows, cols, data }
    }

    pub fn constant(rows: usize, cols: usize, value: i8) -> Self {
        assert!(value == 1 || value == -1, "outcome must be +/-1");
        ResponseTable { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let checks = table_checks("A", rows, rows.len(), cols);
        if checks.iter().any(|c| !c.passed) {
            return Err(Error::InvalidModel(ValidationReport { checks }));
        }
        Ok(ResponseTable {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().map(|&v| v as i8).collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|r| r.iter().map(|&v| i64::from(v)).collect())
            .collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, point: usize, setting: usize) -> i8 {
        self.data[point * self.cols + setting]
    }

    pub fn set(&mut self, point: usize, setting: usize, value: i8) {
        assert!(value == 1 || value == -1, "outcome must be +/-1");
        self.data[point * self.cols + setting] = value;
    }
}

/// A local hidden variable model `(A, B, Q, rho)` over a finite hidden space.
///
/// Always valid once constructed; raw input goes through [`ModelDocument`].
#[derive(Debug, Clone, PartialEq)]
pub struct LhvModel {
    space: HiddenSpace,
    universe: Arc<SettingUniverse>,
    alice: ResponseTable,
    bob: ResponseTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub alice: String,
    pub bob: String,
    pub value: f64,
}

/// Value of `A1(B1 - B2) - A2(B1 + B2)` at one hidden point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrandValue<'a> {
    pub point: &'a str,
    pub weight: f64,
    pub value: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFactorization {
    pub alice: String,
    pub bob: String,
    pub joint: f64,
    pub alice_marginal: f64,
    pub bob_marginal: f64,
    pub deviation: f64,
    pub factorized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub tol: f64,
    pub pairs: Vec<PairFactorization>,
    pub all_factorized: bool,
}

/// `S = E(1_A,1_B) - E(1_A,2_B) - E(2_A,1_B) - E(2_A,2_B)`, with no bound check.
pub fn chsh_from(e: &Quartet<f64>) -> f64 {
    e.a1b1 - e.a1b2 - e.a2b1 - e.a2b2
}

impl LhvModel {
    pub fn new(
        space: HiddenSpace,
        universe: Arc<SettingUniverse>,
        alice: ResponseTable,
        bob: ResponseTable,
    ) -> Result<Self> {
        let n = space.len();
        let shape_ok = alice.rows == n
            && bob.rows == n
            && alice.cols == universe.alice_settings().len()
            && bob.cols == universe.bob_settings().len();
        if !shape_ok {
            let mut checks = table_checks("A", &alice.to_rows(), n, universe.alice_settings().len());
            checks.extend(table_checks("B", &bob.to_rows(), n, universe.bob_settings().len()));
            return Err(Error::InvalidModel(ValidationReport { checks }));
        }
        Ok(LhvModel { space, universe, alice, bob })
    }

    /// Model on the standard universe from per-point `[A(a1), A(a2)]` and
    /// `[B(b1), B(b2)]` rows.
    pub fn standard(weights: Vec<f64>, alice: &[[i8; 2]], bob: &[[i8; 2]]) -> Result<Self> {
        let space = HiddenSpace::with_weights(weights)?;
        let to_rows = |t: &[[i8; 2]]| -> Vec<Vec<i64>> {
            t.iter().map(|r| r.iter().map(|&v| i64::from(v)).collect()).collect()
        };
        Self::new(
            space,
            Arc::new(SettingUniverse::standard()),
            ResponseTable::from_rows(&to_rows(alice))?,
            ResponseTable::from_rows(&to_rows(bob))?,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ModelDocument::from_json(text)?.into_model()
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            points: self.space.points().to_vec(),
            weights: self.space.weights().to_vec(),
            alice_settings: self.universe.alice_settings().to_vec(),
            bob_settings: self.universe.bob_settings().to_vec(),
            quartet: self.universe.quartet_names(),
            alice_table: self.alice.to_rows(),
            bob_table: self.bob.to_rows(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(&self.to_document())
    }

    pub fn space(&self) -> &HiddenSpace {
        &self.space
    }

    pub fn universe(&self) -> &Arc<SettingUniverse> {
        &self.universe
    }

    pub fn alice_table(&self) -> &ResponseTable {
        &self.alice
    }

    pub fn bob_table(&self) -> &ResponseTable {
        &self.bob
    }

    /// Same tables and universe under different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Ok(LhvModel { space: self.space.reweighted(weights)?, ..self.clone() })
    }

    /// `E(a, b) = sum over points of A(l, a) B(l, b) rho(l)` by column index.
    pub fn correlation_at(&self, alice_col: usize, bob_col: usize) -> f64 {
        self.space
            .weights()
            .iter()
            .enumerate()
            .map(|(l, w)| f64::from(self.alice.get(l, alice_col) * self.bob.get(l, bob_col)) * w)
            .sum()
    }

    pub fn correlation(&self, alice: &str, bob: &str) -> Result<CorrelationReport> {
        let a = self.universe.alice_index(alice)?;
        let b = self.universe.bob_index(bob)?;
        Ok(CorrelationReport {
            alice: alice.to_string(),
            bob: bob.to_string(),
            value: self.correlation_at(a, b),
        })
    }

    pub fn pair_correlation(&self, pair: QuartetPair) -> f64 {
        let (a, b) = self.universe.pair_indices(pair);
        self.correlation_at(a, b)
    }

    pub fn quartet_correlations(&self) -> Quartet<f64> {
        Quartet::from_fn(|p| self.pair_correlation(p))
    }

    /// CHSH value from the four quartet correlations.
    ///
    /// Panics if `|S|` exceeds 2; for a valid model that can only mean a bug.
    pub fn chsh(&self) -> f64 {
        let s = chsh_from(&self.quartet_correlations());
        let mass_slack = 2.0 * (self.space.total_weight() - 1.0).abs();
        assert!(
            s.abs() <= 2.0 + BOUND_SLACK + mass_slack,
            "CHSH bound breached by a local model: S = {s}"
        );
        s
    }

    pub fn integrand_values(&self) -> Vec<IntegrandValue<'_>> {
        let (a1, b1) = self.universe.pair_indices(QuartetPair::A1B1);
        let (a2, b2) = self.universe.pair_indices(QuartetPair::A2B2);
        self.space
            .points()
            .iter()
            .zip(self.space.weights())
            .enumerate()
            .map(|(l, (point, &weight))| {
                let [x1, x2, y1, y2] = [
                    self.alice.get(l, a1),
                    self.alice.get(l, a2),
                    self.bob.get(l, b1),
                    self.bob.get(l, b2),
                ]
                .map(i32::from);
                IntegrandValue { point, weight, value: x1 * (y1 - y2) - x2 * (y1 + y2) }
            })
            .collect()
    }

    pub fn alice_marginal(&self, col: usize) -> f64 {
        self.space
            .weights()
            .iter()
            .enumerate()
            .map(|(l, w)| f64::from(self.alice.get(l, col)) * w)
            .sum()
    }

    pub fn bob_marginal(&self, col: usize) -> f64 {
        self.space
            .weights()
            .iter()
            .enumerate()
            .map(|(l, w)| f64::from(self.bob.get(l, col)) * w)
            .sum()
    }

    /// Compare `E(a, b)` with `E_A(a) E_B(b)` for every pair of settings in
    /// the universe.
    pub fn factorization_check(&self, tol: f64) -> FactorizationReport {
        let mut pairs = Vec::new();
        for (a, alice) in self.universe.alice_settings().iter().enumerate() {
            let ma = self.alice_marginal(a);
            for (b, bob) in self.universe.bob_settings().iter().enumerate() {
                let mb = self.bob_marginal(b);
                let joint = self.correlation_at(a, b);
                let deviation = (joint - ma * mb).abs();
                pairs.push(PairFactorization {
                    alice: alice.clone(),
                    bob: bob.clone(),
                    joint,
                    alice_marginal: ma,
                    bob_marginal: mb,
                    deviation,
                    factorized: deviation <= tol,
                });
            }
        }
        let all_factorized = pairs.iter().all(|p| p.factorized);
        FactorizationReport { tol, pairs, all_factorized }
    }
}
