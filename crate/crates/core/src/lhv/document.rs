//! JSON model documents and structural validation.
//!
//! Validation runs on the raw document so that every broken invariant is
//! reported by name instead of stopping at the first one.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::space::NORMALIZATION_TOL;
use super::{HiddenSpace, LhvModel, ResponseTable, SettingUniverse};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuartetNames {
    pub a1: String,
    pub a2: String,
    pub b1: String,
    pub b2: String,
}

/// On-disk model format. Tables hold one row per point and one column per
/// setting, in the order of `alice_settings` / `bob_settings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    pub alice_settings: Vec<String>,
    pub bob_settings: Vec<String>,
    pub quartet: QuartetNames,
    #[serde(rename = "A")]
    pub alice_table: Vec<Vec<i64>>,
    #[serde(rename = "B")]
    pub bob_table: Vec<Vec<i64>>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model documents always serialize")
    }

    pub fn into_model(self) -> Result<LhvModel> {
        let report = validate_model(&self);
        if !report.passed() {
            return Err(Error::InvalidModel(report));
        }
        let universe = SettingUniverse::from_names(self.alice_settings, self.bob_settings, &self.quartet)?;
        let space = HiddenSpace::new(self.points, self.weights)?;
        let alice = ResponseTable::from_rows(&self.alice_table)?;
        let bob = ResponseTable::from_rows(&self.bob_table)?;
        LhvModel::new(space, Arc::new(universe), alice, bob)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name, passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Check every space, universe and table invariant of a raw document.
pub fn validate_model(doc: &ModelDocument) -> ValidationReport {
    let mut checks = space_checks(&doc.points, &doc.weights);
    checks.extend(universe_checks(&doc.alice_settings, &doc.bob_settings, &doc.quartet));
    checks.extend(table_checks("A", &doc.alice_table, doc.points.len(), doc.alice_settings.len()));
    checks.extend(table_checks("B", &doc.bob_table, doc.points.len(), doc.bob_settings.len()));
    ValidationReport { checks }
}

pub(crate) fn failure_summary(checks: &[Check]) -> Option<String> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    (!failed.is_empty()).then(|| failed.join("; "))
}

fn distinct(items: &[String]) -> bool {
    let set: HashSet<&String> = items.iter().collect();
    set.len() == items.len()
}

pub(crate) fn space_checks(points: &[String], weights: &[f64]) -> Vec<Check> {
    let sum: f64 = weights.iter().sum();
    let bad_weight = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0));
    vec![
        Check::new("space.nonempty", !points.is_empty(), format!("{} points", points.len())),
        Check::new(
            "space.weight_count",
            points.len() == weights.len(),
            format!("{} points, {} weights", points.len(), weights.len()),
        ),
        Check::new("space.points_distinct", distinct(points), "point identifiers must be unique"),
        Check::new(
            "space.weights_nonnegative",
            bad_weight.is_none(),
            match bad_weight {
                Some(i) => format!("weight {i} is {}", weights[i]),
                None => "all weights >= 0".to_string(),
            },
        ),
        Check::new(
            "space.normalization",
            (sum - 1.0).abs() <= NORMALIZATION_TOL,
            format!("weights sum to {sum}"),
        ),
    ]
}

pub(crate) fn universe_checks(alice: &[String], bob: &[String], q: &QuartetNames) -> Vec<Check> {
    let member_a = alice.contains(&q.a1) && alice.contains(&q.a2);
    let member_b = bob.contains(&q.b1) && bob.contains(&q.b2);
    vec![
        Check::new("universe.alice_size", alice.len() >= 2, format!("{} alice settings", alice.len())),
        Check::new("universe.bob_size", bob.len() >= 2, format!("{} bob settings", bob.len())),
        Check::new(
            "universe.settings_distinct",
            distinct(alice) && distinct(bob),
            "setting identifiers must be unique per party",
        ),
        Check::new(
            "universe.quartet_membership",
            member_a && member_b,
            format!("quartet ({}, {}) x ({}, {})", q.a1, q.a2, q.b1, q.b2),
        ),
        Check::new(
            "universe.quartet_distinct",
            q.a1 != q.a2 && q.b1 != q.b2,
            "the two settings of each party must differ",
        ),
    ]
}

pub(crate) fn table_checks(label: &'static str, rows: &[Vec<i64>], n_points: usize, n_settings: usize) -> Vec<Check> {
    let (shape_name, range_name) = match label {
        "A" => ("tables.A.shape", "tables.A.range"),
        _ => ("tables.B.shape", "tables.B.range"),
    };
    let bad_row = rows.iter().position(|r| r.len() != n_settings);
    let shape_ok = rows.len() == n_points && bad_row.is_none();
    let shape_detail = match bad_row {
        Some(i) if rows.len() == n_points => {
            format!("row {i} has {} entries, expected {n_settings}", rows[i].len())
        }
        _ => format!("{} rows, expected {n_points} x {n_settings}", rows.len()),
    };
    let bad_entry = rows
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, v)| (i, j, *v)))
        .find(|&(_, _, v)| v != 1 && v != -1);
    vec![
        Check::new(shape_name, shape_ok, shape_detail),
        Check::new(
            range_name,
            bad_entry.is_none(),
            match bad_entry {
                Some((i, j, v)) => format!("entry ({i}, {j}) is {v}, outputs must be -1 or +1"),
                None => "all entries are +/-1".to_string(),
            },
        ),
    ]
}
