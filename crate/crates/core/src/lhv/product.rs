use std::sync::Arc;

use crate::error::{Error, Result};

use super::{FactorizationReport, HiddenSpace, LhvModel, ResponseTable, SettingUniverse};

/// Model whose hidden variable is a pair `(l1, l2)` under a product measure,
/// with Alice reading only `l1` and Bob only `l2`. Every correlation of such
/// a model is a product of marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductLhvModel {
    space_a: HiddenSpace,
    space_b: HiddenSpace,
    alice: ResponseTable,
    bob: ResponseTable,
    universe: Arc<SettingUniverse>,
}

impl ProductLhvModel {
    pub fn new(
        space_a: HiddenSpace,
        space_b: HiddenSpace,
        alice: ResponseTable,
        bob: ResponseTable,
        universe: Arc<SettingUniverse>,
    ) -> Result<Self> {
        if alice.rows() != space_a.len() || alice.cols() != universe.alice_settings().len() {
            return Err(Error::InvalidSpace(format!(
                "alice table is {}x{}, expected {}x{}",
                alice.rows(),
                alice.cols(),
                space_a.len(),
                universe.alice_settings().len()
            )));
        }
        if bob.rows() != space_b.len() || bob.cols() != universe.bob_settings().len() {
            return Err(Error::InvalidSpace(format!(
                "bob table is {}x{}, expected {}x{}",
                bob.rows(),
                bob.cols(),
                space_b.len(),
                universe.bob_settings().len()
            )));
        }
        Ok(ProductLhvModel { space_a, space_b, alice, bob, universe })
    }

    /// The equivalent model over `Lambda_1 x Lambda_2`, points ordered with
    /// `l2` varying fastest.
    pub fn lower(&self) -> Result<LhvModel> {
        let (n1, n2) = (self.space_a.len(), self.space_b.len());
        let mut points = Vec::with_capacity(n1 * n2);
        let mut weights = Vec::with_capacity(n1 * n2);
        for (p1, w1) in self.space_a.points().iter().zip(self.space_a.weights()) {
            for (p2, w2) in self.space_b.points().iter().zip(self.space_b.weights()) {
                points.push(format!("({p1},{p2})"));
                weights.push(w1 * w2);
            }
        }
        let alice = ResponseTable::from_fn(n1 * n2, self.alice.cols(), |l, a| self.alice.get(l / n2, a) == 1);
        let bob = ResponseTable::from_fn(n1 * n2, self.bob.cols(), |l, b| self.bob.get(l % n2, b) == 1);
        LhvModel::new(HiddenSpace::new(points, weights)?, self.universe.clone(), alice, bob)
    }

    pub fn factorization_check(&self, tol: f64) -> Result<FactorizationReport> {
        Ok(self.lower()?.factorization_check(tol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_non_trivial_marginals_factorizes() {
        let u = Arc::new(SettingUniverse::standard());
        let pm = ProductLhvModel::new(
            HiddenSpace::with_weights(vec![0.3, 0.7]).unwrap(),
            HiddenSpace::with_weights(vec![0.1, 0.4, 0.5]).unwrap(),
            ResponseTable::from_fn(2, 2, |l, a| (l + a) % 2 == 0),
            ResponseTable::from_fn(3, 2, |l, b| l != b),
            u,
        )
        .unwrap();
        let lowered = pm.lower().unwrap();
        assert_eq!(lowered.space().len(), 6);
        // E(a1, b1) by explicit double sum over the product space.
        let ea = 0.3 - 0.7;
        let eb = -0.1 + 0.4 + 0.5;
        let joint = lowered.correlation("a1", "b1").unwrap().value;
        assert!((joint - ea * eb).abs() < 1e-15);
        assert!(pm.factorization_check(1e-12).unwrap().all_factorized);
    }

    #[test]
    fn shape_mismatch() {
        let u = Arc::new(SettingUniverse::standard());
        let r = ProductLhvModel::new(
            HiddenSpace::uniform(2).unwrap(),
            HiddenSpace::uniform(2).unwrap(),
            ResponseTable::constant(3, 2, 1),
            ResponseTable::constant(2, 2, 1),
            u,
        );
        assert!(r.is_err());
    }
}
