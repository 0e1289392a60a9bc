#![allow(dead_code)]

use chsh_forge::LhvModel;

/// Golden models used across suites.
pub fn all_plus() -> LhvModel {
    LhvModel::standard(vec![1.0], &[[1, 1]], &[[1, 1]]).unwrap()
}

/// Two points, weights (1/2, 1/2), A1 = (+1,-1), A2 = (+1,+1), B1 = (+1,-1),
/// B2 = (-1,+1): E = (1, -1, 0, 0), S = 2.
pub fn two_point_s2() -> LhvModel {
    LhvModel::standard(vec![0.5, 0.5], &[[1, 1], [-1, 1]], &[[1, -1], [-1, 1]]).unwrap()
}

/// S = 1.5: weight 7/8 on a point with integrand +2, 1/8 on one with -2.
pub fn s_one_and_half() -> LhvModel {
    LhvModel::standard(vec![0.875, 0.125], &[[1, 1], [1, 1]], &[[1, -1], [1, 1]]).unwrap()
}

pub fn deterministic_s2() -> LhvModel {
    LhvModel::standard(vec![1.0], &[[1, 1]], &[[1, -1]]).unwrap()
}

/// Independent CHSH oracle: walks the raw document rows, looks settings up by
/// name and sums the sixteen-term expansion point by point.
pub fn oracle_chsh(model: &LhvModel) -> f64 {
    let doc = model.to_document();
    let col = |list: &[String], name: &str| list.iter().position(|s| s == name).unwrap();
    let (a1, a2) = (col(&doc.alice_settings, &doc.quartet.a1), col(&doc.alice_settings, &doc.quartet.a2));
    let (b1, b2) = (col(&doc.bob_settings, &doc.quartet.b1), col(&doc.bob_settings, &doc.quartet.b2));
    let mut e = [0.0f64; 4];
    for (l, w) in doc.weights.iter().enumerate() {
        let a = &doc.alice_table[l];
        let b = &doc.bob_table[l];
        e[0] += w * (a[a1] * b[b1]) as f64;
        e[1] += w * (a[a1] * b[b2]) as f64;
        e[2] += w * (a[a2] * b[b1]) as f64;
        e[3] += w * (a[a2] * b[b2]) as f64;
    }
    e[0] - e[1] - e[2] - e[3]
}
