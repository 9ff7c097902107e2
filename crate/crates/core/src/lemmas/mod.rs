//! Empirical constants for the inequalities behind the maximal estimate.
//!
//! Every check returns the supremum of `LHS/RHS` over its sampled inputs and
//! points, with `0/0 = 0` and `x/0 = ∞` for `x > 0`. The absolute constants
//! of these inequalities are never numeric, so what a check can falsify is
//! boundedness: a ratio that keeps growing under grid refinement.

mod checks;
mod cww;
mod suite;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use checks::{
    check_block_domination, check_convolution_inequality, check_cz_kernel,
    check_fefferman_stein, check_haar_phi_coarse, check_haar_phi_fine,
    check_haar_phi_interaction, check_indicator_decay, check_kernel_block,
    check_littlewood_paley, LittlewoodPaley,
};
pub use cww::{check_cww, cww_lambdas, pooled_cww_fit, CwwRow, CwwTable, PooledCww};
pub use suite::{default_eps, run_lemma, GoodLambdaSummary, Lemma, LemmaParams, LemmaReport};

/// Where a supremum was attained.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index of the sampled input within its ensemble.
    pub input: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub ratio_sup: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
    #[serde(rename = "J")]
    pub level: u32,
}

impl ConstantEstimate {
    pub fn empty(level: u32) -> Self {
        Self {
            ratio_sup: 0.0,
            witness: None,
            samples: 0,
            level,
        }
    }

    /// Folds one `LHS/RHS` observation in. Ties keep the earlier witness.
    #[inline]
    pub fn offer(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> Witness) {
        self.samples += 1;
        let r = ratio(lhs, rhs);
        if r > self.ratio_sup {
            self.ratio_sup = r;
            self.witness = Some(witness());
        }
    }

    /// Combines with an estimate over later inputs.
    pub fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        if other.ratio_sup > self.ratio_sup {
            self.ratio_sup = other.ratio_sup;
            self.witness = other.witness;
        }
        self
    }

    pub(crate) fn tag_input(mut self, input: usize) -> Self {
        if let Some(w) = &mut self.witness {
            w.input = input;
        }
        self
    }

    pub(crate) fn tag_param(mut self, key: &str, value: f64) -> Self {
        if let Some(w) = &mut self.witness {
            w.params.insert(key.to_string(), value);
        }
        self
    }
}

/// `lhs/rhs` with `0/0 = 0` and `x/0 = ∞`.
#[inline]
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

/// `P` points `(i + 1/2)/P`, a lattice that does not move with the grid.
pub(crate) fn lattice(points: usize) -> Vec<f64> {
    (0..points).map(|i| (i as f64 + 0.5) / points as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_conventions() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(0.0, 3.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(1.0, 4.0), 0.25);
    }

    #[test]
    fn merge_keeps_first_maximum() {
        let mut a = ConstantEstimate::empty(5);
        a.offer(1.0, 2.0, || Witness {
            x: Some(0.1),
            ..Default::default()
        });
        let mut b = ConstantEstimate::empty(5);
        b.offer(1.0, 2.0, || Witness {
            x: Some(0.9),
            ..Default::default()
        });
        let m = a.clone().merge(b.clone().tag_input(1));
        assert_eq!(m.samples, 2);
        assert_eq!(m.witness.unwrap().x, Some(0.1));
        b.offer(3.0, 1.0, Witness::default);
        let m = a.merge(b.tag_input(1));
        assert_eq!(m.ratio_sup, 3.0);
        assert_eq!(m.witness.unwrap().input, 1);
    }
}
