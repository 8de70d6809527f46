//! Similarity scoring of a transaction against a profile tree.
//!
//! For every item of the transaction that heads a node-link chain, each chain
//! node whose prefix path is contained in the transaction earns the credit
//! `G(s, c) = -s * log2(1 + eps - c)`, scaled by the item's attribute weight.
//! `s` and `c` are the node's live support and confidence. The similarity is
//! the sum of all credits; suspicion is `1 / (1 + similarity)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fptree::FpTree;
use crate::model::{Item, Transaction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub default_weight: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for WeightTable {
    fn default() -> Self {
        WeightTable { weights: BTreeMap::new(), default_weight: 1.0 }
    }
}

impl WeightTable {
    pub fn weight(&self, attribute: &str) -> f64 {
        self.weights.get(attribute).copied().unwrap_or(self.default_weight)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |w: f64| !(w.is_finite() && w >= 0.0);
        if bad(self.default_weight) {
            return Err(Error::config(format!("weights.default_weight must be >= 0, got {}", self.default_weight)));
        }
        if let Some((a, w)) = self.weights.iter().find(|(_, w)| bad(**w)) {
            return Err(Error::config(format!("weights.{a} must be >= 0, got {w}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditParams {
    epsilon: f64,
}

impl CreditParams {
    pub const DEFAULT_EPSILON: f64 = 0.01;

    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::config(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(CreditParams { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for CreditParams {
    fn default() -> Self {
        CreditParams { epsilon: Self::DEFAULT_EPSILON }
    }
}

/// Credit of one matched node, `-s * log2(1 + eps - c)`, clamped at zero.
///
/// Requires `0 < s <= c <= 1`. When `c < eps` the raw value is negative and
/// zero is returned instead.
pub fn credit(support: f64, confidence: f64, params: CreditParams) -> Result<f64> {
    // tolerance for supports and confidences computed from the same counts
    const SLACK: f64 = 1e-12;
    if !(support > 0.0 && support <= confidence + SLACK && confidence <= 1.0 + SLACK) {
        return Err(Error::contract(format!("credit needs 0 < s <= c <= 1, got s = {support}, c = {confidence}")));
    }
    let g = -support * (1.0 + params.epsilon - confidence.min(1.0)).log2();
    if g < 0.0 {
        log::trace!("credit clamped: s = {support}, c = {confidence}, raw = {g}");
        return Ok(0.0);
    }
    Ok(g)
}

/// Maps similarity to suspicion in (0, 1]; zero similarity is maximally suspicious.
pub fn suspicion(similarity: f64) -> Result<f64> {
    if similarity.is_nan() || similarity < 0.0 {
        return Err(Error::contract(format!("similarity must be >= 0, got {similarity}")));
    }
    Ok(1.0 / (1.0 + similarity))
}

/// Breakdown of one match.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchReport {
    pub similarity: f64,
    /// Transaction items found in the header table.
    pub header_hits: usize,
    /// Chain nodes whose prefix path lies inside the transaction.
    pub matched_nodes: usize,
    /// Matched nodes whose credit was clamped to zero.
    pub clamped_nodes: usize,
}

pub fn sim_match(items: &BTreeSet<Item>, tree: &FpTree, weights: &WeightTable, params: CreditParams) -> Result<f64> {
    sim_match_report(items, tree, weights, params).map(|r| r.similarity)
}

pub fn sim_match_report(
    items: &BTreeSet<Item>,
    tree: &FpTree,
    weights: &WeightTable,
    params: CreditParams,
) -> Result<MatchReport> {
    if tree.is_empty() {
        return Err(Error::NoProfile("profile tree holds no transactions".into()));
    }
    let mut present = vec![false; tree.header().len()];
    let mut hits: Vec<(u32, &Item)> = Vec::new();
    for item in items {
        if let Some(r) = tree.rank_of(item) {
            present[r as usize] = true;
            hits.push((r, item));
        }
    }
    let total = tree.total_transactions() as f64;
    let mut report = MatchReport { header_hits: hits.len(), ..Default::default() };
    for (rank, item) in hits {
        let item_total = tree.header()[rank as usize].total_count as f64;
        let mut item_credit = 0.0;
        for node in tree.chain_by_rank(rank) {
            if !tree.ancestor_ranks(node.id).all(|r| present[r as usize]) {
                continue;
            }
            let count = tree.node_count_raw(node.id) as f64;
            let g = credit(count / total, count / item_total, params)?;
            report.matched_nodes += 1;
            if g == 0.0 {
                report.clamped_nodes += 1;
            }
            item_credit += g;
        }
        report.similarity += weights.weight(item.attribute()) * item_credit;
    }
    Ok(report)
}

/// A transaction together with its score.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspicionRecord {
    pub transaction: Transaction,
    pub similarity: f64,
    pub suspicion: f64,
    pub scored_at: i64,
}

impl SuspicionRecord {
    /// Scores `transaction` whose discretized items are `items`.
    pub fn score(
        transaction: Transaction,
        items: &BTreeSet<Item>,
        tree: &FpTree,
        weights: &WeightTable,
        params: CreditParams,
    ) -> Result<Self> {
        let similarity = sim_match(items, tree, weights, params)?;
        Ok(SuspicionRecord {
            scored_at: transaction.timestamp,
            suspicion: suspicion(similarity)?,
            similarity,
            transaction,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MinSupport;

    fn set(items: &[&str]) -> BTreeSet<Item> {
        items.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn credit_upper_bound() {
        let g = credit(1.0, 1.0, CreditParams::default()).unwrap();
        assert!((g - 6.643856189774724).abs() < 1e-12);
    }

    #[test]
    fn credit_at_epsilon_is_zero() {
        let p = CreditParams::new(0.25).unwrap();
        assert_eq!(credit(0.1, 0.25, p).unwrap(), 0.0);
    }

    #[test]
    fn credit_below_epsilon_is_clamped() {
        let p = CreditParams::new(0.5).unwrap();
        assert_eq!(credit(0.1, 0.2, p).unwrap(), 0.0);
    }

    #[test]
    fn credit_contract() {
        let p = CreditParams::default();
        assert!(credit(0.0, 0.5, p).is_err());
        assert!(credit(0.6, 0.5, p).is_err());
        assert!(credit(0.5, 1.5, p).is_err());
        assert!(CreditParams::new(0.0).is_err());
        assert!(CreditParams::new(1.5).is_err());
    }

    #[test]
    fn suspicion_map() {
        assert_eq!(suspicion(0.0).unwrap(), 1.0);
        assert_eq!(suspicion(1.0).unwrap(), 0.5);
        assert!((suspicion(9.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(suspicion(-1.0).is_err());
        assert!(suspicion(f64::NAN).is_err());
    }

    #[test]
    fn empty_profile_is_an_error() {
        let tree = FpTree::build(&[], MinSupport::DEFAULT);
        let err = sim_match(&set(&["a=1"]), &tree, &WeightTable::default(), CreditParams::default()).unwrap_err();
        assert!(matches!(err, Error::NoProfile(_)));
    }

    #[test]
    fn unmatched_and_empty_transactions_score_zero() {
        let tree = FpTree::build(&[set(&["a=1", "b=1"]), set(&["a=1"])], MinSupport::DEFAULT);
        let w = WeightTable::default();
        let p = CreditParams::default();
        assert_eq!(sim_match(&set(&["z=1"]), &tree, &w, p).unwrap(), 0.0);
        assert_eq!(sim_match(&BTreeSet::new(), &tree, &w, p).unwrap(), 0.0);
    }

    #[test]
    fn weights_scale_per_attribute() {
        let tree = FpTree::build(&[set(&["a=1", "b=1"]), set(&["a=1"])], MinSupport::DEFAULT);
        let p = CreditParams::default();
        let t = set(&["a=1", "b=1"]);
        let base = sim_match(&t, &tree, &WeightTable::default(), p).unwrap();
        let mut w = WeightTable::default();
        w.weights.insert("b".into(), 0.0);
        let without_b = sim_match(&t, &tree, &w, p).unwrap();
        w.weights.insert("b".into(), 2.0);
        let double_b = sim_match(&t, &tree, &w, p).unwrap();
        assert!((double_b - without_b - 2.0 * (base - without_b)).abs() < 1e-12);
    }

    #[test]
    fn weight_validation() {
        let mut w = WeightTable::default();
        w.weights.insert("ip".into(), -1.0);
        assert!(w.validate().is_err());
    }
}
