mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use fpwatch_core::accumulator::severity_for;
use fpwatch_core::evaluator::{cost_curve, missed_fraud_amounts, trapezoid_area};
use fpwatch_core::{
    alert_value, credit, frequent_filter, outcomes, roc, sim_match, total_cost, AlertState, Amount, CostParams,
    CreditParams, ExpiringFunction, ExpiringShape, FpTree, Item, Label, MinSupport, MissCost, SuspicionRecord,
    Threshold, Transaction, WeightTable, WindowAnchor,
};
use oracle::{random_dataset, Oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(seed: u64) -> Vec<BTreeSet<Item>> {
    random_dataset(&mut ChaCha8Rng::seed_from_u64(seed), 50, 8)
}

fn min_sup() -> impl Strategy<Value = (u64, u64)> {
    (1u64..=20).prop_map(|num| (num, 20))
}

fn labels_and_scores() -> impl Strategy<Value = Vec<(f64, Label)>> {
    // few distinct score values so ties are common
    prop::collection::vec(((0u8..8).prop_map(|k| k as f64 / 8.0), prop::bool::ANY), 2..40)
        .prop_map(|v| v.into_iter().map(|(s, f)| (s, if f { Label::Fraud } else { Label::Legal })).collect())
}

fn mann_whitney(scores: &[f64], labels: &[Label]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == Label::Fraud && labels[j] == Label::Legal {
                pairs += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn record(t: i64, suspicion: f64, cents: u64) -> SuspicionRecord {
    SuspicionRecord {
        transaction: Transaction::new("u", t, [], Amount::from_cents(cents)),
        similarity: 1.0 / suspicion - 1.0,
        suspicion,
        scored_at: t,
    }
}

fn records() -> impl Strategy<Value = Vec<SuspicionRecord>> {
    prop::collection::vec((1i64..100, 1u32..=100, 0u64..100_000), 0..30).prop_map(|mut v| {
        v.sort_by_key(|r| r.0);
        v.into_iter().map(|(t, s, c)| record(t, s as f64 / 100.0, c)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn path_counts_match_prefix_counting(seed: u64, (num, den) in min_sup()) {
        let txs = dataset(seed);
        let tree = FpTree::build(&txs, MinSupport::new(num, den).unwrap());
        let o = Oracle::new(&txs, num, den);
        prop_assert_eq!(tree.path_counts(), o.paths);
        let order: Vec<(Item, u64)> = tree.header().iter().map(|e| (e.item.clone(), e.total_count)).collect();
        prop_assert_eq!(order, o.order);
    }

    #[test]
    fn header_counts_equal_chain_sums(seed: u64, (num, den) in min_sup()) {
        let tree = FpTree::build(&dataset(seed), MinSupport::new(num, den).unwrap());
        for e in tree.header() {
            let sum: u64 = tree.chain(&e.item).map(|n| n.count).sum();
            prop_assert_eq!(sum, e.total_count);
        }
    }

    #[test]
    fn raising_min_sup_never_adds_nodes(seed: u64, a in 1u64..=20, b in 1u64..=20) {
        let txs = dataset(seed);
        let (lo, hi) = (a.min(b), a.max(b));
        let small = FpTree::build(&txs, MinSupport::new(lo, 20).unwrap()).stats().node_count;
        let large = FpTree::build(&txs, MinSupport::new(hi, 20).unwrap()).stats().node_count;
        prop_assert!(small >= large);
    }

    #[test]
    fn build_ignores_transaction_order(seed: u64, shuffle: u64, (num, den) in min_sup()) {
        let txs = dataset(seed);
        let mut permuted = txs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..permuted.len()).rev() {
            permuted.swap(i, rng.gen_range(0..=i));
        }
        let ms = MinSupport::new(num, den).unwrap();
        prop_assert_eq!(FpTree::build(&txs, ms), FpTree::build(&permuted, ms));
    }

    #[test]
    fn incremental_equals_batch_with_pinned_order(seed: u64, (num, den) in min_sup()) {
        let txs = dataset(seed);
        let ms = MinSupport::new(num, den).unwrap();
        let order: Vec<Item> = frequent_filter(&txs, ms).order.into_iter().map(|(i, _)| i).collect();
        let cut = txs.len() * 4 / 5;
        let mut tree = FpTree::build_with_order(&txs[..cut], order.clone(), ms).unwrap();
        for t in &txs[cut..] {
            tree.insert_incremental(t);
        }
        let batch = FpTree::build_with_order(&txs, order, ms).unwrap();
        prop_assert_eq!(tree, batch);
    }

    #[test]
    fn sim_matches_the_oracle(seed: u64, probe: u64, (num, den) in min_sup(), w in 1u32..4) {
        let txs = dataset(seed);
        let tree = FpTree::build(&txs, MinSupport::new(num, den).unwrap());
        let mut weights = WeightTable::default();
        weights.weights.insert("a1".into(), w as f64 * 0.5);
        let t = random_dataset(&mut ChaCha8Rng::seed_from_u64(probe), 1, 8).remove(0);
        let got = sim_match(&t, &tree, &weights, CreditParams::default()).unwrap();
        let want = Oracle::new(&txs, num, den).sim(&t, |a| weights.weight(a), 0.01);
        prop_assert!(got >= 0.0);
        prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn foreign_items_score_zero(seed: u64) {
        let tree = FpTree::build(&dataset(seed), MinSupport::new(1, 20).unwrap());
        let t: BTreeSet<Item> = ["b0=x", "b1=y"].iter().map(|s| s.parse().unwrap()).collect();
        prop_assert_eq!(sim_match(&t, &tree, &WeightTable::default(), CreditParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn adding_an_item_never_lowers_sim(seed: u64, probe: u64, extra in 0usize..8) {
        let tree = FpTree::build(&dataset(seed), MinSupport::new(1, 10).unwrap());
        let t = random_dataset(&mut ChaCha8Rng::seed_from_u64(probe), 1, 8).remove(0);
        let mut bigger = t.clone();
        bigger.insert(format!("a{}=v{}", extra % 3, extra).parse().unwrap());
        let p = CreditParams::default();
        let w = WeightTable::default();
        prop_assert!(sim_match(&bigger, &tree, &w, p).unwrap() >= sim_match(&t, &tree, &w, p).unwrap());
    }

    #[test]
    fn doubling_a_weight_doubles_its_share(seed: u64, probe: u64) {
        let tree = FpTree::build(&dataset(seed), MinSupport::new(1, 10).unwrap());
        let t = random_dataset(&mut ChaCha8Rng::seed_from_u64(probe), 1, 8).remove(0);
        let p = CreditParams::default();
        let with = |a0: f64| {
            let mut w = WeightTable::default();
            w.weights.insert("a0".into(), a0);
            sim_match(&t, &tree, &w, p).unwrap()
        };
        let share = with(1.0) - with(0.0);
        prop_assert!((with(2.0) - with(0.0) - 2.0 * share).abs() < 1e-9);
    }

    #[test]
    fn credit_is_monotone(s in 0.01f64..0.33, c1 in 0.5f64..1.0, c2 in 0.5f64..1.0) {
        let p = CreditParams::default();
        let (lo, hi) = (c1.min(c2), c1.max(c2));
        prop_assume!(hi - lo > 1e-6);
        prop_assert!(credit(s, hi, p).unwrap() > credit(s, lo, p).unwrap());
        prop_assert!(credit(s * 1.5, hi, p).unwrap() > credit(s, hi, p).unwrap());
    }

    #[test]
    fn auc_is_the_pairwise_statistic(rows in labels_and_scores()) {
        let (scores, labels): (Vec<f64>, Vec<Label>) = rows.into_iter().unzip();
        prop_assume!(labels.contains(&Label::Fraud) && labels.contains(&Label::Legal));
        let curve = roc(&scores, &labels).unwrap();
        let mw = mann_whitney(&scores, &labels);
        prop_assert!((curve.auc - mw).abs() <= 1e-12);
        prop_assert!((trapezoid_area(&curve.points) - mw).abs() <= 1e-12);
    }

    #[test]
    fn outcomes_partition_and_shrink(rows in labels_and_scores(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (scores, labels): (Vec<f64>, Vec<Label>) = rows.into_iter().unzip();
        let lo = outcomes(&scores, &labels, a.min(b)).unwrap();
        let hi = outcomes(&scores, &labels, a.max(b)).unwrap();
        prop_assert_eq!(lo.total(), scores.len());
        prop_assert_eq!(hi.total(), scores.len());
        prop_assert!(hi.hit <= lo.hit && hi.false_alarm <= lo.false_alarm);
    }

    #[test]
    fn cost_curve_matches_direct_sum(rows in labels_and_scores(), fixed: bool) {
        let (scores, labels): (Vec<f64>, Vec<Label>) = rows.into_iter().unzip();
        let amounts: Vec<f64> = (0..scores.len()).map(|i| 10.0 + i as f64).collect();
        let params = CostParams {
            challenge_cost: 3.0,
            miss_cost: if fixed { MissCost::FixedPerMiss(40.0) } else { MissCost::FullAmount },
        };
        for (th, cost) in cost_curve(&scores, &labels, &amounts, &params).unwrap() {
            let mut want = 0.0;
            for i in 0..scores.len() {
                let alert = scores[i] >= th;
                if alert {
                    want += 3.0;
                } else if labels[i] == Label::Fraud {
                    want += if fixed { 40.0 } else { amounts[i] };
                }
            }
            prop_assert!((cost - want).abs() < 1e-9);
            let m = outcomes(&scores, &labels, th).unwrap();
            let missed = missed_fraud_amounts(&scores, &labels, &amounts, th).unwrap();
            prop_assert_eq!(total_cost(&m, Some(&missed), &params).unwrap(), cost);
        }
    }

    #[test]
    fn alert_value_is_additive(rs in records(), split in any::<prop::sample::Index>()) {
        let f = ExpiringFunction::NaturalLog { start: 0, end: 100 };
        let k = if rs.is_empty() { 0 } else { split.index(rs.len() + 1) };
        let whole = alert_value(&rs, f).unwrap();
        let parts = alert_value(&rs[..k], f).unwrap() + alert_value(&rs[k..], f).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn step_alert_is_plain_sum(rs in records()) {
        let f = ExpiringFunction::Step { cutoff: 0 };
        let want: f64 = rs.iter().map(|r| r.suspicion * r.transaction.amount.as_f64()).sum();
        prop_assert!((alert_value(&rs, f).unwrap() - want).abs() <= 1e-9 * want.max(1.0));
    }

    #[test]
    fn severity_is_monotone(a in 0.0f64..3000.0, b in 0.0f64..3000.0) {
        let th: Vec<Threshold> = [(100.0, "warn"), (500.0, "alert"), (2000.0, "block")]
            .into_iter()
            .map(|(value, s)| Threshold { value, severity: s.into() })
            .collect();
        let rank = |v: f64| severity_for(&th, v).map_or(0, |s| th.iter().position(|t| t.severity == s).unwrap() + 1);
        prop_assert!(rank(a.min(b)) <= rank(a.max(b)));
    }

    #[test]
    fn sliding_in_steps_equals_one_slide(rs in records(), cut in 1i64..100) {
        let th = vec![Threshold { value: 1.0, severity: "warn".into() }];
        let anchor = WindowAnchor::Sliding { span: 60 };
        let shape = ExpiringShape::Polynomial { degree: 2 };
        let mut stepped = AlertState::new(shape, anchor, th.clone(), 0, 0).unwrap();
        let (early, late): (Vec<_>, Vec<_>) = rs.iter().cloned().partition(|r| r.scored_at <= cut);
        stepped.slide(cut, early).unwrap();
        stepped.slide(100, late).unwrap();
        let mut once = AlertState::new(shape, anchor, th, 0, 0).unwrap();
        once.slide(100, rs).unwrap();
        prop_assert_eq!(stepped.records(), once.records());
        prop_assert_eq!(stepped.alert_value().unwrap(), once.alert_value().unwrap());
    }
}

#[test]
fn one_large_suspicious_record_outranks_many_tiny_ones() {
    let f = ExpiringFunction::Step { cutoff: 0 };
    for k in [1usize, 10, 100, 1000] {
        let tiny: Vec<_> = (0..k).map(|i| record(1 + i as i64, 1.0, 1)).collect();
        let big = [record(1, 0.9, (k as u64 + 1) * 2)];
        assert!(alert_value(&big, f).unwrap() > alert_value(&tiny, f).unwrap());
    }
}

#[test]
fn fraud_items_rarely_appear_in_regular_behavior() {
    let profiles = fpwatch_core::builtin_profiles();
    let data = fpwatch_core::generate(&profiles["regular"], 2000, 200, &profiles["fraud"], 7).unwrap();
    let mut by_label: BTreeMap<Label, BTreeMap<&Item, usize>> = BTreeMap::new();
    for (t, l) in data.transactions.iter().zip(&data.labels) {
        for i in t.items.iter().filter(|i| i.attribute() == "type") {
            *by_label.entry(*l).or_default().entry(i).or_default() += 1;
        }
    }
    let legal = &by_label[&Label::Legal];
    let shared: usize = by_label[&Label::Fraud].keys().filter(|i| legal.contains_key(*i)).count();
    assert_eq!(shared, 0, "fraud transaction types overlap the regular profile");
}
