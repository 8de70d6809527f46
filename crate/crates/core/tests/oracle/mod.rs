//! Brute-force reference computations, written without the library's tree.
//!
//! Shared with the acceptance suite of the CLI crate.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fpwatch_core::Item;
use rand::Rng;

pub fn item(s: &str) -> Item {
    s.parse().unwrap()
}

pub fn set(items: &[&str]) -> BTreeSet<Item> {
    items.iter().map(|s| item(s)).collect()
}

/// The five example transactions. Attribute names are chosen so that the
/// item order breaks count ties the way the worked example lists them.
pub fn table_one() -> Vec<BTreeSet<Item>> {
    vec![
        set(&["type=ET", "day=ST", "time=EV", "ip=129.138", "usd=L50"]),
        set(&["type=ET", "day=ST", "time=MR", "ip=202.55", "usd=L10"]),
        set(&["type=ET", "day=SU", "time=MR", "ip=129.138", "usd=L50"]),
        set(&["type=BK", "day=ST", "time=EV", "ip=129.138", "usd=L10"]),
        set(&["type=CL", "day=ST", "time=EV", "ip=129.138", "usd=L10"]),
    ]
}

pub struct Oracle {
    pub n: u64,
    pub order: Vec<(Item, u64)>,
    pub filtered: Vec<Vec<Item>>,
    /// Root path -> number of filtered transactions having it as a prefix.
    pub paths: BTreeMap<Vec<Item>, u64>,
}

impl Oracle {
    /// `min_sup = num / den`; an item survives iff `count * den >= num * n`.
    pub fn new(transactions: &[BTreeSet<Item>], num: u64, den: u64) -> Oracle {
        let n = transactions.len() as u64;
        let mut universe: BTreeSet<&Item> = BTreeSet::new();
        for t in transactions {
            universe.extend(t.iter());
        }
        let mut order = Vec::new();
        for i in universe {
            let count = transactions.iter().filter(|t| t.contains(i)).count() as u64;
            if count * den >= num * n {
                order.push((i.clone(), count));
            }
        }
        // bubble sort: count descending, then item ascending
        for a in 0..order.len() {
            for b in 0..order.len() - 1 - a {
                let swap = order[b].1 < order[b + 1].1 || (order[b].1 == order[b + 1].1 && order[b].0 > order[b + 1].0);
                if swap {
                    order.swap(b, b + 1);
                }
            }
        }
        let filtered: Vec<Vec<Item>> = transactions
            .iter()
            .map(|t| order.iter().filter(|(i, _)| t.contains(i)).map(|(i, _)| i.clone()).collect())
            .collect();
        let mut prefixes: BTreeSet<Vec<Item>> = BTreeSet::new();
        for f in &filtered {
            for k in 1..=f.len() {
                prefixes.insert(f[..k].to_vec());
            }
        }
        let paths = prefixes
            .into_iter()
            .map(|p| {
                let c = filtered.iter().filter(|f| f.len() >= p.len() && f[..p.len()] == p[..]).count() as u64;
                (p, c)
            })
            .collect();
        Oracle { n, order, filtered, paths }
    }

    /// Similarity by enumerating every (item, node) pair of the tree the
    /// paths describe.
    pub fn sim(&self, t: &BTreeSet<Item>, weight: impl Fn(&str) -> f64, eps: f64) -> f64 {
        let mut total = 0.0;
        for (path, &count) in &self.paths {
            let last = path.last().unwrap();
            if !t.contains(last) || !path[..path.len() - 1].iter().all(|i| t.contains(i)) {
                continue;
            }
            let item_total: u64 = self.paths.iter().filter(|(p, _)| p.last() == Some(last)).map(|(_, c)| c).sum();
            let s = count as f64 / self.n as f64;
            let c = count as f64 / item_total as f64;
            let g = -s * (1.0 + eps - c).log2();
            total += g.max(0.0) * weight(last.attribute());
        }
        total
    }
}

/// Up to `max_tx` transactions over at most `n_items` distinct items.
pub fn random_dataset<R: Rng>(rng: &mut R, max_tx: usize, n_items: usize) -> Vec<BTreeSet<Item>> {
    let pool: Vec<Item> = (0..n_items).map(|k| item(&format!("a{}=v{}", k % 3, k))).collect();
    let len = rng.gen_range(1..=max_tx);
    (0..len).map(|_| pool.iter().filter(|_| rng.gen_bool(0.45)).cloned().collect()).collect()
}
