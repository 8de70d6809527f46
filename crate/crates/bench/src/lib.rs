//! Fixtures shared by the benchmarks.

use std::collections::BTreeSet;

use fpwatch_core::io::EngineConfig;
use fpwatch_core::simulator::{builtin_profile, generate};
use fpwatch_core::Item;

/// Discretized item sets of a simulated dataset.
pub fn simulated_itemsets(profile: &str, n: usize, seed: u64) -> Vec<BTreeSet<Item>> {
    let legal = builtin_profile(profile).expect("builtin profile");
    let fraud = builtin_profile("fraud").expect("builtin profile");
    let data = generate(&legal, n, n / 60, &fraud, seed).expect("valid profiles");
    let cfg = EngineConfig::default();
    data.transactions
        .iter()
        .map(|t| cfg.granularity.discretize_transaction(t).expect("default granularity covers simulator output"))
        .collect()
}
