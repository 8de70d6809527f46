use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Item, MinSupport, WindowSpec};

use super::FpTree;

/// An FP-tree kept in step with a sliding window.
///
/// New transactions go in through [`FpTree::insert_incremental`] under the
/// frozen order. The tree is rebuilt from the window contents when the window
/// has slid by `rebuild_fraction` of its span, when a pending item reaches the
/// support threshold, or on [`AdaptiveProfile::rebuild`].
#[derive(Debug, Clone)]
pub struct AdaptiveProfile {
    tree: FpTree,
    window: WindowSpec,
    rebuild_fraction: f64,
    history: VecDeque<(i64, BTreeSet<Item>)>,
    observed_since_rebuild: usize,
    last_rebuild_at: i64,
    rebuilds: usize,
}

impl AdaptiveProfile {
    /// Builds from time-ordered `(timestamp, items)` pairs, keeping only the window.
    pub fn new(
        transactions: impl IntoIterator<Item = (i64, BTreeSet<Item>)>,
        window: WindowSpec,
        min_sup: MinSupport,
        rebuild_fraction: f64,
    ) -> Result<Self> {
        window.validate()?;
        if !(rebuild_fraction > 0.0 && rebuild_fraction <= 1.0) {
            return Err(Error::config(format!("rebuild_fraction must lie in (0, 1], got {rebuild_fraction}")));
        }
        let history: VecDeque<_> = transactions.into_iter().collect();
        let now = history.back().map_or(0, |(t, _)| *t);
        let mut profile = AdaptiveProfile {
            tree: FpTree::build(&[], min_sup),
            window,
            rebuild_fraction,
            history,
            observed_since_rebuild: 0,
            last_rebuild_at: now,
            rebuilds: 0,
        };
        profile.evict(now);
        profile.rebuild();
        profile.rebuilds = 0;
        Ok(profile)
    }

    pub fn tree(&self) -> &FpTree {
        &self.tree
    }

    /// Number of rebuilds triggered since construction.
    pub fn rebuild_count(&self) -> usize {
        self.rebuilds
    }

    pub fn window_len(&self) -> usize {
        self.history.len()
    }

    fn evict(&mut self, now: i64) {
        match self.window {
            WindowSpec::Count(n) => {
                while self.history.len() > n {
                    self.history.pop_front();
                }
            }
            WindowSpec::Time(d) => {
                while self.history.front().is_some_and(|(t, _)| *t <= now - d) {
                    self.history.pop_front();
                }
            }
        }
    }

    fn slid_far_enough(&self, now: i64) -> bool {
        match self.window {
            WindowSpec::Count(n) => self.observed_since_rebuild as f64 >= self.rebuild_fraction * n as f64,
            WindowSpec::Time(d) => (now - self.last_rebuild_at) as f64 >= self.rebuild_fraction * d as f64,
        }
    }

    /// Adds a transaction; returns true if it caused a rebuild.
    pub fn observe(&mut self, timestamp: i64, items: BTreeSet<Item>) -> Result<bool> {
        if self.history.back().is_some_and(|(t, _)| *t > timestamp) {
            return Err(Error::contract(format!("transaction at {timestamp} arrived out of order")));
        }
        self.tree.insert_incremental(&items);
        self.history.push_back((timestamp, items));
        self.observed_since_rebuild += 1;
        self.evict(timestamp);
        if self.slid_far_enough(timestamp) || self.tree.needs_rebuild() {
            self.last_rebuild_at = timestamp;
            self.rebuild();
            return Ok(true);
        }
        Ok(false)
    }

    /// Rebuilds from the current window contents.
    pub fn rebuild(&mut self) {
        let window: Vec<BTreeSet<Item>> = self.history.iter().map(|(_, s)| s.clone()).collect();
        self.tree = self.tree.rebuild(&window);
        self.observed_since_rebuild = 0;
        self.rebuilds += 1;
    }
}
