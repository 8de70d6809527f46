//! Per-entity FP-tree profiles.
//!
//! The tree is an arena of nodes. Each frequent item owns a header entry
//! whose node-link chain threads every node carrying that item, in the order
//! the nodes were created. The header order is the frozen item order `L`
//! used for insertion; it is sorted by descending count (ties by [`Item`]
//! order) whenever the tree is built or rebuilt, and stays fixed while
//! transactions are added incrementally.

mod adaptive;
pub mod persist;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::model::{Fraction, Item, MinSupport, Rule};

pub use adaptive::AdaptiveProfile;

const ROOT: u32 = 0;
const NO_ITEM: u32 = u32::MAX;

/// Handle to a node of one particular [`FpTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(u32);

#[derive(Debug, Clone)]
struct Node {
    rank: u32,
    count: u64,
    parent: u32,
    children: Vec<u32>,
    next: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct HeaderEntry {
    pub item: Item,
    /// Sum of counts along this item's node-link chain.
    pub total_count: u64,
    head: Option<u32>,
    tail: Option<u32>,
}

impl HeaderEntry {
    pub fn chain_head(&self) -> Option<NodeId> {
        self.head.map(NodeId)
    }
}

/// Borrowed view of one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeRef<'a> {
    pub id: NodeId,
    pub item: &'a Item,
    pub count: u64,
    /// `None` when the parent is the root.
    pub parent: Option<NodeId>,
}

/// Output of [`frequent_filter`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentItems {
    /// Frequent items with their counts, in `L` order.
    pub order: Vec<(Item, u64)>,
    /// Each input transaction reduced to its frequent items, in `L` order.
    pub filtered: Vec<Vec<Item>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeStats {
    pub node_count: usize,
    pub depth: usize,
    pub header_size: usize,
}

fn frequent_order(transactions: &[BTreeSet<Item>], min_sup: MinSupport) -> Vec<(Item, u64)> {
    let mut counts: HashMap<&Item, u64> = HashMap::new();
    for t in transactions {
        for item in t {
            *counts.entry(item).or_default() += 1;
        }
    }
    let n = transactions.len() as u64;
    let mut order: Vec<(Item, u64)> =
        counts.into_iter().filter(|&(_, c)| min_sup.is_frequent(c, n)).map(|(i, c)| (i.clone(), c)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    order
}

/// First scan: finds the frequent items and rewrites every transaction in `L` order.
pub fn frequent_filter(transactions: &[BTreeSet<Item>], min_sup: MinSupport) -> FrequentItems {
    let order = frequent_order(transactions, min_sup);
    let rank: HashMap<&Item, usize> = order.iter().enumerate().map(|(r, (i, _))| (i, r)).collect();
    let filtered = transactions
        .iter()
        .map(|t| {
            let mut kept: Vec<(usize, &Item)> = t.iter().filter_map(|i| rank.get(i).map(|&r| (r, i))).collect();
            kept.sort_unstable_by_key(|&(r, _)| r);
            kept.into_iter().map(|(_, i)| i.clone()).collect()
        })
        .collect();
    FrequentItems { order, filtered }
}

#[derive(Debug, Clone)]
pub struct FpTree {
    nodes: Vec<Node>,
    header: Vec<HeaderEntry>,
    index: HashMap<Item, u32>,
    total_transactions: u64,
    min_sup: MinSupport,
    pending: BTreeMap<Item, u64>,
}

impl FpTree {
    /// An empty tree whose frozen order is `order`.
    pub fn with_order(order: Vec<Item>, min_sup: MinSupport) -> Result<Self> {
        let mut index = HashMap::with_capacity(order.len());
        let mut header = Vec::with_capacity(order.len());
        for (r, item) in order.into_iter().enumerate() {
            if index.insert(item.clone(), r as u32).is_some() {
                return Err(Error::contract(format!("item `{item}` appears twice in the frozen order")));
            }
            header.push(HeaderEntry { item, total_count: 0, head: None, tail: None });
        }
        let root = Node { rank: NO_ITEM, count: 0, parent: ROOT, children: Vec::new(), next: None };
        Ok(FpTree { nodes: vec![root], header, index, total_transactions: 0, min_sup, pending: BTreeMap::new() })
    }

    /// Two-pass construction over the window contents.
    pub fn build(transactions: &[BTreeSet<Item>], min_sup: MinSupport) -> FpTree {
        // first scan interns every item, so the second one never hashes strings
        let mut ids: HashMap<&Item, u32> = HashMap::new();
        let mut distinct: Vec<&Item> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut encoded: Vec<u32> = Vec::with_capacity(transactions.len() * 8);
        let mut ends: Vec<usize> = Vec::with_capacity(transactions.len());
        for t in transactions {
            for item in t {
                let id = *ids.entry(item).or_insert_with(|| {
                    distinct.push(item);
                    counts.push(0);
                    (distinct.len() - 1) as u32
                });
                counts[id as usize] += 1;
                encoded.push(id);
            }
            ends.push(encoded.len());
        }
        let n = transactions.len() as u64;
        let mut frequent: Vec<u32> =
            (0..distinct.len() as u32).filter(|&id| min_sup.is_frequent(counts[id as usize], n)).collect();
        frequent.sort_by(|&a, &b| {
            counts[b as usize].cmp(&counts[a as usize]).then_with(|| distinct[a as usize].cmp(distinct[b as usize]))
        });
        let mut rank_of = vec![NO_ITEM; distinct.len()];
        for (r, &id) in frequent.iter().enumerate() {
            rank_of[id as usize] = r as u32;
        }
        let mut tree = FpTree::with_order(frequent.iter().map(|&id| distinct[id as usize].clone()).collect(), min_sup)
            .expect("frequent items are distinct");
        let mut ranks = Vec::new();
        let mut start = 0;
        for end in ends {
            ranks.clear();
            ranks.extend(encoded[start..end].iter().map(|&id| rank_of[id as usize]).filter(|&r| r != NO_ITEM));
            ranks.sort_unstable();
            tree.insert_ranks(&ranks);
            tree.total_transactions += 1;
            start = end;
        }
        tree
    }

    /// Builds with a pinned item order instead of recomputing `L`.
    /// Items outside `order` are dropped and not tallied.
    pub fn build_with_order(transactions: &[BTreeSet<Item>], order: Vec<Item>, min_sup: MinSupport) -> Result<FpTree> {
        let mut tree = FpTree::with_order(order, min_sup)?;
        for t in transactions {
            tree.insert_incremental(t);
        }
        tree.pending.clear();
        Ok(tree)
    }

    /// Equivalent to a fresh build over the current window, at this tree's `min_sup`.
    pub fn rebuild(&self, window_transactions: &[BTreeSet<Item>]) -> FpTree {
        FpTree::build(window_transactions, self.min_sup)
    }

    fn insert_ranks(&mut self, ranks: &[u32]) {
        let mut cur = ROOT;
        for &r in ranks {
            let found = self.nodes[cur as usize].children.iter().copied().find(|&c| self.nodes[c as usize].rank == r);
            let next = match found {
                Some(c) => {
                    self.nodes[c as usize].count += 1;
                    c
                }
                None => {
                    let id = self.nodes.len() as u32;
                    self.nodes.push(Node { rank: r, count: 1, parent: cur, children: Vec::new(), next: None });
                    self.nodes[cur as usize].children.push(id);
                    let entry = &mut self.header[r as usize];
                    match entry.tail {
                        Some(t) => self.nodes[t as usize].next = Some(id),
                        None => entry.head = Some(id),
                    }
                    entry.tail = Some(id);
                    id
                }
            };
            self.header[r as usize].total_count += 1;
            cur = next;
        }
    }

    /// Adds one transaction under the frozen order. Items outside the header
    /// are dropped and counted in the pending tally.
    pub fn insert_incremental(&mut self, items: &BTreeSet<Item>) {
        let mut ranks = Vec::with_capacity(items.len());
        for item in items {
            match self.index.get(item) {
                Some(&r) => ranks.push(r),
                None => *self.pending.entry(item.clone()).or_default() += 1,
            }
        }
        ranks.sort_unstable();
        self.insert_ranks(&ranks);
        self.total_transactions += 1;
    }

    /// True when some pending item has reached the support threshold.
    pub fn needs_rebuild(&self) -> bool {
        self.pending.values().any(|&c| self.min_sup.is_frequent(c, self.total_transactions))
    }

    pub fn min_sup(&self) -> MinSupport {
        self.min_sup
    }

    pub fn total_transactions(&self) -> u64 {
        self.total_transactions
    }

    pub fn header(&self) -> &[HeaderEntry] {
        &self.header
    }

    pub fn frozen_order(&self) -> impl Iterator<Item = &Item> {
        self.header.iter().map(|e| &e.item)
    }

    pub fn pending(&self) -> &BTreeMap<Item, u64> {
        &self.pending
    }

    pub fn is_empty(&self) -> bool {
        self.total_transactions == 0
    }

    pub fn header_entry(&self, item: &Item) -> Option<&HeaderEntry> {
        self.index.get(item).map(|&r| &self.header[r as usize])
    }

    pub(crate) fn rank_of(&self, item: &Item) -> Option<u32> {
        self.index.get(item).copied()
    }

    pub fn node(&self, id: NodeId) -> NodeRef<'_> {
        let n = &self.nodes[id.0 as usize];
        assert!(id.0 != ROOT, "the root carries no item");
        NodeRef {
            id,
            item: &self.header[n.rank as usize].item,
            count: n.count,
            parent: (n.parent != ROOT).then_some(NodeId(n.parent)),
        }
    }

    /// Nodes on `item`'s node-link chain, head first.
    pub fn chain(&self, item: &Item) -> Chain<'_> {
        Chain { tree: self, next: self.header_entry(item).and_then(|e| e.head) }
    }

    pub(crate) fn chain_by_rank(&self, rank: u32) -> Chain<'_> {
        Chain { tree: self, next: self.header[rank as usize].head }
    }

    pub(crate) fn node_count_raw(&self, id: NodeId) -> u64 {
        self.nodes[id.0 as usize].count
    }

    /// Ranks of the ancestors strictly between the node and the root, nearest first.
    pub(crate) fn ancestor_ranks(&self, id: NodeId) -> impl Iterator<Item = u32> + '_ {
        let mut cur = self.nodes[id.0 as usize].parent;
        std::iter::from_fn(move || {
            if cur == ROOT {
                return None;
            }
            let n = &self.nodes[cur as usize];
            cur = n.parent;
            Some(n.rank)
        })
    }

    /// Items on the node's ancestors, excluding the node itself and the root.
    pub fn prefix_path(&self, id: NodeId) -> BTreeSet<Item> {
        self.ancestor_ranks(id).map(|r| self.header[r as usize].item.clone()).collect()
    }

    /// Rules `{item} -> prefix_path(N)` for every node `N` on the item's chain
    /// that has a non-empty prefix path.
    pub fn extract_rules(&self, item: &Item) -> Vec<Rule> {
        let Some(entry) = self.header_entry(item) else {
            return Vec::new();
        };
        let antecedent: BTreeSet<Item> = [item.clone()].into();
        self.chain(item)
            .filter_map(|node| {
                let path = self.prefix_path(node.id);
                if path.is_empty() {
                    return None;
                }
                let support = Fraction::new(node.count, self.total_transactions).ok()?;
                let confidence = Fraction::new(node.count, entry.total_count).ok()?;
                Rule::new(antecedent.clone(), path, support, confidence).ok()
            })
            .collect()
    }

    pub fn stats(&self) -> TreeStats {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max_depth = 0;
        // children are always created after their parent
        for i in 1..self.nodes.len() {
            depth[i] = depth[self.nodes[i].parent as usize] + 1;
            max_depth = max_depth.max(depth[i]);
        }
        TreeStats { node_count: self.nodes.len() - 1, depth: max_depth, header_size: self.header.len() }
    }

    /// Every node's root path (in `L` order) with its count.
    pub fn path_counts(&self) -> BTreeMap<Vec<Item>, u64> {
        let mut out = BTreeMap::new();
        self.visit_preorder(|path, count| {
            out.insert(path.iter().map(|&r| self.header[r as usize].item.clone()).collect(), count);
        });
        out
    }

    fn visit_preorder(&self, mut f: impl FnMut(&[u32], u64)) {
        let mut path = Vec::new();
        let mut stack: Vec<(u32, usize)> = self.nodes[ROOT as usize].children.iter().rev().map(|&c| (c, 1)).collect();
        while let Some((id, depth)) = stack.pop() {
            let n = &self.nodes[id as usize];
            path.truncate(depth - 1);
            path.push(n.rank);
            f(&path, n.count);
            stack.extend(n.children.iter().rev().map(|&c| (c, depth + 1)));
        }
    }

    /// `(depth, item, count)` for every node in preorder; root children have depth 1.
    pub fn preorder(&self) -> Vec<(usize, &Item, u64)> {
        let mut out = Vec::with_capacity(self.nodes.len() - 1);
        self.visit_preorder(|path, count| {
            out.push((path.len(), &self.header[*path.last().unwrap() as usize].item, count));
        });
        out
    }

    /// Reassembles a tree from its persisted parts, checking every structural invariant.
    pub fn from_parts(
        min_sup: MinSupport,
        total_transactions: u64,
        order: Vec<(Item, u64)>,
        pending: BTreeMap<Item, u64>,
        preorder: Vec<(usize, Item, u64)>,
    ) -> Result<FpTree> {
        let expected: Vec<u64> = order.iter().map(|(_, c)| *c).collect();
        let mut tree = FpTree::with_order(order.into_iter().map(|(i, _)| i).collect(), min_sup)?;
        tree.total_transactions = total_transactions;
        tree.pending = pending;
        let mut stack: Vec<u32> = vec![ROOT];
        for (depth, item, count) in preorder {
            if depth == 0 || depth > stack.len() {
                return Err(Error::contract(format!("node `{item}` has an invalid depth {depth}")));
            }
            stack.truncate(depth);
            let parent = *stack.last().unwrap();
            let rank = tree
                .rank_of(&item)
                .ok_or_else(|| Error::contract(format!("node item `{item}` is not in the header")))?;
            let p = &tree.nodes[parent as usize];
            if parent != ROOT && p.rank >= rank {
                return Err(Error::contract(format!("node `{item}` breaks the frozen item order")));
            }
            if count == 0 || (parent != ROOT && count > p.count) {
                return Err(Error::contract(format!("node `{item}` has an inconsistent count {count}")));
            }
            if p.children.iter().any(|&c| tree.nodes[c as usize].rank == rank) {
                return Err(Error::contract(format!("duplicate child `{item}`")));
            }
            let id = tree.nodes.len() as u32;
            tree.nodes.push(Node { rank, count, parent, children: Vec::new(), next: None });
            tree.nodes[parent as usize].children.push(id);
            let entry = &mut tree.header[rank as usize];
            match entry.tail {
                Some(t) => tree.nodes[t as usize].next = Some(id),
                None => entry.head = Some(id),
            }
            entry.tail = Some(id);
            entry.total_count += count;
            stack.push(id);
        }
        let root_sum: u64 = tree.nodes[ROOT as usize].children.iter().map(|&c| tree.nodes[c as usize].count).sum();
        if root_sum > total_transactions {
            return Err(Error::contract("root children count exceeds total transactions"));
        }
        for (e, want) in tree.header.iter().zip(expected) {
            if e.total_count != want {
                return Err(Error::contract(format!(
                    "header count for `{}` is {want} but its chain sums to {}",
                    e.item, e.total_count
                )));
            }
        }
        Ok(tree)
    }
}

/// Structural equality: same `min_sup`, transaction total, header (items,
/// order and counts) and the same (root path, count) multiset. Node-link
/// chain order and the pending tally are not compared.
impl PartialEq for FpTree {
    fn eq(&self, other: &Self) -> bool {
        self.min_sup == other.min_sup
            && self.total_transactions == other.total_transactions
            && self.header.len() == other.header.len()
            && self.header.iter().zip(&other.header).all(|(a, b)| a.item == b.item && a.total_count == b.total_count)
            && self.path_counts() == other.path_counts()
    }
}

pub struct Chain<'a> {
    tree: &'a FpTree,
    next: Option<u32>,
}

impl<'a> Iterator for Chain<'a> {
    type Item = NodeRef<'a>;

    fn next(&mut self) -> Option<NodeRef<'a>> {
        let id = self.next?;
        self.next = self.tree.nodes[id as usize].next;
        Some(self.tree.node(NodeId(id)))
    }
}
