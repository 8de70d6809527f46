//! Behavioral anomaly detection with FP-tree profiles.
//!
//! An entity's recent transactions are compressed into an [`FpTree`]. New
//! transactions are scored by matching them against the tree
//! ([`sim_match`]), the resulting suspicion values are accumulated over a
//! time window into alert values ([`AlertState`]), and labelled runs are
//! evaluated with ROC curves and a detection cost model ([`evaluator`]).
//! [`simulator`] generates labelled datasets from behavior profiles.

pub mod accumulator;
pub mod error;
pub mod evaluator;
pub mod fptree;
pub mod io;
pub mod matcher;
pub mod model;
pub mod simulator;

pub use accumulator::{
    alert_value, expiring_weight, AlertState, ExpiringFunction, ExpiringShape, Threshold, WindowAnchor,
};
pub use error::{Error, Result};
pub use evaluator::{outcomes, roc, total_cost, CostParams, Label, MissCost, OutcomeMatrix, RocCurve};
pub use fptree::{frequent_filter, AdaptiveProfile, FpTree, NodeId, TreeStats};
pub use io::EngineConfig;
pub use matcher::{credit, sim_match, suspicion, CreditParams, SuspicionRecord, WeightTable};
pub use model::{
    discretize, window_select, Amount, Fraction, GranularityConfig, Item, MinSupport, Rule, Transaction, WindowSpec,
};
pub use simulator::{builtin_profiles, generate, BehaviorProfile, LabeledDataset};
