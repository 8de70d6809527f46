//! Profile-driven transaction simulator.
//!
//! A [`BehaviorProfile`] describes how one kind of user behaves: categorical
//! distributions per attribute, correlation rules that boost some values when
//! others are present, when sessions happen, how much is spent and where the
//! requests come from. Generation is driven by a ChaCha8 stream seeded from a
//! `u64`, so a seed reproduces a dataset byte for byte on any platform.
//!
//! Each generated transaction carries the sampled categorical attributes plus
//! `day` (two-letter weekday code), `time` (`HH:MM`) and `ip` (dotted quad).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::Label;
use crate::model::{Amount, Item, Transaction};

/// Weekday codes, Monday first.
pub const DAY_CODES: [&str; 7] = ["MO", "TU", "WE", "TH", "FR", "ST", "SU"];

/// Monday 2009-01-05 00:00:00 UTC.
pub const DEFAULT_START: i64 = 1_231_113_600;

pub const WEEK: i64 = 7 * 86_400;

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeModel {
    pub name: String,
    /// Value -> probability; must sum to 1.
    pub values: BTreeMap<String, f64>,
}

/// When every `when` item is present, the probabilities of the `boost` items
/// are multiplied by `factor` before their attribute is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRule {
    pub when: Vec<String>,
    pub boost: Vec<String>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTiming {
    /// Day-of-week distribution, Monday first.
    pub days: Vec<f64>,
    /// Hour-of-day distribution, midnight first.
    pub hours: Vec<f64>,
    /// Average transactions per week; sets the time span of a dataset.
    pub per_week: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmountRange {
    pub lo: f64,
    pub hi: f64,
    pub weight: f64,
}

/// Amounts are drawn uniformly inside a range picked by weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmountModel {
    pub ranges: Vec<AmountRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IpModel {
    /// `k` fixed addresses under a two-octet prefix, used uniformly.
    SmallStableGroup { prefix: String, k: u32 },
    /// A fresh address per transaction, optionally under a fixed prefix.
    DynamicPerTransaction {
        #[serde(default)]
        prefix: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub name: String,
    #[serde(default)]
    pub attributes: Vec<AttributeModel>,
    #[serde(default)]
    pub correlations: Vec<CorrelationRule>,
    pub timing: SessionTiming,
    pub amount: AmountModel,
    pub ip: IpModel,
}

fn check_distribution(what: &str, weights: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::config(format!("{what}: weight {w} is not a probability")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > TOLERANCE {
        return Err(Error::config(format!("{what}: probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

fn parse_prefix(what: &str, prefix: &str, max_octets: usize) -> Result<Vec<u8>> {
    let octets: Option<Vec<u8>> = prefix.split('.').map(|o| o.parse().ok()).collect();
    match octets {
        Some(o) if !o.is_empty() && o.len() <= max_octets => Ok(o),
        _ => Err(Error::config(format!("{what}: bad ip prefix `{prefix}`"))),
    }
}

impl BehaviorProfile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: BehaviorProfile = toml::from_str(text).map_err(|e| Error::config(format!("profile document: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profiles serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |s: &str| format!("profile `{}` {s}", self.name);
        for a in &self.attributes {
            if a.values.is_empty() {
                return Err(Error::config(ctx(&format!("attribute `{}` has no values", a.name))));
            }
            if ["day", "time", "ip"].contains(&a.name.as_str()) {
                return Err(Error::config(ctx(&format!("attribute name `{}` is reserved", a.name))));
            }
            check_distribution(&ctx(&format!("attribute `{}`", a.name)), a.values.values().copied())?;
        }
        if self.timing.days.len() != 7 || self.timing.hours.len() != 24 {
            return Err(Error::config(ctx("timing needs 7 day and 24 hour weights")));
        }
        check_distribution(&ctx("timing.days"), self.timing.days.iter().copied())?;
        check_distribution(&ctx("timing.hours"), self.timing.hours.iter().copied())?;
        if !(self.timing.per_week.is_finite() && self.timing.per_week > 0.0) {
            return Err(Error::config(ctx("timing.per_week must be positive")));
        }
        if self.amount.ranges.is_empty() {
            return Err(Error::config(ctx("amount model has no ranges")));
        }
        for r in &self.amount.ranges {
            if !(r.lo >= 0.0 && r.hi > r.lo && r.hi.is_finite()) {
                return Err(Error::config(ctx(&format!("amount range [{}, {}) is invalid", r.lo, r.hi))));
            }
        }
        check_distribution(&ctx("amount"), self.amount.ranges.iter().map(|r| r.weight))?;
        for rule in &self.correlations {
            if !(rule.factor.is_finite() && rule.factor >= 1.0) {
                return Err(Error::config(ctx(&format!("boost factor {} is below 1", rule.factor))));
            }
            for s in rule.when.iter().chain(&rule.boost) {
                s.parse::<Item>().map_err(|e| Error::config(ctx(&e.to_string())))?;
            }
        }
        match &self.ip {
            IpModel::SmallStableGroup { prefix, k } => {
                parse_prefix(&ctx("ip"), prefix, 2)?;
                if *k == 0 || *k > 250 {
                    return Err(Error::config(ctx("ip group size must be 1..=250")));
                }
            }
            IpModel::DynamicPerTransaction { prefix: Some(p) } => {
                parse_prefix(&ctx("ip"), p, 3)?;
            }
            IpModel::DynamicPerTransaction { prefix: None } => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub transactions: Vec<Transaction>,
    pub labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub entity_id: String,
    /// Start of the first simulated week, epoch seconds.
    pub start: i64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { entity_id: "u1".into(), start: DEFAULT_START }
    }
}

/// Weeks spanned by a dataset of `n` transactions of `profile`.
pub fn weeks_for(profile: &BehaviorProfile, n: usize) -> i64 {
    ((n as f64 / profile.timing.per_week).ceil() as i64).max(1)
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    // rounding can leave x just above the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

struct Sampler<'a> {
    profile: &'a BehaviorProfile,
    rules: Vec<(Vec<Item>, Vec<Item>, f64)>,
    ip_pool: Vec<String>,
}

impl<'a> Sampler<'a> {
    fn new(profile: &'a BehaviorProfile) -> Result<Self> {
        profile.validate()?;
        let parse_all = |v: &[String]| v.iter().map(|s| s.parse()).collect::<Result<Vec<Item>>>();
        let rules = profile
            .correlations
            .iter()
            .map(|r| Ok((parse_all(&r.when)?, parse_all(&r.boost)?, r.factor)))
            .collect::<Result<_>>()?;
        let ip_pool = match &profile.ip {
            IpModel::SmallStableGroup { prefix, k } => {
                (0..*k).map(|i| format!("{prefix}.{}.{}", 10 + i, (i * 37) % 250 + 1)).collect()
            }
            IpModel::DynamicPerTransaction { .. } => Vec::new(),
        };
        Ok(Sampler { profile, rules, ip_pool })
    }

    fn ip<R: Rng>(&self, rng: &mut R) -> String {
        match &self.profile.ip {
            IpModel::SmallStableGroup { .. } => self.ip_pool[rng.gen_range(0..self.ip_pool.len())].clone(),
            IpModel::DynamicPerTransaction { prefix } => {
                let mut octets: Vec<String> = match prefix {
                    Some(p) => p.split('.').map(str::to_owned).collect(),
                    None => vec![rng.gen_range(1u8..=223).to_string()],
                };
                while octets.len() < 4 {
                    octets.push(rng.gen_range(0u8..=255).to_string());
                }
                octets.join(".")
            }
        }
    }

    fn transaction<R: Rng>(&self, rng: &mut R, opts: &SimOptions, weeks: i64) -> Result<Transaction> {
        let timing = &self.profile.timing;
        let week = rng.gen_range(0..weeks);
        let day = pick(rng, &timing.days);
        let hour = pick(rng, &timing.hours);
        let minute = rng.gen_range(0..60);
        let second = rng.gen_range(0..60);
        let timestamp = opts.start + week * WEEK + day as i64 * 86_400 + hour as i64 * 3600 + minute * 60 + second;

        let mut items = vec![Item::new("day", DAY_CODES[day])?, Item::new("time", format!("{hour:02}:{minute:02}"))?];
        for attr in &self.profile.attributes {
            let values: Vec<(&String, f64)> = attr.values.iter().map(|(v, &p)| (v, p)).collect();
            let mut weights: Vec<f64> = values.iter().map(|(_, p)| *p).collect();
            for (when, boost, factor) in &self.rules {
                if when.iter().all(|w| items.contains(w)) {
                    for b in boost.iter().filter(|b| b.attribute() == attr.name) {
                        if let Some(i) = values.iter().position(|(v, _)| *v == b.value()) {
                            weights[i] *= factor;
                        }
                    }
                }
            }
            let (value, _) = values[pick(rng, &weights)];
            items.push(Item::new(attr.name.clone(), value.clone())?);
        }
        items.push(Item::new("ip", self.ip(rng))?);

        let ranges = &self.profile.amount.ranges;
        let weights: Vec<f64> = ranges.iter().map(|r| r.weight).collect();
        let r = &ranges[pick(rng, &weights)];
        let amount = Amount::from_f64(rng.gen_range(r.lo..r.hi))?;
        Ok(Transaction::new(opts.entity_id.clone(), timestamp, items, amount))
    }
}

/// Generates `n_legal` transactions of `profile` and `n_fraud` of
/// `fraud_profile`, merged in time order.
pub fn generate(
    profile: &BehaviorProfile,
    n_legal: usize,
    n_fraud: usize,
    fraud_profile: &BehaviorProfile,
    seed: u64,
) -> Result<LabeledDataset> {
    generate_with(profile, n_legal, n_fraud, fraud_profile, seed, &SimOptions::default())
}

pub fn generate_with(
    profile: &BehaviorProfile,
    n_legal: usize,
    n_fraud: usize,
    fraud_profile: &BehaviorProfile,
    seed: u64,
    opts: &SimOptions,
) -> Result<LabeledDataset> {
    let legal = Sampler::new(profile)?;
    let fraud = Sampler::new(fraud_profile)?;
    let weeks = weeks_for(profile, n_legal + n_fraud);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_legal + n_fraud);
    for _ in 0..n_legal {
        rows.push((legal.transaction(&mut rng, opts, weeks)?, Label::Legal));
    }
    for _ in 0..n_fraud {
        rows.push((fraud.transaction(&mut rng, opts, weeks)?, Label::Fraud));
    }
    rows.sort_by_key(|(t, _)| t.timestamp);
    let (transactions, labels) = rows.into_iter().unzip();
    Ok(LabeledDataset { transactions, labels })
}

const REGULAR: &str = include_str!("../profiles/regular.toml");
const IRREGULAR: &str = include_str!("../profiles/irregular.toml");
const FRAUD: &str = include_str!("../profiles/fraud.toml");

/// The shipped profiles: `regular`, `irregular` and `fraud`.
pub fn builtin_profiles() -> BTreeMap<String, BehaviorProfile> {
    [REGULAR, IRREGULAR, FRAUD]
        .into_iter()
        .map(|text| {
            let p = BehaviorProfile::from_toml(text).expect("builtin profile is valid");
            (p.name.clone(), p)
        })
        .collect()
}

pub fn builtin_profile(name: &str) -> Option<BehaviorProfile> {
    builtin_profiles().remove(name)
}
