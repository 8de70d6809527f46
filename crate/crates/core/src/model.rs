//! Items, transactions, windows and rule measures.
//!
//! Everything here is an immutable value type. Items are discretized
//! attribute-value pairs; the granularity of each attribute is explicit
//! configuration (see [`GranularityConfig`]).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An attribute-value pair such as `time=EV` or `ip=129.138`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item {
    attribute: String,
    value: String,
}

impl Item {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Result<Self> {
        let attribute = attribute.into();
        let value = value.into();
        if attribute.is_empty() {
            return Err(Error::contract("item attribute must be non-empty"));
        }
        if value.is_empty() {
            return Err(Error::contract(format!("item value for attribute `{attribute}` must be non-empty")));
        }
        Ok(Item { attribute, value })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

impl FromStr for Item {
    type Err = Error;

    /// Parses the unescaped `attribute=value` form. The first `=` splits.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('=') {
            Some((a, v)) => Item::new(a, v),
            None => Err(Error::contract(format!("`{s}` is not of the form attribute=value"))),
        }
    }
}

/// An exact non-negative ratio of two counts.
///
/// Equality and ordering compare the rational values, so `2/4 == 1/2`.
#[derive(Debug, Clone, Copy)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::contract("fraction with zero denominator"));
        }
        Ok(Fraction { num, den })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Whole percent, rounded half up (2/3 -> 67).
    pub fn percent(&self) -> u64 {
        let scaled = self.num as u128 * 200 + self.den as u128;
        (scaled / (2 * self.den as u128)) as u64
    }

    pub fn reduced(&self) -> Fraction {
        let g = gcd(self.num, self.den).max(1);
        Fraction { num: self.num / g, den: self.den / g }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Minimum support, an exact fraction in (0, 1].
///
/// An item is frequent over `n` transactions iff `frequency >= min_sup * n`,
/// evaluated without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinSupport(Fraction);

impl MinSupport {
    /// Default minimum support of 5%.
    pub const DEFAULT: MinSupport = MinSupport(Fraction { num: 1, den: 20 });

    pub fn new(num: u64, den: u64) -> Result<Self> {
        let f = Fraction::new(num, den)?;
        if num == 0 || num > den {
            return Err(Error::config(format!("min_sup must lie in (0, 1], got {f}")));
        }
        Ok(MinSupport(f.reduced()))
    }

    /// Converts a decimal fraction, rounding to nine decimal places first so
    /// that `0.1` means exactly one tenth.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x <= 0.0 || x > 1.0 {
            return Err(Error::config(format!("min_sup must lie in (0, 1], got {x}")));
        }
        const SCALE: u64 = 1_000_000_000;
        let num = (x * SCALE as f64).round() as u64;
        MinSupport::new(num.max(1), SCALE)
    }

    pub fn fraction(&self) -> Fraction {
        self.0
    }

    pub fn value(&self) -> f64 {
        self.0.value()
    }

    pub fn is_frequent(&self, frequency: u64, total: u64) -> bool {
        frequency as u128 * self.0.den as u128 >= self.0.num as u128 * total as u128
    }

    /// Smallest frequency that passes [`MinSupport::is_frequent`] over `total`.
    pub fn min_count(&self, total: u64) -> u64 {
        let num = self.0.num as u128 * total as u128;
        num.div_ceil(self.0.den as u128) as u64
    }
}

impl Default for MinSupport {
    fn default() -> Self {
        MinSupport::DEFAULT
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for MinSupport {
    type Err = Error;

    /// Accepts `num/den` or a decimal such as `0.05`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("invalid min_sup `{s}`"));
        match s.split_once('/') {
            Some((n, d)) => MinSupport::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => MinSupport::from_f64(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

/// Monetary amount in whole cents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub fn from_cents(cents: u64) -> Self {
        Amount(cents)
    }

    pub fn cents(&self) -> u64 {
        self.0
    }

    pub fn as_f64(&self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Rounds to the nearest cent. Negative or non-finite input is rejected.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::contract(format!("amount must be a non-negative number, got {x}")));
        }
        Ok(Amount((x * 100.0).round() as u64))
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Amount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::contract(format!("invalid amount `{s}`"));
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 2 {
            return Err(Error::contract(format!("amount `{s}` has more than two decimal places")));
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let mut cents = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            cents += (b - b'0') as u64 * if i == 0 { 10 } else { 1 };
        }
        whole.checked_mul(100).and_then(|w| w.checked_add(cents)).map(Amount).ok_or_else(bad)
    }
}

/// One timestamped transaction of an entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub entity_id: String,
    /// Epoch seconds.
    pub timestamp: i64,
    pub items: BTreeSet<Item>,
    pub amount: Amount,
}

impl Transaction {
    pub fn new(
        entity_id: impl Into<String>,
        timestamp: i64,
        items: impl IntoIterator<Item = Item>,
        amount: Amount,
    ) -> Self {
        Transaction { entity_id: entity_id.into(), timestamp, items: items.into_iter().collect(), amount }
    }
}

/// Which recent transactions make up a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSpec {
    /// All transactions with timestamp in `(now - seconds, now]`.
    Time(i64),
    /// The last `n` transactions.
    Count(usize),
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowSpec::Time(d) if d <= 0 => Err(Error::config(format!("window.time must be positive, got {d}"))),
            WindowSpec::Count(0) => Err(Error::config("window.count must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// Selects the window contents from a time-ordered sequence.
///
/// The result is always a contiguous sub-slice of the input.
pub fn window_select(transactions: &[Transaction], spec: WindowSpec, now: i64) -> Result<&[Transaction]> {
    spec.validate()?;
    if let Some(i) = transactions.windows(2).position(|w| w[0].timestamp > w[1].timestamp) {
        return Err(Error::contract(format!("transactions not sorted by timestamp at position {}", i + 1)));
    }
    match spec {
        WindowSpec::Count(n) => Ok(&transactions[transactions.len().saturating_sub(n)..]),
        WindowSpec::Time(d) => {
            let lo = transactions.partition_point(|t| t.timestamp <= now - d);
            let hi = transactions.partition_point(|t| t.timestamp <= now);
            Ok(&transactions[lo..hi.max(lo)])
        }
    }
}

/// An association rule `antecedent -> consequent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub antecedent: BTreeSet<Item>,
    pub consequent: BTreeSet<Item>,
    pub support: Fraction,
    pub confidence: Fraction,
}

impl Rule {
    pub fn new(
        antecedent: BTreeSet<Item>,
        consequent: BTreeSet<Item>,
        support: Fraction,
        confidence: Fraction,
    ) -> Result<Self> {
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(Error::contract("rule sides must be non-empty"));
        }
        if !antecedent.is_disjoint(&consequent) {
            return Err(Error::contract("rule antecedent and consequent overlap"));
        }
        let one = Fraction { num: 1, den: 1 };
        if support > confidence || confidence > one {
            return Err(Error::contract(format!(
                "rule measures must satisfy support <= confidence <= 1, got {support} and {confidence}"
            )));
        }
        Ok(Rule { antecedent, consequent, support, confidence })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &BTreeSet<Item>| s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "{{{}}} -> {{{}}} [{}%, {}%]",
            side(&self.antecedent),
            side(&self.consequent),
            self.support.percent(),
            self.confidence.percent()
        )
    }
}

/// A raw, not yet bucketed attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Text(String),
}

impl RawValue {
    fn as_number(&self) -> Option<f64> {
        match self {
            RawValue::Number(x) => Some(*x),
            RawValue::Text(s) => s.trim().parse().ok(),
        }
    }
}

impl From<f64> for RawValue {
    fn from(x: f64) -> Self {
        RawValue::Number(x)
    }
}

impl From<&str> for RawValue {
    fn from(s: &str) -> Self {
        RawValue::Text(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeBucket {
    pub lo: f64,
    /// Open upper end when absent.
    #[serde(default)]
    pub hi: Option<f64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourBucket {
    /// First hour of the bucket, 0..24.
    pub start: u8,
    /// Hour at which the bucket ends (exclusive). May wrap past midnight.
    pub end: u8,
    pub label: String,
}

/// How the raw values of one attribute map to bucket labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BucketSpec {
    /// Keep the value as written.
    PassThrough,
    /// Fixed-width numeric intervals `[origin + k*width, origin + (k+1)*width)`,
    /// labelled canonically as `[lo,hi)`.
    Interval {
        width: f64,
        #[serde(default)]
        origin: f64,
    },
    /// Explicit half-open numeric ranges with their own labels.
    Ranges { ranges: Vec<RangeBucket> },
    /// Hour-of-day buckets; input is `HH:MM` or an hour number.
    HourOfDay { buckets: Vec<HourBucket> },
    /// One bucket per clock hour, labelled `9pm`, `12am`, ...
    Hourly,
    /// Keeps the leading `octets` of a dotted IPv4 address.
    IpPrefix { octets: u8 },
}

impl BucketSpec {
    pub fn validate(&self, attribute: &str) -> Result<()> {
        let err = |m: String| Err(Error::config(format!("granularity for `{attribute}`: {m}")));
        match self {
            BucketSpec::Interval { width, origin } => {
                if !(width.is_finite() && *width > 0.0 && origin.is_finite()) {
                    return err(format!("interval width must be positive and finite, got {width}"));
                }
            }
            BucketSpec::Ranges { ranges } => {
                if ranges.is_empty() {
                    return err("no ranges".into());
                }
                for r in ranges {
                    if r.label.is_empty() || r.hi.is_some_and(|hi| hi <= r.lo) {
                        return err(format!("bad range `{}`", r.label));
                    }
                }
            }
            BucketSpec::HourOfDay { buckets } => {
                if buckets.is_empty() {
                    return err("no hour buckets".into());
                }
                for b in buckets {
                    if b.start > 23 || b.end > 24 || b.label.is_empty() {
                        return err(format!("bad hour bucket `{}`", b.label));
                    }
                }
            }
            BucketSpec::IpPrefix { octets } if !(1..=4).contains(octets) => {
                return err(format!("ip prefix octets must be 1..=4, got {octets}"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Maps one raw value to its bucket label.
    pub fn bucket(&self, attribute: &str, raw: &RawValue) -> Result<String> {
        let unmapped = || Error::config(format!("value {raw:?} of attribute `{attribute}` falls in no bucket"));
        match self {
            BucketSpec::PassThrough => match raw {
                RawValue::Text(s) => Ok(s.clone()),
                RawValue::Number(x) => Ok(format!("{x}")),
            },
            BucketSpec::Interval { width, origin } => {
                if let RawValue::Text(s) = raw {
                    if let Some((lo, hi)) = parse_interval_label(s) {
                        let k = ((lo - origin) / width).round();
                        if lo == origin + k * width && hi == lo + width {
                            return Ok(s.clone());
                        }
                    }
                }
                let x = raw.as_number().ok_or_else(unmapped)?;
                let k = ((x - origin) / width).floor();
                let lo = origin + k * width;
                Ok(format!("[{},{})", lo, lo + width))
            }
            BucketSpec::Ranges { ranges } => {
                if let RawValue::Text(s) = raw {
                    if ranges.iter().any(|r| &r.label == s) {
                        return Ok(s.clone());
                    }
                }
                let x = raw.as_number().ok_or_else(unmapped)?;
                ranges
                    .iter()
                    .find(|r| x >= r.lo && r.hi.is_none_or(|hi| x < hi))
                    .map(|r| r.label.clone())
                    .ok_or_else(unmapped)
            }
            BucketSpec::HourOfDay { buckets } => {
                if let RawValue::Text(s) = raw {
                    if buckets.iter().any(|b| &b.label == s) {
                        return Ok(s.clone());
                    }
                }
                let hour = parse_hour(raw).ok_or_else(unmapped)?;
                buckets
                    .iter()
                    .find(|b| {
                        if b.start < b.end {
                            hour >= b.start && hour < b.end
                        } else {
                            hour >= b.start || hour < b.end
                        }
                    })
                    .map(|b| b.label.clone())
                    .ok_or_else(unmapped)
            }
            BucketSpec::Hourly => {
                if let RawValue::Text(s) = raw {
                    if (0..24).any(|h| hour_label(h) == *s) {
                        return Ok(s.clone());
                    }
                }
                parse_hour(raw).map(hour_label).ok_or_else(unmapped)
            }
            BucketSpec::IpPrefix { octets } => {
                let s = match raw {
                    RawValue::Text(s) => s,
                    RawValue::Number(_) => return Err(unmapped()),
                };
                let parts: Vec<&str> = s.split('.').collect();
                if parts.len() < *octets as usize {
                    return Err(unmapped());
                }
                Ok(parts[..*octets as usize].join("."))
            }
        }
    }

    /// Renders a canonical `[lo,hi)` interval label in whole-dollar form,
    /// e.g. `[0,10)` as `$1-$10`. Other labels are returned unchanged.
    pub fn currency_display(label: &str) -> String {
        match parse_interval_label(label) {
            Some((lo, hi)) if lo.fract() == 0.0 && hi.fract() == 0.0 => {
                format!("${}-${}", lo + 1.0, hi)
            }
            _ => label.to_owned(),
        }
    }
}

fn parse_interval_label(s: &str) -> Option<(f64, f64)> {
    let inner = s.strip_prefix('[')?.strip_suffix(')')?;
    let (lo, hi) = inner.split_once(',')?;
    Some((lo.parse().ok()?, hi.parse().ok()?))
}

fn parse_hour(raw: &RawValue) -> Option<u8> {
    let h = match raw {
        RawValue::Number(x) => *x,
        RawValue::Text(s) => match s.split_once(':') {
            Some((h, m)) => {
                let m: u8 = m.parse().ok()?;
                if m > 59 {
                    return None;
                }
                h.parse().ok()?
            }
            None => s.parse().ok()?,
        },
    };
    (h.is_finite() && (0.0..24.0).contains(&h)).then_some(h.floor() as u8)
}

fn hour_label(h: u8) -> String {
    let (n, suffix) = match h {
        0 => (12, "am"),
        1..=11 => (h, "am"),
        12 => (12, "pm"),
        _ => (h - 12, "pm"),
    };
    format!("{n}{suffix}")
}

/// Derives an amount bucket item from the transaction amount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmountBucketing {
    pub attribute: String,
    pub spec: BucketSpec,
}

/// Per-attribute bucketing for turning raw records into items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GranularityConfig {
    #[serde(default)]
    pub attributes: BTreeMap<String, BucketSpec>,
    /// Spec for attributes not listed; unknown attributes are an error when absent.
    #[serde(default = "default_pass_through")]
    pub default: Option<BucketSpec>,
    #[serde(default)]
    pub amount: Option<AmountBucketing>,
}

fn default_pass_through() -> Option<BucketSpec> {
    Some(BucketSpec::PassThrough)
}

impl Default for GranularityConfig {
    fn default() -> Self {
        GranularityConfig { attributes: BTreeMap::new(), default: default_pass_through(), amount: None }
    }
}

impl GranularityConfig {
    pub fn validate(&self) -> Result<()> {
        for (a, spec) in &self.attributes {
            spec.validate(a)?;
        }
        if let Some(d) = &self.default {
            d.validate("<default>")?;
        }
        if let Some(am) = &self.amount {
            if am.attribute.is_empty() {
                return Err(Error::config("granularity.amount.attribute must be non-empty"));
            }
            am.spec.validate(&am.attribute)?;
        }
        Ok(())
    }

    fn spec_for(&self, attribute: &str) -> Result<&BucketSpec> {
        self.attributes
            .get(attribute)
            .or(self.default.as_ref())
            .ok_or_else(|| Error::config(format!("no granularity spec for attribute `{attribute}` and no default")))
    }

    /// Buckets one raw record. Output has one item per input attribute.
    pub fn discretize(&self, raw: &BTreeMap<String, RawValue>) -> Result<BTreeSet<Item>> {
        raw.iter()
            .map(|(a, v)| {
                let label = self.spec_for(a)?.bucket(a, v)?;
                Item::new(a.clone(), label)
            })
            .collect()
    }

    /// Buckets the items of a transaction and adds the amount bucket item when configured.
    pub fn discretize_transaction(&self, t: &Transaction) -> Result<BTreeSet<Item>> {
        let mut out = BTreeSet::new();
        for item in &t.items {
            let raw = RawValue::Text(item.value().to_owned());
            let label = self.spec_for(item.attribute())?.bucket(item.attribute(), &raw)?;
            out.insert(Item::new(item.attribute(), label)?);
        }
        if let Some(am) = &self.amount {
            let label = am.spec.bucket(&am.attribute, &RawValue::Number(t.amount.as_f64()))?;
            out.insert(Item::new(am.attribute.clone(), label)?);
        }
        Ok(out)
    }
}

/// Free-function form of [`GranularityConfig::discretize`].
pub fn discretize(raw: &BTreeMap<String, RawValue>, config: &GranularityConfig) -> Result<BTreeSet<Item>> {
    config.discretize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tx(t: i64) -> Transaction {
        Transaction::new("u1", t, [], Amount::ZERO)
    }

    fn record(pairs: &[(&str, RawValue)]) -> BTreeMap<String, RawValue> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn coarse_time() -> BucketSpec {
        let b = |start, end, label: &str| HourBucket { start, end, label: label.into() };
        BucketSpec::HourOfDay {
            buckets: vec![b(6, 12, "Morning"), b(12, 17, "Afternoon"), b(17, 23, "Evening"), b(23, 6, "Night")],
        }
    }

    #[test]
    fn price_interval_of_ten_dollars() {
        let mut cfg = GranularityConfig::default();
        cfg.attributes.insert("Price".into(), BucketSpec::Interval { width: 10.0, origin: 0.0 });
        let items = cfg.discretize(&record(&[("Price", 4.37.into())])).unwrap();
        let item = items.into_iter().next().unwrap();
        assert_eq!(item, Item::new("Price", "[0,10)").unwrap());
        assert_eq!(BucketSpec::currency_display(item.value()), "$1-$10");
    }

    #[test]
    fn interval_is_half_open() {
        let spec = BucketSpec::Interval { width: 10.0, origin: 0.0 };
        assert_eq!(spec.bucket("p", &10.0.into()).unwrap(), "[10,20)");
        assert_eq!(spec.bucket("p", &9.999.into()).unwrap(), "[0,10)");
    }

    #[test]
    fn time_coarse_and_fine() {
        let mut cfg = GranularityConfig::default();
        cfg.attributes.insert("Time".into(), coarse_time());
        let coarse = cfg.discretize(&record(&[("Time", "21:00".into())])).unwrap();
        assert!(coarse.contains(&Item::new("Time", "Evening").unwrap()));

        cfg.attributes.insert("Time".into(), BucketSpec::Hourly);
        let fine = cfg.discretize(&record(&[("Time", "21:00".into())])).unwrap();
        assert!(fine.contains(&Item::new("Time", "9pm").unwrap()));
    }

    #[test]
    fn night_wraps_past_midnight() {
        assert_eq!(coarse_time().bucket("t", &"02:30".into()).unwrap(), "Night");
        assert_eq!(coarse_time().bucket("t", &"23:00".into()).unwrap(), "Night");
    }

    #[test]
    fn empty_record_gives_no_items() {
        assert!(GranularityConfig::default().discretize(&BTreeMap::new()).unwrap().is_empty());
    }

    #[test]
    fn unknown_attribute_without_default_names_it() {
        let cfg = GranularityConfig { default: None, ..Default::default() };
        let err = cfg.discretize(&record(&[("Color", "red".into())])).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("Color")), "{err}");
    }

    #[test]
    fn bucketing_a_label_is_identity() {
        let specs = [
            BucketSpec::PassThrough,
            BucketSpec::Interval { width: 10.0, origin: 0.0 },
            coarse_time(),
            BucketSpec::Hourly,
            BucketSpec::IpPrefix { octets: 2 },
            BucketSpec::Ranges {
                ranges: vec![
                    RangeBucket { lo: 0.0, hi: Some(10.0), label: "L10".into() },
                    RangeBucket { lo: 10.0, hi: None, label: "LX".into() },
                ],
            },
        ];
        let inputs: [RawValue; 4] = [4.37.into(), "21:00".into(), "129.138.7.1".into(), 12.0.into()];
        for spec in &specs {
            for raw in &inputs {
                if let Ok(label) = spec.bucket("a", raw) {
                    let again = spec.bucket("a", &RawValue::Text(label.clone())).unwrap();
                    assert_eq!(again, label, "{spec:?}");
                }
            }
        }
    }

    #[test]
    fn ip_prefix() {
        let spec = BucketSpec::IpPrefix { octets: 2 };
        assert_eq!(spec.bucket("ip", &"129.138.4.17".into()).unwrap(), "129.138");
    }

    #[test]
    fn count_window_takes_the_tail() {
        let txs: Vec<_> = (0..600).map(tx).collect();
        let w = window_select(&txs, WindowSpec::Count(500), 599).unwrap();
        assert_eq!(w.len(), 500);
        assert_eq!(w[0].timestamp, 100);
        assert_eq!(window_select(&txs, WindowSpec::Count(900), 599).unwrap().len(), 600);
    }

    #[test]
    fn time_window_is_half_open() {
        let txs: Vec<_> = (1..=10).map(tx).collect();
        let w = window_select(&txs, WindowSpec::Time(3), 10).unwrap();
        let ts: Vec<i64> = w.iter().map(|t| t.timestamp).collect();
        assert_eq!(ts, vec![8, 9, 10]);
    }

    #[test]
    fn unsorted_window_input_is_rejected() {
        let txs = vec![tx(2), tx(1)];
        assert!(matches!(window_select(&txs, WindowSpec::Count(1), 2), Err(Error::Contract(_))));
    }

    #[test]
    fn min_support_is_exact() {
        let ms = MinSupport::from_f64(0.6).unwrap();
        assert!(ms.is_frequent(3, 5));
        assert!(!ms.is_frequent(2, 5));
        let tenth = MinSupport::from_f64(0.1).unwrap();
        assert!(tenth.is_frequent(1, 10));
        assert_eq!(tenth.min_count(10), 1);
        assert_eq!(MinSupport::DEFAULT.min_count(3050), 153);
        assert!(MinSupport::from_f64(0.0).is_err());
        assert!(MinSupport::from_f64(1.5).is_err());
        assert_eq!("3/5".parse::<MinSupport>().unwrap(), ms);
    }

    #[test]
    fn fraction_percent_rounding() {
        assert_eq!(Fraction::new(2, 3).unwrap().percent(), 67);
        assert_eq!(Fraction::new(1, 3).unwrap().percent(), 33);
        assert_eq!(Fraction::new(2, 5).unwrap().percent(), 40);
        assert_eq!(Fraction::new(2, 4).unwrap(), Fraction::new(1, 2).unwrap());
    }

    #[test]
    fn amount_parsing() {
        assert_eq!("12.5".parse::<Amount>().unwrap().to_string(), "12.50");
        assert_eq!("0.07".parse::<Amount>().unwrap().cents(), 7);
        assert!("1.234".parse::<Amount>().is_err());
        assert!("-1".parse::<Amount>().is_err());
        assert!(".".parse::<Amount>().is_err());
    }

    #[test]
    fn rule_conditions() {
        let a: BTreeSet<_> = [Item::new("a", "1").unwrap()].into();
        let b: BTreeSet<_> = [Item::new("b", "1").unwrap()].into();
        let s = Fraction::new(2, 5).unwrap();
        let c = Fraction::new(2, 3).unwrap();
        assert!(Rule::new(a.clone(), b.clone(), s, c).is_ok());
        assert!(Rule::new(a.clone(), a.clone(), s, c).is_err());
        assert!(Rule::new(a.clone(), BTreeSet::new(), s, c).is_err());
        assert!(Rule::new(a, b, c, s).is_err());
    }

    #[test]
    fn item_requires_both_parts() {
        assert!(Item::new("", "x").is_err());
        assert!(Item::new("x", "").is_err());
        assert!("a=b=c".parse::<Item>().unwrap().value() == "b=c");
    }
}
