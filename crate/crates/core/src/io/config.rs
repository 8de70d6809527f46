use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::accumulator::{validate_thresholds, ExpiringShape, Threshold, WindowAnchor};
use crate::error::{Error, Result};
use crate::evaluator::CostParams;
use crate::matcher::{CreditParams, WeightTable};
use crate::model::{AmountBucketing, BucketSpec, GranularityConfig, HourBucket, MinSupport, RangeBucket, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccumulatorConfig {
    #[serde(default)]
    pub shape: ExpiringShape,
    #[serde(default = "default_anchor")]
    pub anchor: WindowAnchor,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<Threshold>,
}

fn default_anchor() -> WindowAnchor {
    WindowAnchor::Sliding { span: 7 * 86_400 }
}

fn default_thresholds() -> Vec<Threshold> {
    [(100.0, "warn"), (500.0, "alert"), (2000.0, "block")]
        .into_iter()
        .map(|(value, s)| Threshold { value, severity: s.into() })
        .collect()
}

impl Default for AccumulatorConfig {
    fn default() -> Self {
        AccumulatorConfig { shape: ExpiringShape::Step, anchor: default_anchor(), thresholds: default_thresholds() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Per-transaction suspicion at or above which an alert is raised.
    #[serde(default = "default_alert_threshold")]
    pub alert_threshold: f64,
    #[serde(default)]
    pub cost: CostParams,
}

fn default_alert_threshold() -> f64 {
    0.5
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { alert_threshold: default_alert_threshold(), cost: CostParams::default() }
    }
}

/// Every tunable of the pipeline, loaded from a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default = "default_min_sup")]
    pub min_sup: f64,
    #[serde(default = "default_window")]
    pub window: WindowSpec,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_rebuild_fraction")]
    pub rebuild_fraction: f64,
    #[serde(default)]
    pub weights: WeightTable,
    #[serde(default = "default_granularity")]
    pub granularity: GranularityConfig,
    #[serde(default)]
    pub accumulator: AccumulatorConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn default_min_sup() -> f64 {
    0.05
}

fn default_window() -> WindowSpec {
    WindowSpec::Count(500)
}

fn default_epsilon() -> f64 {
    CreditParams::DEFAULT_EPSILON
}

fn default_rebuild_fraction() -> f64 {
    0.25
}

/// Buckets for the attributes the simulator emits: `time` into
/// morning/afternoon/evening/night, `ip` into its /16 prefix, and the
/// transaction amount into `amount=L10 | L50 | L100 | L500 | LX`.
pub fn default_granularity() -> GranularityConfig {
    let hb = |start, end, label: &str| HourBucket { start, end, label: label.into() };
    let rb = |lo, hi, label: &str| RangeBucket { lo, hi, label: label.into() };
    let mut attributes = BTreeMap::new();
    attributes.insert(
        "time".to_owned(),
        BucketSpec::HourOfDay { buckets: vec![hb(6, 12, "MR"), hb(12, 17, "AF"), hb(17, 22, "EV"), hb(22, 6, "NT")] },
    );
    attributes.insert("ip".to_owned(), BucketSpec::IpPrefix { octets: 2 });
    GranularityConfig {
        attributes,
        default: Some(BucketSpec::PassThrough),
        amount: Some(AmountBucketing {
            attribute: "amount".into(),
            spec: BucketSpec::Ranges {
                ranges: vec![
                    rb(0.0, Some(10.0), "L10"),
                    rb(10.0, Some(50.0), "L50"),
                    rb(50.0, Some(100.0), "L100"),
                    rb(100.0, Some(500.0), "L500"),
                    rb(500.0, None, "LX"),
                ],
            },
        }),
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            min_sup: default_min_sup(),
            window: default_window(),
            epsilon: default_epsilon(),
            rebuild_fraction: default_rebuild_fraction(),
            weights: WeightTable::default(),
            granularity: default_granularity(),
            accumulator: AccumulatorConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::config(format!("config document: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        MinSupport::from_f64(self.min_sup)?;
        self.window.validate()?;
        CreditParams::new(self.epsilon)?;
        if !(self.rebuild_fraction > 0.0 && self.rebuild_fraction <= 1.0) {
            return Err(Error::config(format!("rebuild_fraction must lie in (0, 1], got {}", self.rebuild_fraction)));
        }
        self.weights.validate()?;
        self.granularity.validate()?;
        validate_thresholds(&self.accumulator.thresholds)?;
        match self.accumulator.anchor {
            WindowAnchor::Sliding { span } if span <= 0 => {
                return Err(Error::config(format!("accumulator.anchor span must be positive, got {span}")))
            }
            _ => {}
        }
        if let ExpiringShape::Polynomial { degree: 0 } = self.accumulator.shape {
            return Err(Error::config("accumulator.shape degree must be positive"));
        }
        if self.evaluation.alert_threshold.is_nan() {
            return Err(Error::config("evaluation.alert_threshold must be a number"));
        }
        self.evaluation.cost.validate()
    }

    pub fn min_support(&self) -> MinSupport {
        MinSupport::from_f64(self.min_sup).expect("validated")
    }

    pub fn credit_params(&self) -> CreditParams {
        CreditParams::new(self.epsilon).expect("validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(EngineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_document_fills_defaults() {
        let cfg = EngineConfig::from_toml("min_sup = 0.1\nwindow = { time = 86400 }\n").unwrap();
        assert_eq!(cfg.window, WindowSpec::Time(86_400));
        assert_eq!(cfg.epsilon, 0.01);
        assert_eq!(cfg.min_support(), MinSupport::new(1, 10).unwrap());
    }

    #[test]
    fn out_of_range_fields_are_named() {
        for (doc, field) in [
            ("min_sup = 1.5", "min_sup"),
            ("epsilon = 0.0", "epsilon"),
            ("rebuild_fraction = 2.0", "rebuild_fraction"),
            ("window = { count = 0 }", "window.count"),
            ("[accumulator]\nthresholds = []", "threshold"),
            ("[weights]\nweights = { ip = -1.0 }", "weights.ip"),
            ("[evaluation.cost]\nchallenge_cost = -1.0\nmiss_cost = \"full_amount\"", "challenge_cost"),
        ] {
            let err = EngineConfig::from_toml(doc).unwrap_err();
            assert!(err.to_string().contains(field), "{doc}: {err}");
        }
        assert!(EngineConfig::from_toml("bogus = 1").is_err());
    }
}
