//! Windowed accumulation of suspicion into alert values.
//!
//! `alert = sum(suspicion * f(t) * amount)` over the records of the
//! accumulation window `(t2, t1]`, where `f` is an expiring function that
//! weights recent records more (or equally, for the step function).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::SuspicionRecord;

/// Recency weight over the accumulation window `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpiringFunction {
    /// 1 after `cutoff`, 0 at or before it.
    Step { cutoff: i64 },
    /// `ln(1 + x * (e - 1))` with `x` the position inside the window.
    NaturalLog { start: i64, end: i64 },
    /// `x^degree` with `x` the position inside the window.
    Polynomial { degree: u32, start: i64, end: i64 },
}

impl ExpiringFunction {
    pub fn start(&self) -> i64 {
        match *self {
            ExpiringFunction::Step { cutoff } => cutoff,
            ExpiringFunction::NaturalLog { start, .. } | ExpiringFunction::Polynomial { start, .. } => start,
        }
    }
}

/// Weight in `[0, 1]` of a record at time `t`.
pub fn expiring_weight(f: ExpiringFunction, t: i64) -> Result<f64> {
    let position = |start: i64, end: i64| -> Result<Option<f64>> {
        if start >= end {
            return Err(Error::contract(format!("expiring window ({start}, {end}] is empty")));
        }
        if t > end {
            return Err(Error::contract(format!("record at {t} lies after the window end {end}")));
        }
        Ok((t > start).then(|| (t - start) as f64 / (end - start) as f64))
    };
    Ok(match f {
        ExpiringFunction::Step { cutoff } => {
            if t > cutoff {
                1.0
            } else {
                0.0
            }
        }
        ExpiringFunction::NaturalLog { start, end } => match position(start, end)? {
            Some(x) => (1.0 + x * (std::f64::consts::E - 1.0)).ln().clamp(0.0, 1.0),
            None => 0.0,
        },
        ExpiringFunction::Polynomial { degree, start, end } => {
            if degree == 0 {
                return Err(Error::contract("polynomial degree must be positive"));
            }
            match position(start, end)? {
                Some(x) => x.powi(degree as i32),
                None => 0.0,
            }
        }
    })
}

pub fn alert_value(records: &[SuspicionRecord], f: ExpiringFunction) -> Result<f64> {
    let mut sum = 0.0;
    for r in records {
        sum += r.suspicion * expiring_weight(f, r.scored_at)? * r.transaction.amount.as_f64();
    }
    Ok(sum)
}

/// Shape of the expiring function, independent of where the window sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpiringShape {
    #[default]
    Step,
    NaturalLog,
    Polynomial {
        degree: u32,
    },
}

impl ExpiringShape {
    pub fn over(self, start: i64, end: i64) -> ExpiringFunction {
        match self {
            ExpiringShape::Step => ExpiringFunction::Step { cutoff: start },
            ExpiringShape::NaturalLog => ExpiringFunction::NaturalLog { start, end },
            ExpiringShape::Polynomial { degree } => ExpiringFunction::Polynomial { degree, start, end },
        }
    }
}

/// Where the lower edge of the accumulation window sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowAnchor {
    /// `t2 = t1 - span`.
    Sliding { span: i64 },
    /// `t2` is the moment the profile was last updated.
    SinceLastUpdate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub severity: String,
}

/// Thresholds in ascending order; a severity's rank is its position.
pub fn validate_thresholds(thresholds: &[Threshold]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::config("at least one alert threshold is required"));
    }
    for t in thresholds {
        if !t.value.is_finite() || t.severity.is_empty() {
            return Err(Error::config(format!("bad threshold {:?}", t)));
        }
    }
    if let Some(w) = thresholds.windows(2).find(|w| w[0].value >= w[1].value) {
        return Err(Error::config(format!(
            "thresholds must be strictly ascending: {} then {}",
            w[0].value, w[1].value
        )));
    }
    Ok(())
}

/// Highest severity whose threshold the value reaches.
pub fn severity_for(thresholds: &[Threshold], value: f64) -> Option<&str> {
    thresholds.iter().rev().find(|t| value >= t.value).map(|t| t.severity.as_str())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlertState {
    records: Vec<SuspicionRecord>,
    shape: ExpiringShape,
    anchor: WindowAnchor,
    expiring: ExpiringFunction,
    thresholds: Vec<Threshold>,
    profile_updated_at: i64,
    now: i64,
}

impl AlertState {
    pub fn new(
        shape: ExpiringShape,
        anchor: WindowAnchor,
        thresholds: Vec<Threshold>,
        profile_updated_at: i64,
        now: i64,
    ) -> Result<Self> {
        validate_thresholds(&thresholds)?;
        if let WindowAnchor::Sliding { span } = anchor {
            if span <= 0 {
                return Err(Error::config(format!("accumulation span must be positive, got {span}")));
            }
        }
        if let ExpiringShape::Polynomial { degree: 0 } = shape {
            return Err(Error::config("polynomial degree must be positive"));
        }
        let mut state = AlertState {
            records: Vec::new(),
            shape,
            anchor,
            expiring: shape.over(now - 1, now),
            thresholds,
            profile_updated_at,
            now,
        };
        state.expiring = state.function_at(now)?;
        Ok(state)
    }

    fn function_at(&self, now: i64) -> Result<ExpiringFunction> {
        let start = match self.anchor {
            WindowAnchor::Sliding { span } => now - span,
            WindowAnchor::SinceLastUpdate => self.profile_updated_at,
        };
        if start >= now && !matches!(self.shape, ExpiringShape::Step) {
            return Err(Error::contract(format!("accumulation window ({start}, {now}] is empty")));
        }
        Ok(self.shape.over(start, now))
    }

    pub fn records(&self) -> &[SuspicionRecord] {
        &self.records
    }

    pub fn expiring(&self) -> ExpiringFunction {
        self.expiring
    }

    pub fn thresholds(&self) -> &[Threshold] {
        &self.thresholds
    }

    pub fn now(&self) -> i64 {
        self.now
    }

    pub fn window_start(&self) -> i64 {
        self.expiring.start()
    }

    pub fn set_profile_updated_at(&mut self, t: i64) {
        self.profile_updated_at = t;
    }

    /// Advances the window end to `now`, evicts records that fell out and
    /// appends the new ones that lie inside.
    pub fn slide(&mut self, now: i64, new_records: impl IntoIterator<Item = SuspicionRecord>) -> Result<()> {
        let f = self.function_at(now)?;
        let start = f.start();
        let mut last = self.records.last().map(|r| r.scored_at);
        let mut incoming = Vec::new();
        for r in new_records {
            if r.scored_at > now {
                return Err(Error::contract(format!("record at {} is later than now = {now}", r.scored_at)));
            }
            if last.is_some_and(|l| r.scored_at < l) {
                return Err(Error::contract("new records must be sorted by scored_at"));
            }
            last = Some(r.scored_at);
            incoming.push(r);
        }
        self.now = now;
        self.expiring = f;
        self.records.retain(|r| r.scored_at > start && r.scored_at <= now);
        self.records.extend(incoming.into_iter().filter(|r| r.scored_at > start));
        Ok(())
    }

    pub fn alert_value(&self) -> Result<f64> {
        alert_value(&self.records, self.expiring)
    }

    /// Alert value and the highest severity it reaches, if any.
    pub fn fire(&self) -> Result<(f64, Option<&str>)> {
        let v = self.alert_value()?;
        Ok((v, severity_for(&self.thresholds, v)))
    }
}
