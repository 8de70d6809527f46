//! ROC curves, outcome matrices and detection cost.
//!
//! Fraud is the positive class and a higher score means more fraud-like.
//! The cost model charges a fixed challenge cost per alert and the lost
//! amount (or a fixed penalty) per missed fraud; normal outcomes are free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Legal,
    Fraud,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Legal => "legal",
            Label::Fraud => "fraud",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legal" => Ok(Label::Legal),
            "fraud" => Ok(Label::Fraud),
            _ => Err(Error::contract(format!("unknown label `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Scores at or above this value are alerts; `+inf` for the origin.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn check_lengths(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Evaluation(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(x) = scores.iter().find(|x| x.is_nan()) {
        return Err(Error::Evaluation(format!("score {x} is not a number")));
    }
    Ok(())
}

/// Sweeps the alert threshold over every distinct score, highest first.
pub fn roc(scores: &[f64], labels: &[Label]) -> Result<RocCurve> {
    check_lengths(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == Label::Fraud).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation("ROC needs at least one fraud and one legal record".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc2 = 0u128; // twice the area, in units of 1/(pos*neg)
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == threshold {
            match labels[order[i]] {
                Label::Fraud => tp += 1,
                Label::Legal => fp += 1,
            }
            i += 1;
        }
        auc2 += ((fp - fp0) * (tp + tp0)) as u128;
        points.push(RocPoint { threshold, fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64 });
    }
    let auc = auc2 as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve { points, auc })
}

/// Trapezoidal area under a list of points.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeMatrix {
    pub hit: usize,
    pub false_alarm: usize,
    pub miss: usize,
    pub normal: usize,
}

impl OutcomeMatrix {
    pub fn total(&self) -> usize {
        self.hit + self.false_alarm + self.miss + self.normal
    }

    pub fn alerts(&self) -> usize {
        self.hit + self.false_alarm
    }
}

/// Alert iff `score >= threshold`.
pub fn outcomes(scores: &[f64], labels: &[Label], threshold: f64) -> Result<OutcomeMatrix> {
    check_lengths(scores, labels)?;
    let mut m = OutcomeMatrix::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, Label::Fraud) => m.hit += 1,
            (true, Label::Legal) => m.false_alarm += 1,
            (false, Label::Fraud) => m.miss += 1,
            (false, Label::Legal) => m.normal += 1,
        }
    }
    Ok(m)
}

/// Amounts of the fraud records that raise no alert at `threshold`.
pub fn missed_fraud_amounts(scores: &[f64], labels: &[Label], amounts: &[f64], threshold: f64) -> Result<Vec<f64>> {
    check_lengths(scores, labels)?;
    if amounts.len() != scores.len() {
        return Err(Error::Evaluation(format!("{} amounts for {} records", amounts.len(), scores.len())));
    }
    Ok(scores
        .iter()
        .zip(labels)
        .zip(amounts)
        .filter(|((&s, &l), _)| l == Label::Fraud && s < threshold)
        .map(|(_, &a)| a)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissCost {
    /// A miss loses the transaction amount.
    FullAmount,
    /// A miss costs a fixed value.
    FixedPerMiss(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub challenge_cost: f64,
    pub miss_cost: MissCost,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { challenge_cost: 5.0, miss_cost: MissCost::FullAmount }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.challenge_cost.is_finite() && self.challenge_cost >= 0.0) {
            return Err(Error::config(format!("challenge_cost must be >= 0, got {}", self.challenge_cost)));
        }
        if let MissCost::FixedPerMiss(v) = self.miss_cost {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("fixed miss cost must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Total detection cost. `missed_amounts` must list one amount per miss when
/// misses are charged at full amount.
pub fn total_cost(matrix: &OutcomeMatrix, missed_amounts: Option<&[f64]>, params: &CostParams) -> Result<f64> {
    let challenges = params.challenge_cost * matrix.alerts() as f64;
    let misses = match params.miss_cost {
        MissCost::FixedPerMiss(v) => v * matrix.miss as f64,
        MissCost::FullAmount => match missed_amounts {
            Some(a) if a.len() == matrix.miss => a.iter().sum(),
            Some(a) => return Err(Error::Evaluation(format!("{} missed amounts for {} misses", a.len(), matrix.miss))),
            None if matrix.miss == 0 => 0.0,
            None => return Err(Error::Evaluation("full-amount cost needs the missed fraud amounts".into())),
        },
    };
    Ok(challenges + misses)
}

/// Cost at every distinct threshold, highest first, plus a final "alert on nothing" row.
pub fn cost_curve(scores: &[f64], labels: &[Label], amounts: &[f64], params: &CostParams) -> Result<Vec<(f64, f64)>> {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds.insert(0, f64::INFINITY);
    thresholds
        .into_iter()
        .map(|th| {
            let m = outcomes(scores, labels, th)?;
            let missed = missed_fraud_amounts(scores, labels, amounts, th)?;
            Ok((th, total_cost(&m, Some(&missed), params)?))
        })
        .collect()
}
