use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::evaluator::{Label, OutcomeMatrix, RocCurve};
use crate::matcher::SuspicionRecord;
use crate::model::{Amount, Item, Transaction};

use super::{body_lines, escape, format_f64, format_item, parse_f64, parse_item, unescape, FormatVersion};

pub const TRANSACTIONS: FormatVersion = FormatVersion::new("transactions", 1, 0);
pub const LABELS: FormatVersion = FormatVersion::new("labels", 1, 0);
pub const SCORES: FormatVersion = FormatVersion::new("scores", 1, 0);
pub const ALERTS: FormatVersion = FormatVersion::new("alerts", 1, 0);
pub const ROC: FormatVersion = FormatVersion::new("roc", 1, 0);
pub const SUMMARY: FormatVersion = FormatVersion::new("summary", 1, 0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and report them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParseReport<T> {
    pub records: Vec<T>,
    /// `(line number, message)` of every skipped line.
    pub skipped: Vec<(usize, String)>,
}

fn parse_lines<R: BufRead, T>(
    reader: R,
    version: FormatVersion,
    mode: ParseMode,
    mut parse: impl FnMut(&str) -> Result<T>,
) -> Result<ParseReport<T>> {
    let mut report = ParseReport { records: Vec::new(), skipped: Vec::new() };
    for (line, text) in body_lines(reader, version)? {
        match parse(&text) {
            Ok(r) => report.records.push(r),
            Err(e) => {
                let message = match e {
                    Error::Parse { message, .. } => message,
                    other => other.to_string(),
                };
                match mode {
                    ParseMode::Strict => return Err(Error::Parse { line, message }),
                    ParseMode::Lenient => report.skipped.push((line, message)),
                }
            }
        }
    }
    Ok(report)
}

fn malformed(message: impl Into<String>) -> Error {
    Error::Parse { line: 0, message: message.into() }
}

fn parse_items<'a>(fields: impl Iterator<Item = &'a str>) -> Result<BTreeSet<Item>> {
    let mut items = BTreeSet::new();
    let mut attrs = BTreeSet::new();
    for f in fields {
        let item = parse_item(f)?;
        if !attrs.insert(item.attribute().to_owned()) {
            return Err(malformed(format!("attribute `{}` appears twice", item.attribute())));
        }
        items.insert(item);
    }
    Ok(items)
}

fn push_items(out: &mut String, items: &BTreeSet<Item>) {
    for i in items {
        out.push('\t');
        out.push_str(&format_item(i));
    }
}

fn parse_transaction_fields<'a>(fields: &mut impl Iterator<Item = &'a str>) -> Result<(String, i64, Amount)> {
    let entity = unescape(fields.next().filter(|s| !s.is_empty()).ok_or_else(|| malformed("missing entity_id"))?)?;
    let ts = fields.next().ok_or_else(|| malformed("missing timestamp"))?;
    let ts: i64 = ts.parse().map_err(|_| malformed(format!("bad timestamp `{ts}`")))?;
    let amount: Amount = fields.next().ok_or_else(|| malformed("missing amount"))?.parse()?;
    Ok((entity, ts, amount))
}

/// `entity_id \t timestamp \t amount \t attr=value ...`
pub fn parse_transactions<R: BufRead>(reader: R, mode: ParseMode) -> Result<ParseReport<Transaction>> {
    parse_lines(reader, TRANSACTIONS, mode, |line| {
        let mut fields = line.split('\t');
        let (entity_id, timestamp, amount) = parse_transaction_fields(&mut fields)?;
        let items = parse_items(fields)?;
        Ok(Transaction { entity_id, timestamp, items, amount })
    })
}

pub fn write_transactions<W: Write>(mut w: W, transactions: &[Transaction]) -> Result<()> {
    let mut out = TRANSACTIONS.header_line();
    for t in transactions {
        let _ = write!(out, "{}\t{}\t{}", escape(&t.entity_id), t.timestamp, t.amount);
        push_items(&mut out, &t.items);
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<Label>> {
    Ok(parse_lines(reader, LABELS, ParseMode::Strict, |l| l.trim().parse::<Label>())?.records)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[Label]) -> Result<()> {
    let mut out = LABELS.header_line();
    for l in labels {
        out.push_str(l.as_str());
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// `entity_id \t timestamp \t amount \t similarity \t suspicion \t attr=value ...`
pub fn write_scores<W: Write>(mut w: W, records: &[SuspicionRecord]) -> Result<()> {
    let mut out = SCORES.header_line();
    for r in records {
        let t = &r.transaction;
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            escape(&t.entity_id),
            r.scored_at,
            t.amount,
            format_f64(r.similarity),
            format_f64(r.suspicion)
        );
        push_items(&mut out, &t.items);
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn parse_scores<R: BufRead>(reader: R) -> Result<Vec<SuspicionRecord>> {
    let report = parse_lines(reader, SCORES, ParseMode::Strict, |line| {
        let mut fields = line.split('\t');
        let (entity_id, timestamp, amount) = parse_transaction_fields(&mut fields)?;
        let mut num = |name: &str| {
            let s = fields.next().ok_or_else(|| malformed(format!("missing {name}")))?;
            parse_f64(s).ok_or_else(|| malformed(format!("bad {name} `{s}`")))
        };
        let similarity = num("similarity")?;
        let suspicion = num("suspicion")?;
        if similarity.is_nan() || similarity < 0.0 || suspicion.is_nan() || suspicion <= 0.0 || suspicion > 1.0 {
            return Err(malformed("similarity or suspicion out of range"));
        }
        let items = parse_items(fields)?;
        Ok(SuspicionRecord {
            transaction: Transaction { entity_id, timestamp, items, amount },
            similarity,
            suspicion,
            scored_at: timestamp,
        })
    })?;
    Ok(report.records)
}

/// One line of accumulator output: the alert value of an entity's window
/// ending at `window_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlertRecord {
    pub entity_id: String,
    pub window_end: i64,
    pub alert_value: f64,
    pub severity: Option<String>,
    pub record_count: usize,
}

/// `entity_id \t window_end \t alert_value \t severity|- \t record_count`
pub fn write_alerts<W: Write>(mut w: W, alerts: &[AlertRecord]) -> Result<()> {
    let mut out = ALERTS.header_line();
    for a in alerts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            escape(&a.entity_id),
            a.window_end,
            format_f64(a.alert_value),
            a.severity.as_deref().map_or_else(|| "-".to_owned(), escape),
            a.record_count
        );
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn parse_alerts<R: BufRead>(reader: R) -> Result<Vec<AlertRecord>> {
    let report = parse_lines(reader, ALERTS, ParseMode::Strict, |line| {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(malformed(format!("expected 5 fields, found {}", f.len())));
        }
        Ok(AlertRecord {
            entity_id: unescape(f[0])?,
            window_end: f[1].parse().map_err(|_| malformed("bad window end"))?,
            alert_value: parse_f64(f[2]).ok_or_else(|| malformed("bad alert value"))?,
            severity: if f[3] == "-" { None } else { Some(unescape(f[3])?) },
            record_count: f[4].parse().map_err(|_| malformed("bad record count"))?,
        })
    })?;
    Ok(report.records)
}

/// `threshold \t fpr \t tpr`, one row per curve point.
pub fn write_roc_table<W: Write>(mut w: W, curve: &RocCurve) -> Result<()> {
    let mut out = ROC.header_line();
    out.push_str("# threshold\tfpr\ttpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{}\t{}\t{}", format_f64(p.threshold), format_f64(p.fpr), format_f64(p.tpr));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Headline numbers of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub records: usize,
    pub fraud: usize,
    pub auc: f64,
    pub alert_threshold: f64,
    pub outcomes: OutcomeMatrix,
    pub cost: f64,
    /// AUC when ranking by accumulated alert value, if alerts were supplied.
    pub alert_level_auc: Option<f64>,
}

pub fn write_summary<W: Write>(mut w: W, s: &Summary) -> Result<()> {
    let mut out = SUMMARY.header_line();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}\t{v}");
    };
    kv("records", s.records.to_string());
    kv("fraud", s.fraud.to_string());
    kv("auc", format_f64(s.auc));
    kv("alert_threshold", format_f64(s.alert_threshold));
    kv("hit", s.outcomes.hit.to_string());
    kv("false_alarm", s.outcomes.false_alarm.to_string());
    kv("miss", s.outcomes.miss.to_string());
    kv("normal", s.outcomes.normal.to_string());
    kv("cost", format_f64(s.cost));
    if let Some(a) = s.alert_level_auc {
        kv("alert_level_auc", format_f64(a));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}
