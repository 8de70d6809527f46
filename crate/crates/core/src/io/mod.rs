//! File formats shared by the pipeline stages.
//!
//! Every file starts with a version line `#fpwatch <kind> <major>.<minor>`.
//! Fields are tab-separated; `%`, tab, CR, LF and `=` inside identifiers are
//! percent-escaped (`%25`, `%09`, `%0D`, `%0A`, `%3D`). Readers reject a
//! different kind or a newer major version.

mod config;
mod records;

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::model::Item;

pub use config::{AccumulatorConfig, EngineConfig, EvaluationConfig};
pub use records::{
    parse_alerts, parse_labels, parse_scores, parse_transactions, write_alerts, write_labels, write_roc_table,
    write_scores, write_summary, write_transactions, AlertRecord, ParseMode, ParseReport, Summary,
};

pub const MAGIC: &str = "#fpwatch";

/// Kind and version of a persisted artifact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatVersion {
    pub kind: &'static str,
    pub major: u32,
    pub minor: u32,
}

impl FormatVersion {
    pub const fn new(kind: &'static str, major: u32, minor: u32) -> Self {
        FormatVersion { kind, major, minor }
    }

    pub fn header_line(&self) -> String {
        format!("{MAGIC} {} {}.{}\n", self.kind, self.major, self.minor)
    }

    /// Validates a header line. A missing or foreign header, a different kind
    /// or a newer major version is an error naming both versions.
    pub fn check(&self, line: &str) -> Result<()> {
        let expected = format!("{} {}.{}", self.kind, self.major, self.minor);
        let found = line.trim_end_matches(['\r', '\n']);
        let mismatch = || Error::Format { expected: expected.clone(), found: found.to_owned() };
        let rest = found.strip_prefix(MAGIC).and_then(|r| r.strip_prefix(' ')).ok_or_else(mismatch)?;
        let (kind, version) = rest.split_once(' ').ok_or_else(mismatch)?;
        let (major, _minor) = version.split_once('.').ok_or_else(mismatch)?;
        let major: u32 = major.parse().map_err(|_| mismatch())?;
        if kind != self.kind || major != self.major {
            return Err(Error::Format { expected, found: rest.to_owned() });
        }
        Ok(())
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' | '\t' | '\n' | '\r' | '=' => {
                let _ = write!(out, "%{:02X}", c as u32);
            }
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String> {
    if !s.contains('%') {
        return Ok(s.to_owned());
    }
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| Error::contract(format!("bad escape in `{s}`")))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| Error::contract(format!("bad escape in `{s}`")))
}

pub fn format_item(item: &Item) -> String {
    format!("{}={}", escape(item.attribute()), escape(item.value()))
}

pub fn parse_item(s: &str) -> Result<Item> {
    let (a, v) =
        s.split_once('=').ok_or_else(|| Error::contract(format!("`{s}` is not of the form attribute=value")))?;
    Item::new(unescape(a)?, unescape(v)?)
}

/// Shortest round-trip rendering of a float, as used in every numeric column.
pub fn format_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:?}")
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Lines of a versioned file after its header, numbered from 2.
/// An empty input yields no lines and no header check.
pub(crate) fn body_lines<R: BufRead>(
    reader: R,
    version: FormatVersion,
) -> Result<impl Iterator<Item = (usize, String)>> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        lines.push((i + 1, line?));
    }
    let mut it = lines.into_iter();
    if let Some((_, first)) = it.next() {
        version.check(&first)?;
    }
    Ok(it.filter(|(_, l)| !l.is_empty() && !l.starts_with('#')))
}
