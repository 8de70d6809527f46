//! Profile persistence.
//!
//! ```text
//! #fpwatch profile 1.0
//! entity  <id>
//! min_sup <num>/<den>
//! total   <transactions>
//! order   <item> <count>           one per header entry, in L order
//! pending <item> <count>           zero or more
//! node    <depth> <item> <count>   preorder, root children at depth 1
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::io::{body_lines, escape, format_item, parse_item, unescape, FormatVersion};
use crate::model::MinSupport;

use super::FpTree;

pub const PROFILE_FORMAT: FormatVersion = FormatVersion::new("profile", 1, 0);

/// File name used for an entity's profile inside a profile directory.
pub fn profile_file_name(entity_id: &str) -> String {
    format!("{}.fpt", escape(entity_id).replace('/', "%2F"))
}

pub fn write_profile<W: Write>(mut w: W, entity_id: &str, tree: &FpTree) -> Result<()> {
    let mut out = PROFILE_FORMAT.header_line();
    let ms = tree.min_sup().fraction();
    out.push_str(&format!("entity\t{}\n", escape(entity_id)));
    out.push_str(&format!("min_sup\t{}/{}\n", ms.numer(), ms.denom()));
    out.push_str(&format!("total\t{}\n", tree.total_transactions()));
    for e in tree.header() {
        out.push_str(&format!("order\t{}\t{}\n", format_item(&e.item), e.total_count));
    }
    for (item, count) in tree.pending() {
        out.push_str(&format!("pending\t{}\t{}\n", format_item(item), count));
    }
    for (depth, item, count) in tree.preorder() {
        out.push_str(&format!("node\t{}\t{}\t{}\n", depth, format_item(item), count));
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_profile<R: BufRead>(r: R) -> Result<(String, FpTree)> {
    let mut entity = None;
    let mut min_sup = None;
    let mut total = None;
    let mut order = Vec::new();
    let mut pending = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut seen_any = false;
    for (line_no, line) in body_lines(r, PROFILE_FORMAT)? {
        seen_any = true;
        let perr = |m: String| Error::Parse { line: line_no, message: m };
        let fields: Vec<&str> = line.split('\t').collect();
        let count = |s: &str| s.parse::<u64>().map_err(|_| perr(format!("bad count `{s}`")));
        match (fields[0], fields.len()) {
            ("entity", 2) => entity = Some(unescape(fields[1])?),
            ("min_sup", 2) => min_sup = Some(fields[1].parse::<MinSupport>().map_err(|e| perr(e.to_string()))?),
            ("total", 2) => total = Some(count(fields[1])?),
            ("order", 3) => order.push((parse_item(fields[1]).map_err(|e| perr(e.to_string()))?, count(fields[2])?)),
            ("pending", 3) => {
                pending.insert(parse_item(fields[1]).map_err(|e| perr(e.to_string()))?, count(fields[2])?);
            }
            ("node", 4) => {
                let depth = fields[1].parse::<usize>().map_err(|_| perr(format!("bad depth `{}`", fields[1])))?;
                nodes.push((depth, parse_item(fields[2]).map_err(|e| perr(e.to_string()))?, count(fields[3])?));
            }
            _ => return Err(perr(format!("unexpected record `{}`", fields[0]))),
        }
    }
    if !seen_any {
        return Err(Error::Format { expected: "profile 1.0".into(), found: "empty file".into() });
    }
    let missing = |f: &str| Error::Parse { line: 0, message: format!("profile lacks `{f}`") };
    let entity = entity.ok_or_else(|| missing("entity"))?;
    let tree = FpTree::from_parts(
        min_sup.ok_or_else(|| missing("min_sup"))?,
        total.ok_or_else(|| missing("total"))?,
        order,
        pending,
        nodes,
    )?;
    Ok((entity, tree))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;
    use crate::model::Item;

    fn arb_transactions() -> impl Strategy<Value = Vec<BTreeSet<Item>>> {
        let item = (0u8..4, 0u8..3).prop_map(|(a, v)| Item::new(format!("a{a}"), format!("v{v}")).unwrap());
        prop::collection::vec(prop::collection::btree_set(item, 0..5), 0..30)
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(txs in arb_transactions(), extra in arb_transactions(), den in 1u64..10) {
            let mut tree = FpTree::build(&txs, MinSupport::new(1, den).unwrap());
            for t in &extra {
                tree.insert_incremental(t);
            }
            let mut buf = Vec::new();
            write_profile(&mut buf, "user one", &tree).unwrap();
            let (entity, back) = read_profile(&buf[..]).unwrap();
            prop_assert_eq!(entity, "user one");
            prop_assert_eq!(&back, &tree);
            prop_assert_eq!(back.pending(), tree.pending());
            let mut again = Vec::new();
            write_profile(&mut again, "user one", &back).unwrap();
            prop_assert_eq!(again, buf);
        }
    }

    #[test]
    fn newer_major_is_rejected() {
        let text = "#fpwatch profile 2.0\nentity\tu1\n";
        assert!(matches!(read_profile(text.as_bytes()), Err(Error::Format { .. })));
    }

    #[test]
    fn empty_file_is_not_a_profile() {
        assert!(read_profile(&b""[..]).is_err());
    }

    #[test]
    fn file_names_are_safe() {
        assert_eq!(profile_file_name("u1"), "u1.fpt");
        assert_eq!(profile_file_name("a/b"), "a%2Fb.fpt");
    }
}
