//! Tagged regular expressions.
//!
//! A [`Regex`] is the abstract syntax the rest of the crate works on: the
//! empty expression, single bytes, tags, alternation, concatenation and
//! generalized repetition `e{lo,hi}`. Tags are positive integers numbered
//! contiguously from 1; tag 0 is reserved for the rightmost-position
//! pseudo-tag used by the fixed-tags analysis.

mod fixed;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use fixed::{apply_fixed_tags, find_fixed_tags, Distance, FixedTags, Fixation};
pub use parse::{parse_regex, ParseError, ParseErrorKind, MAX_REPEAT};

/// Tag identifier. Real tags start at 1.
pub type TagId = u32;

/// The rightmost-position pseudo-tag. It never enters an automaton.
pub const RIGHTMOST: TagId = 0;

/// Abstract syntax of a tagged regular expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regex {
    Empty,
    Symbol(u8),
    Tag(TagId),
    Alt(Box<Regex>, Box<Regex>),
    Cat(Box<Regex>, Box<Regex>),
    /// `body{lo,hi}`; `hi == None` is unbounded.
    Rep(Box<Regex>, u32, Option<u32>),
}

impl Regex {
    pub fn alt(l: Regex, r: Regex) -> Regex {
        Regex::Alt(Box::new(l), Box::new(r))
    }

    pub fn cat(l: Regex, r: Regex) -> Regex {
        Regex::Cat(Box::new(l), Box::new(r))
    }

    pub fn rep(body: Regex, lo: u32, hi: Option<u32>) -> Regex {
        Regex::Rep(Box::new(body), lo, hi)
    }

    /// Right-nested concatenation of a sequence; empty input gives `Empty`.
    pub fn cat_all<I>(items: I) -> Regex
    where
        I: IntoIterator<Item = Regex>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut iter = items.into_iter().rev();
        let Some(mut acc) = iter.next() else {
            return Regex::Empty;
        };
        for item in iter {
            acc = Regex::cat(item, acc);
        }
        acc
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Regex::Empty | Regex::Symbol(_) | Regex::Tag(_) => 1,
            Regex::Alt(l, r) | Regex::Cat(l, r) => 1 + l.size() + r.size(),
            Regex::Rep(e, _, _) => 1 + e.size(),
        }
    }

    /// Tags in left-to-right order of appearance.
    pub fn tags(&self) -> Vec<TagId> {
        let mut out = Vec::new();
        self.collect_tags(&mut out);
        out
    }

    fn collect_tags(&self, out: &mut Vec<TagId>) {
        match self {
            Regex::Empty | Regex::Symbol(_) => {}
            Regex::Tag(t) => out.push(*t),
            Regex::Alt(l, r) | Regex::Cat(l, r) => {
                l.collect_tags(out);
                r.collect_tags(out);
            }
            Regex::Rep(e, _, _) => e.collect_tags(out),
        }
    }

    pub fn tag_set(&self) -> BTreeSet<TagId> {
        self.tags().into_iter().collect()
    }

    /// Bytes mentioned by the expression, sorted and deduplicated.
    pub fn alphabet(&self) -> Vec<u8> {
        fn go(e: &Regex, out: &mut [bool; 256]) {
            match e {
                Regex::Symbol(b) => out[*b as usize] = true,
                Regex::Empty | Regex::Tag(_) => {}
                Regex::Alt(l, r) | Regex::Cat(l, r) => {
                    go(l, out);
                    go(r, out);
                }
                Regex::Rep(e, _, _) => go(e, out),
            }
        }
        let mut seen = [false; 256];
        go(self, &mut seen);
        (0..=255u8).filter(|b| seen[*b as usize]).collect()
    }

    /// Checks the structural invariants: repetition bounds are ordered and
    /// tags form the contiguous range `1..=n` without duplicates.
    pub fn validate(&self) -> Result<(), String> {
        fn bounds(e: &Regex) -> Result<(), String> {
            match e {
                Regex::Empty | Regex::Symbol(_) | Regex::Tag(_) => Ok(()),
                Regex::Alt(l, r) | Regex::Cat(l, r) => bounds(l).and_then(|_| bounds(r)),
                Regex::Rep(b, lo, hi) => {
                    if let Some(hi) = hi {
                        if lo > hi {
                            return Err(format!("repetition bounds {{{lo},{hi}}} out of order"));
                        }
                    }
                    bounds(b)
                }
            }
        }
        bounds(self)?;
        let mut tags = self.tags();
        tags.sort_unstable();
        for (i, t) in tags.iter().enumerate() {
            if *t != i as TagId + 1 {
                return Err(format!("tags are not a contiguous range 1..={}", tags.len()));
            }
        }
        Ok(())
    }

    /// Removes every tag, leaving `Empty` in its place.
    pub fn strip_tags(&self) -> Regex {
        match self {
            Regex::Tag(_) => Regex::Empty,
            Regex::Empty | Regex::Symbol(_) => self.clone(),
            Regex::Alt(l, r) => Regex::alt(l.strip_tags(), r.strip_tags()),
            Regex::Cat(l, r) => Regex::cat(l.strip_tags(), r.strip_tags()),
            Regex::Rep(e, lo, hi) => Regex::rep(e.strip_tags(), *lo, *hi),
        }
    }

    /// Replaces the listed tags with `Empty`.
    pub fn remove_tags(&self, remove: &BTreeSet<TagId>) -> Regex {
        match self {
            Regex::Tag(t) if remove.contains(t) => Regex::Empty,
            Regex::Empty | Regex::Symbol(_) | Regex::Tag(_) => self.clone(),
            Regex::Alt(l, r) => Regex::alt(l.remove_tags(remove), r.remove_tags(remove)),
            Regex::Cat(l, r) => Regex::cat(l.remove_tags(remove), r.remove_tags(remove)),
            Regex::Rep(e, lo, hi) => Regex::rep(e.remove_tags(remove), *lo, *hi),
        }
    }

    /// Tags that occur under a repetition allowing more than one iteration.
    pub fn tags_under_repetition(&self) -> BTreeSet<TagId> {
        fn go(e: &Regex, under: bool, out: &mut BTreeSet<TagId>) {
            match e {
                Regex::Tag(t) if under => {
                    out.insert(*t);
                }
                Regex::Empty | Regex::Symbol(_) | Regex::Tag(_) => {}
                Regex::Alt(l, r) | Regex::Cat(l, r) => {
                    go(l, under, out);
                    go(r, under, out);
                }
                Regex::Rep(b, _, hi) => go(b, under || hi.is_none_or(|h| h > 1), out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, false, &mut out);
        out
    }

    /// JSON form of the AST: `{"kind": ..., "children": [...]}` plus the
    /// tag id, byte or bounds where applicable.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Regex::Empty => json!({ "kind": "Empty" }),
            Regex::Symbol(b) => json!({ "kind": "Symbol", "byte": b, "char": (*b as char).to_string() }),
            Regex::Tag(t) => json!({ "kind": "Tag", "tag": t }),
            Regex::Alt(l, r) => json!({ "kind": "Alt", "children": [l.to_json(), r.to_json()] }),
            Regex::Cat(l, r) => json!({ "kind": "Cat", "children": [l.to_json(), r.to_json()] }),
            Regex::Rep(e, lo, hi) => json!({
                "kind": "Rep",
                "lo": lo,
                "hi": hi.map_or(serde_json::Value::String("inf".into()), |h| h.into()),
                "children": [e.to_json()],
            }),
        }
    }

    /// Renders the expression in the concrete syntax. Tags are written as
    /// `#`, so re-parsing numbers them left to right; this round-trips for
    /// expressions whose tags already appear in increasing order.
    pub fn to_pattern(&self) -> String {
        let mut out = String::new();
        self.write_pattern(&mut out, 0);
        out
    }

    // prec: 0 = alternation context, 1 = concatenation, 2 = repetition operand
    fn write_pattern(&self, out: &mut String, prec: u8) {
        match self {
            Regex::Empty => {
                if prec > 0 {
                    out.push_str("(?:)");
                }
            }
            Regex::Symbol(b) => push_literal(out, *b),
            Regex::Tag(_) => {
                if prec == 2 {
                    out.push_str("(?:#)");
                } else {
                    out.push('#');
                }
            }
            Regex::Alt(l, r) => {
                if prec > 0 {
                    out.push_str("(?:");
                }
                l.write_pattern(out, 0);
                out.push('|');
                r.write_pattern(out, 0);
                if prec > 0 {
                    out.push(')');
                }
            }
            Regex::Cat(l, r) => {
                if prec > 1 {
                    out.push_str("(?:");
                }
                if matches!(**l, Regex::Cat(..)) {
                    l.write_pattern(out, 2);
                } else {
                    l.write_pattern(out, 1);
                }
                r.write_pattern(out, 1);
                if prec > 1 {
                    out.push(')');
                }
            }
            Regex::Rep(e, lo, hi) => {
                e.write_pattern(out, 2);
                match (lo, hi) {
                    (0, None) => out.push('*'),
                    (1, None) => out.push('+'),
                    (0, Some(1)) => out.push('?'),
                    (n, None) => out.push_str(&format!("{{{n},}}")),
                    (n, Some(m)) if n == m => out.push_str(&format!("{{{n}}}")),
                    (n, Some(m)) => out.push_str(&format!("{{{n},{m}}}")),
                }
            }
        }
    }
}

fn push_literal(out: &mut String, b: u8) {
    if parse::is_special(b) {
        out.push('\\');
    }
    if b.is_ascii_graphic() || b == b' ' {
        out.push(b as char);
    } else {
        // Non-printable bytes have no escape in the syntax; emit them raw.
        out.push(char::from(b));
    }
}

impl fmt::Display for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pattern())
    }
}

/// Surrounds every subexpression with a fresh pair of tags, numbering
/// them in pre-order so that the tags nested inside a pair `(open, close)`
/// are exactly `open+1 .. close-1`.
///
/// Returns the tagged expression and the list of tag pairs.
pub fn auto_tag(e: &Regex) -> (Regex, Vec<(TagId, TagId)>) {
    fn go(e: &Regex, next: &mut TagId, pairs: &mut Vec<(TagId, TagId)>) -> Regex {
        *next += 1;
        let open = *next;
        let inner = match e {
            Regex::Empty | Regex::Symbol(_) => e.clone(),
            Regex::Tag(_) => Regex::Empty,
            Regex::Alt(l, r) => {
                let l = go(l, next, pairs);
                Regex::alt(l, go(r, next, pairs))
            }
            Regex::Cat(l, r) => {
                let l = go(l, next, pairs);
                Regex::cat(l, go(r, next, pairs))
            }
            Regex::Rep(b, lo, hi) => Regex::rep(go(b, next, pairs), *lo, *hi),
        };
        *next += 1;
        let close = *next;
        pairs.push((open, close));
        Regex::cat(Regex::Tag(open), Regex::cat(inner, Regex::Tag(close)))
    }
    let mut next = 0;
    let mut pairs = Vec::new();
    let tagged = go(e, &mut next, &mut pairs);
    pairs.sort_unstable();
    (tagged, pairs)
}

/// Nesting structure of tag pairs, used to emit negative tags only for the
/// outermost pair of a bypassed subexpression.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nesting {
    /// `(open, close)` pairs sorted by `open`.
    pub pairs: Vec<(TagId, TagId)>,
}

impl Nesting {
    pub fn new(mut pairs: Vec<(TagId, TagId)>) -> Self {
        pairs.sort_unstable();
        Nesting { pairs }
    }

    /// Tags strictly inside the pair opened by `open`.
    pub fn nested(&self, open: TagId) -> impl Iterator<Item = TagId> + '_ {
        let close = self
            .pairs
            .binary_search_by_key(&open, |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1);
        
        match close {
            Some(c) => open + 1..c,
            None => 0..0,
        }
    }

    /// Keeps the tags of `set` that are not strictly inside a pair whose
    /// opening tag also belongs to `set`.
    pub fn topmost(&self, set: &BTreeSet<TagId>) -> BTreeSet<TagId> {
        set.iter()
            .copied()
            .filter(|&t| {
                !self
                    .pairs
                    .iter()
                    .any(|&(o, c)| o < t && t < c && set.contains(&o))
            })
            .collect()
    }
}

/// Per-tag metadata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagInfo {
    pub id: TagId,
    pub multi_valued: bool,
    pub fixed: Option<Fixation>,
}

/// Metadata for all tags of an expression, indexed by `id - 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagTable {
    pub tags: Vec<TagInfo>,
    /// Present when the expression was tagged by [`auto_tag`].
    pub nesting: Option<Nesting>,
}

impl TagTable {
    pub fn new(count: usize) -> Self {
        TagTable {
            tags: (1..=count as TagId)
                .map(|id| TagInfo { id, multi_valued: false, fixed: None })
                .collect(),
            nesting: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn info(&self, t: TagId) -> &TagInfo {
        &self.tags[t as usize - 1]
    }

    pub fn info_mut(&mut self, t: TagId) -> &mut TagInfo {
        &mut self.tags[t as usize - 1]
    }

    pub fn is_multi(&self, t: TagId) -> bool {
        self.info(t).multi_valued
    }

    /// Tags that take part in automaton construction (not fixed).
    pub fn free_tags(&self) -> Vec<TagId> {
        self.tags.iter().filter(|i| i.fixed.is_none()).map(|i| i.id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_tag_symbol() {
        let (e, pairs) = auto_tag(&Regex::Symbol(b'a'));
        assert_eq!(e, Regex::cat(Regex::Tag(1), Regex::cat(Regex::Symbol(b'a'), Regex::Tag(2))));
        assert_eq!(pairs, vec![(1, 2)]);
    }

    #[test]
    fn auto_tag_empty() {
        let (e, _) = auto_tag(&Regex::Empty);
        assert_eq!(e, Regex::cat(Regex::Tag(1), Regex::cat(Regex::Empty, Regex::Tag(2))));
    }

    #[test]
    fn auto_tag_alt_has_six_contiguous_tags() {
        let (e, pairs) = auto_tag(&Regex::alt(Regex::Symbol(b'a'), Regex::Symbol(b'b')));
        assert_eq!(e.tags(), vec![1, 2, 3, 4, 5, 6]);
        assert!(e.validate().is_ok());
        assert_eq!(pairs, vec![(1, 6), (2, 3), (4, 5)]);
        let nesting = Nesting::new(pairs);
        assert_eq!(nesting.nested(1).collect::<Vec<_>>(), vec![2, 3, 4, 5]);
        assert_eq!(nesting.nested(2).count(), 0);
    }

    #[test]
    fn topmost_tags_drop_nested_pairs() {
        let nesting = Nesting::new(vec![(1, 6), (2, 3), (4, 5)]);
        let all: BTreeSet<TagId> = (1..=6).collect();
        assert_eq!(nesting.topmost(&all), [1, 6].into_iter().collect());
        let inner: BTreeSet<TagId> = [2, 3].into_iter().collect();
        assert_eq!(nesting.topmost(&inner), inner);
    }

    #[test]
    fn pattern_round_trip() {
        for p in ["(a)*#(a|#b)#b*", "a{2,3}b?", "(?:a|)+", "#(?:#)*", "\\*\\#x{4}", ""] {
            let e = parse_regex(p).unwrap();
            assert_eq!(parse_regex(&e.to_pattern()).unwrap(), e, "pattern {p}");
        }
    }

    #[test]
    fn json_tree() {
        let j = parse_regex("#a|b*").unwrap().to_json();
        assert_eq!(j["kind"], "Alt");
        assert_eq!(j["children"][0]["children"][0]["tag"], 1);
        assert_eq!(j["children"][1]["hi"], "inf");
    }

    #[test]
    fn under_repetition() {
        let e = parse_regex("(a)*#(a|#b)#b?").unwrap();
        assert_eq!(e.tags_under_repetition(), [1, 2].into_iter().collect());
    }

    #[test]
    fn validate_rejects_gaps() {
        let e = Regex::cat(Regex::Tag(1), Regex::Tag(3));
        assert!(e.validate().is_err());
        let e = Regex::rep(Regex::Empty, 3, Some(2));
        assert!(e.validate().is_err());
    }
}
