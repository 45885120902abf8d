//! Multi-pass TDFA: no registers; transitions carry backlink arrays, a
//! forward pass records the path and backward passes extract submatches.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::determinize::{ByteClasses, Closure, StateId};
use crate::error::{Error, Result};
use crate::resyntax::{Nesting, TagId};
use crate::tnfa::{SignedTag, Tnfa};

/// Index into the backlink array of the preceding transition, and the
/// tags seen on the path fragment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Backlink {
    pub i: u32,
    pub h: Vec<SignedTag>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MpTransition {
    pub to: StateId,
    pub backlinks: Vec<Backlink>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MpState {
    pub trans: Vec<Option<MpTransition>>,
    /// Final backlink, present iff the state is final.
    pub fin: Option<Backlink>,
    /// TNFA states of the kernel with their origin index.
    pub kernel: Vec<(u32, u32)>,
}

/// A multi-pass TDFA. State 0 is initial.
#[derive(Clone, Debug, Serialize)]
pub struct MultipassTdfa {
    pub ntags: usize,
    pub classes: ByteClasses,
    pub states: Vec<MpState>,
    /// When present, a negative opening tag also stands for every tag
    /// nested inside its pair.
    pub nesting: Option<Nesting>,
    #[serde(skip)]
    flat: Flat,
}

/// Execution-friendly layout: backlinks of all transitions in one array,
/// tag sequences in another.
#[derive(Clone, Debug, Default)]
struct Flat {
    class_of: Vec<u16>,
    nclasses: usize,
    next: Vec<u32>,
    /// Start of the backlink array of each transition.
    first: Vec<u32>,
    links: Vec<(u32, u32, u32)>,
    fin: Vec<Option<(u32, u32, u32)>>,
    tags: Vec<SignedTag>,
}

const NONE: u32 = u32::MAX;

/// Per-TNFA-state origin indices of a closure, numbered by first
/// appearance of each origin.
pub fn unique_origins(origins: &[u32]) -> Vec<u32> {
    let mut ids: HashMap<u32, u32> = HashMap::new();
    origins
        .iter()
        .map(|o| {
            let n = ids.len() as u32;
            *ids.entry(*o).or_insert(n)
        })
        .collect()
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Key {
    confs: Vec<(u32, Vec<SignedTag>, u32)>,
}

/// Builds the multi-pass TDFA of `nfa`.
pub fn determinize_multipass(nfa: &Tnfa, nesting: Option<Nesting>, max_states: usize) -> Result<MultipassTdfa> {
    let classes = ByteClasses::new(&nfa.alphabet);
    let mut cl = Closure::new(nfa);
    let mut states: Vec<MpState> = Vec::new();
    let mut kernels: Vec<Key> = Vec::new();
    let mut index: HashMap<Key, StateId> = HashMap::new();

    let mut add = |key: Key, states: &mut Vec<MpState>, kernels: &mut Vec<Key>| -> Result<StateId> {
        if let Some(&s) = index.get(&key) {
            return Ok(s);
        }
        if states.len() >= max_states {
            return Err(Error::TooManyStates { limit: max_states });
        }
        let s = states.len() as StateId;
        let fin = key
            .confs
            .iter()
            .find(|c| c.0 == nfa.fin)
            .map(|c| Backlink { i: c.2, h: c.1.clone() });
        states.push(MpState {
            trans: vec![None; classes.len()],
            fin,
            kernel: key.confs.iter().map(|c| (c.0, c.2)).collect(),
        });
        kernels.push(key.clone());
        index.insert(key, s);
        Ok(s)
    };

    let init = cl.run(vec![(nfa.initial, ())]);
    let key = Key { confs: init.into_iter().map(|c| (c.q, c.la, 0)).collect() };
    add(key, &mut states, &mut kernels)?;

    let mut s = 0;
    while s < states.len() {
        for (ci, &byte) in classes.bytes.iter().enumerate() {
            let src = &kernels[s].confs;
            let seeds: Vec<(u32, usize)> = src
                .iter()
                .enumerate()
                .filter_map(|(k, c)| cl.step(c.0, byte).map(|q| (q, k)))
                .collect();
            if seeds.is_empty() {
                continue;
            }
            let c = cl.run(seeds);
            let origins: Vec<u32> = c.iter().map(|x| x.payload as u32).collect();
            let u = unique_origins(&origins);
            let nlinks = u.iter().copied().max().map_or(0, |m| m as usize + 1);
            let mut links: Vec<Option<Backlink>> = vec![None; nlinks];
            for (x, &ui) in c.iter().zip(&u) {
                if links[ui as usize].is_none() {
                    let o = &src[x.payload];
                    links[ui as usize] = Some(Backlink { i: o.2, h: o.1.clone() });
                }
            }
            let key = Key { confs: c.into_iter().zip(&u).map(|(x, &ui)| (x.q, x.la, ui)).collect() };
            let to = add(key, &mut states, &mut kernels)?;
            states[s].trans[ci] = Some(MpTransition { to, backlinks: links.into_iter().map(Option::unwrap).collect() });
        }
        s += 1;
    }

    let mut m = MultipassTdfa { ntags: nfa.ntags, classes, states, nesting, flat: Flat::default() };
    m.flatten();
    Ok(m)
}

/// Tagged string item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TItem {
    Sym(u8),
    Tag(SignedTag),
}

/// A tagged string: input symbols interleaved with the tags of the
/// matching path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TString(pub Vec<TItem>);

impl TString {
    /// Space-separated form, e.g. `1 a 2 3`.
    pub fn spaced(&self) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|x| match x {
                TItem::Sym(b) => byte_text(*b),
                TItem::Tag(t) => t.to_string(),
            })
            .collect();
        parts.join(" ")
    }

    /// Offset lists recovered by scanning with a position counter.
    pub fn offset_lists(&self, ntags: usize, nesting: Option<&Nesting>) -> Vec<Vec<Option<usize>>> {
        let mut e = vec![Vec::new(); ntags];
        let mut pos = 0;
        for x in &self.0 {
            match *x {
                TItem::Sym(_) => pos += 1,
                TItem::Tag(t) if t > 0 => e[t as usize - 1].push(Some(pos)),
                TItem::Tag(t) => {
                    for u in negated(-t as TagId, nesting) {
                        e[u as usize - 1].push(None);
                    }
                }
            }
        }
        e
    }
}

fn byte_text(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("\\x{b:02x}")
    }
}

/// `<1>a<2>` form.
impl fmt::Display for TString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.0 {
            match x {
                TItem::Sym(b) => f.write_str(&byte_text(*b))?,
                TItem::Tag(t) => write!(f, "<{t}>")?,
            }
        }
        Ok(())
    }
}

/// Tags that a negative occurrence of `t` stands for.
fn negated(t: TagId, nesting: Option<&Nesting>) -> impl Iterator<Item = TagId> + '_ {
    std::iter::once(t).chain(nesting.into_iter().flat_map(move |n| n.nested(t)))
}

/// The recorded path of a successful forward pass: the start of the
/// backlink array of each transition taken, and the final state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    arrays: Vec<u32>,
    last: StateId,
}

impl Path {
    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }
}

impl MultipassTdfa {
    fn flatten(&mut self) {
        let nc = self.classes.len();
        let mut f = Flat {
            class_of: self.classes.table().to_vec(),
            nclasses: nc,
            next: vec![NONE; self.states.len() * nc],
            first: vec![0; self.states.len() * nc],
            ..Flat::default()
        };
        let push = |f: &mut Flat, b: &Backlink| {
            let start = f.tags.len() as u32;
            f.tags.extend_from_slice(&b.h);
            (b.i, start, b.h.len() as u32)
        };
        for (s, st) in self.states.iter().enumerate() {
            for (c, t) in st.trans.iter().enumerate() {
                if let Some(t) = t {
                    f.next[s * nc + c] = t.to;
                    f.first[s * nc + c] = f.links.len() as u32;
                    for b in &t.backlinks {
                        let l = push(&mut f, b);
                        f.links.push(l);
                    }
                }
            }
            let fin = st.fin.as_ref().map(|b| push(&mut f, b));
            f.fin.push(fin);
        }
        self.flat = f;
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn backlink_count(&self) -> usize {
        self.flat.links.len()
    }

    /// Forward pass. Returns `None` unless the whole input is matched.
    pub fn match_forward(&self, input: &[u8]) -> Option<Path> {
        let f = &self.flat;
        let mut s = 0usize;
        let mut arrays = Vec::with_capacity(input.len());
        for &b in input {
            let c = f.class_of[b as usize];
            if c == u16::MAX {
                return None;
            }
            let i = s * f.nclasses + c as usize;
            let to = f.next[i];
            if to == NONE {
                return None;
            }
            arrays.push(f.first[i]);
            s = to as usize;
        }
        f.fin[s]?;
        Some(Path { arrays, last: s as StateId })
    }

    /// The states visited by the forward pass, `s0 .. sn`.
    pub fn state_sequence(&self, input: &[u8]) -> Option<Vec<StateId>> {
        self.match_forward(input)?;
        let mut s = 0;
        let mut out = vec![0];
        for &b in input {
            let c = self.classes.class_of(b)?;
            s = self.states[s as usize].trans[c].as_ref()?.to;
            out.push(s);
        }
        Some(out)
    }

    fn tags_of(&self, l: (u32, u32, u32)) -> &[SignedTag] {
        &self.flat.tags[l.1 as usize..(l.1 + l.2) as usize]
    }

    /// Walks the backlinks from the final one back to the start, calling
    /// `visit(k, h)` for the tags `h` recorded at offset `k`.
    fn walk(&self, p: &Path, mut visit: impl FnMut(usize, &[SignedTag])) {
        let mut l = self.flat.fin[p.last as usize].expect("path ends in a final state");
        let mut k = p.arrays.len();
        loop {
            visit(k, self.tags_of(l));
            if k == 0 {
                break;
            }
            l = self.flat.links[(p.arrays[k - 1] + l.0) as usize];
            k -= 1;
        }
    }

    /// Last offset of each tag, `None` for nil or absent.
    pub fn extract_offsets(&self, p: &Path) -> Vec<Option<usize>> {
        let nest = self.nesting.as_ref();
        let mut e: Vec<Option<Option<usize>>> = vec![None; self.ntags];
        self.walk(p, |k, h| {
            for &t in h.iter().rev() {
                if t > 0 {
                    e[t as usize - 1].get_or_insert(Some(k));
                } else {
                    for u in negated(-t as TagId, nest) {
                        e[u as usize - 1].get_or_insert(None);
                    }
                }
            }
        });
        e.into_iter().map(Option::flatten).collect()
    }

    /// All offsets of each tag, oldest first; `None` marks a nil entry.
    pub fn extract_offset_lists(&self, p: &Path) -> Vec<Vec<Option<usize>>> {
        let nest = self.nesting.as_ref();
        let mut e: Vec<Vec<Option<usize>>> = vec![Vec::new(); self.ntags];
        self.walk(p, |k, h| {
            for &t in h.iter().rev() {
                if t > 0 {
                    e[t as usize - 1].push(Some(k));
                } else {
                    for u in negated(-t as TagId, nest) {
                        e[u as usize - 1].push(None);
                    }
                }
            }
        });
        for l in &mut e {
            l.reverse();
        }
        e
    }

    /// The tagged string of the match.
    pub fn extract_tstring(&self, input: &[u8], p: &Path) -> TString {
        let mut size = 0;
        self.walk(p, |k, h| size += h.len() + usize::from(k > 0));
        let mut x = Vec::with_capacity(size);
        self.walk(p, |k, h| {
            x.extend(h.iter().rev().map(|&t| TItem::Tag(t)));
            if k > 0 {
                x.push(TItem::Sym(input[k - 1]));
            }
        });
        x.reverse();
        TString(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::determinize::DEFAULT_MAX_STATES;
    use crate::resyntax::parse_regex;
    use crate::tnfa::{build_tnfa, simulate};

    fn example() -> MultipassTdfa {
        let e = parse_regex("(a)*#(?:a|#b)#b*").unwrap();
        determinize_multipass(&build_tnfa(&e, 5), None, DEFAULT_MAX_STATES).unwrap()
    }

    fn succ(m: &MultipassTdfa, s: usize, b: u8) -> &MpTransition {
        m.states[s].trans[m.classes.class_of(b).unwrap()].as_ref().unwrap()
    }

    #[test]
    fn running_example_backlinks() {
        let m = example();
        assert_eq!(m.state_count(), 4);
        assert_eq!(succ(&m, 0, b'a').to, 1);
        assert_eq!(succ(&m, 0, b'a').backlinks.len(), 2);
        assert_eq!(succ(&m, 1, b'a').backlinks.len(), 2);
        assert!(succ(&m, 1, b'a').backlinks.iter().all(|b| b.i == 0));
        assert_eq!(succ(&m, 0, b'b').to, 2);
        assert_eq!(succ(&m, 0, b'b').backlinks.len(), 1);
        assert_eq!(succ(&m, 1, b'b').backlinks.len(), 1);
        assert_eq!(succ(&m, 2, b'b').to, 3);
        assert_eq!(succ(&m, 2, b'b').backlinks.len(), 1);
        assert_eq!(succ(&m, 3, b'b').backlinks.len(), 1);
        assert_eq!(m.states[1].fin.as_ref().unwrap().i, 1);
        assert!(m.states[0].fin.is_none());
        for s in 1..4 {
            assert!(m.states[s].kernel.iter().any(|&(q, _)| q == 17));
        }
    }

    #[test]
    fn running_example_results() {
        let m = example();
        assert_eq!(m.state_sequence(b"aab"), Some(vec![0, 1, 1, 2]));
        let p = m.match_forward(b"aab").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(m.extract_offsets(&p), vec![Some(1), Some(2), Some(2), Some(2), Some(3)]);
        let lists = m.extract_offset_lists(&p);
        let want: Vec<Vec<Option<usize>>> =
            vec![vec![Some(0), Some(1)], vec![Some(1), Some(2)], vec![Some(2)], vec![Some(2)], vec![Some(3)]];
        assert_eq!(lists, want);
        let ts = m.extract_tstring(b"aab", &p);
        assert_eq!(ts.spaced(), "1 a 2 1 a 2 3 4 b 5");
        assert_eq!(ts.to_string(), "<1>a<2><1>a<2><3><4>b<5>");
        assert_eq!(ts.offset_lists(5, None), lists);
    }

    #[test]
    fn bypass_gives_nil() {
        let m = example();
        let p = m.match_forward(b"b").unwrap();
        let e = parse_regex("(a)*#(?:a|#b)#b*").unwrap();
        assert_eq!(Some(m.extract_offsets(&p)), simulate(&build_tnfa(&e, 5), b"b"));
        assert_eq!(m.extract_offset_lists(&p)[..2], [vec![None], vec![None]]);
    }

    #[test]
    fn no_match_cases() {
        let m = example();
        assert!(m.match_forward(b"").is_none());
        assert!(m.match_forward(b"ac").is_none());
        assert!(m.match_forward(b"ba").is_none());
    }

    #[test]
    fn tag_free_and_single_tag() {
        let e = parse_regex("ab").unwrap();
        let m = determinize_multipass(&build_tnfa(&e, 0), None, DEFAULT_MAX_STATES).unwrap();
        let p = m.match_forward(b"ab").unwrap();
        assert!(m.extract_offsets(&p).is_empty());
        assert_eq!(m.extract_tstring(b"ab", &p).spaced(), "a b");

        let e = parse_regex("#").unwrap();
        let m = determinize_multipass(&build_tnfa(&e, 1), None, DEFAULT_MAX_STATES).unwrap();
        let p = m.match_forward(b"").unwrap();
        assert_eq!(m.extract_tstring(b"", &p).spaced(), "1");
        assert_eq!(m.extract_offsets(&p), vec![Some(0)]);
    }

    #[test]
    fn origins_first_seen() {
        assert_eq!(unique_origins(&[2, 2, 9, 2, 9]), vec![0, 0, 1, 0, 1]);
        assert_eq!(unique_origins(&[5]), vec![0]);
        assert!(unique_origins(&[]).is_empty());
    }
}
