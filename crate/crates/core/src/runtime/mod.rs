//! Execution of register TDFA.

mod tree;

use serde::{Deserialize, Serialize};

use crate::determinize::{Reg, RegOp, Tdfa, Val};

pub use tree::PrefixTree;

/// How much of the input a match must cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// The whole input must match.
    #[default]
    Full,
    /// The longest matching prefix is reported.
    LongestPrefix,
}

/// Value of one tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TagValue {
    Offset(Option<usize>),
    List(Vec<Option<usize>>),
}

impl TagValue {
    pub fn offset(&self) -> Option<usize> {
        match self {
            TagValue::Offset(o) => *o,
            TagValue::List(l) => l.last().copied().flatten(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    NoMatch,
    /// The whole input matched. Values are indexed by `tag - 1`.
    Match(Vec<TagValue>),
    /// A proper prefix `input[..end]` matched.
    PrefixMatch { end: usize, tags: Vec<TagValue> },
}

impl MatchOutcome {
    pub fn tags(&self) -> Option<&[TagValue]> {
        match self {
            MatchOutcome::NoMatch => None,
            MatchOutcome::Match(t) | MatchOutcome::PrefixMatch { tags: t, .. } => Some(t),
        }
    }

    pub fn tags_mut(&mut self) -> Option<&mut Vec<TagValue>> {
        match self {
            MatchOutcome::NoMatch => None,
            MatchOutcome::Match(t) | MatchOutcome::PrefixMatch { tags: t, .. } => Some(t),
        }
    }

    /// Offset where the match ends, given the input length.
    pub fn end(&self, input_len: usize) -> Option<usize> {
        match self {
            MatchOutcome::NoMatch => None,
            MatchOutcome::Match(_) => Some(input_len),
            MatchOutcome::PrefixMatch { end, .. } => Some(*end),
        }
    }
}

/// Work done by one execution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub transitions: u64,
    pub ops: u64,
    /// Largest number of operations executed for a single input byte.
    pub max_ops_per_byte: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    SetPos(u32),
    SetNil(u32),
    Copy(u32, u32),
    Append { dst: u32, src: u32, start: u32, len: u32 },
}

const NONE: u32 = u32::MAX;

/// Flat, execution-ready form of a [`Tdfa`].
#[derive(Clone, Debug)]
pub struct Program {
    ntags: usize,
    tags: Vec<u32>,
    multi: Vec<bool>,
    final_regs: Vec<u32>,
    nregs: usize,
    class_of: [u16; 256],
    nclasses: usize,
    /// `next[s * nclasses + c]`: target state, or `NONE`.
    next: Vec<u32>,
    /// Operation range of each transition, same indexing as `next`.
    trans_ops: Vec<(u32, u32)>,
    fin_ops: Vec<Option<(u32, u32)>>,
    fallback_ops: Vec<Option<(u32, u32)>>,
    fallback_state: Vec<bool>,
    ops: Vec<Op>,
    hist: Vec<Val>,
}

impl Program {
    pub fn new(d: &Tdfa) -> Self {
        let nclasses = d.classes.len();
        let mut p = Program {
            ntags: d.ntags,
            tags: d.tags.clone(),
            multi: d.multi.clone(),
            final_regs: d.final_regs.clone(),
            nregs: d.nregs as usize,
            class_of: d.classes.table(),
            nclasses,
            next: vec![NONE; d.states.len() * nclasses],
            trans_ops: vec![(0, 0); d.states.len() * nclasses],
            fin_ops: Vec::with_capacity(d.states.len()),
            fallback_ops: Vec::with_capacity(d.states.len()),
            fallback_state: Vec::with_capacity(d.states.len()),
            ops: Vec::new(),
            hist: Vec::new(),
        };
        for (s, st) in d.states.iter().enumerate() {
            for (c, t) in st.trans.iter().enumerate() {
                if let Some(t) = t {
                    let i = s * nclasses + c;
                    p.next[i] = t.to;
                    p.trans_ops[i] = p.lower(&t.ops);
                }
            }
            let fin = st.fin.as_ref().map(|o| p.lower(o));
            let fb = st.fallback.as_ref().map(|o| p.lower(o));
            p.fin_ops.push(fin);
            // Without fallback operations the final ones are used; that is
            // only right when no register is clobbered past this state.
            p.fallback_ops.push(fb.or(fin));
            p.fallback_state.push(st.is_final() && st.trans.iter().flatten().any(|t| !d.states[t.to as usize].is_final()));
        }
        p
    }

    fn lower(&mut self, ops: &[RegOp]) -> (u32, u32) {
        let start = self.ops.len() as u32;
        for op in ops {
            self.ops.push(match op {
                RegOp::Set(d, Val::Pos) => Op::SetPos(*d),
                RegOp::Set(d, Val::Nil) => Op::SetNil(*d),
                RegOp::Copy(d, s) => Op::Copy(*d, *s),
                RegOp::Append(d, s, h) => {
                    let hs = self.hist.len() as u32;
                    self.hist.extend_from_slice(h);
                    Op::Append { dst: *d, src: *s, start: hs, len: h.len() as u32 }
                }
            });
        }
        (start, self.ops.len() as u32)
    }

    pub fn state_count(&self) -> usize {
        self.fin_ops.len()
    }

    /// Matches `input` against the automaton.
    pub fn exec(&self, input: &[u8], mode: Mode) -> MatchOutcome {
        let mut regs = vec![0usize; self.nregs + 1];
        let mut tree = PrefixTree::new();
        self.run::<false>(input, mode, &mut regs, &mut tree).0
    }

    /// Like [`Program::exec`], also counting transitions and operations.
    pub fn exec_with_stats(&self, input: &[u8], mode: Mode) -> (MatchOutcome, ExecStats) {
        let mut regs = vec![0usize; self.nregs + 1];
        let mut tree = PrefixTree::new();
        self.run::<true>(input, mode, &mut regs, &mut tree)
    }

    fn run<const STATS: bool>(
        &self,
        input: &[u8],
        mode: Mode,
        regs: &mut [usize],
        tree: &mut PrefixTree,
    ) -> (MatchOutcome, ExecStats) {
        let mut stats = ExecStats::default();
        let longest = mode == Mode::LongestPrefix;
        let mut s = 0usize;
        let mut fallback: Option<(usize, usize)> = None;
        if longest && self.is_fallback(0) {
            fallback = Some((0, 0));
        }
        let mut stop = input.len();
        for (k, &b) in input.iter().enumerate() {
            let c = self.class_of[b as usize];
            let i = s * self.nclasses + c as usize;
            if c == u16::MAX || self.next[i] == NONE {
                stop = k;
                break;
            }
            let (lo, hi) = self.trans_ops[i];
            self.run_ops(lo, hi, regs, tree, k);
            if STATS {
                let n = u64::from(hi - lo);
                stats.transitions += 1;
                stats.ops += n;
                stats.max_ops_per_byte = stats.max_ops_per_byte.max(n);
            }
            s = self.next[i] as usize;
            if longest && self.is_fallback(s) {
                fallback = Some((s, k + 1));
            }
        }

        if let Some((lo, hi)) = self.fin_ops[s] {
            if stop == input.len() {
                self.run_ops(lo, hi, regs, tree, stop);
                return (MatchOutcome::Match(self.collect(regs, tree)), stats);
            }
            if longest {
                self.run_ops(lo, hi, regs, tree, stop);
                return (MatchOutcome::PrefixMatch { end: stop, tags: self.collect(regs, tree) }, stats);
            }
        }
        if longest {
            if let Some((f, pos)) = fallback {
                let (lo, hi) = self.fallback_ops[f].unwrap();
                self.run_ops(lo, hi, regs, tree, pos);
                let tags = self.collect(regs, tree);
                let out = if pos == input.len() {
                    MatchOutcome::Match(tags)
                } else {
                    MatchOutcome::PrefixMatch { end: pos, tags }
                };
                return (out, stats);
            }
        }
        (MatchOutcome::NoMatch, stats)
    }

    fn is_fallback(&self, s: usize) -> bool {
        self.fallback_state[s]
    }

    #[inline]
    fn run_ops(&self, lo: u32, hi: u32, regs: &mut [usize], tree: &mut PrefixTree, pos: usize) {
        for op in &self.ops[lo as usize..hi as usize] {
            match *op {
                Op::SetPos(d) => regs[d as usize] = pos + 1,
                Op::SetNil(d) => regs[d as usize] = 0,
                Op::Copy(d, s) => regs[d as usize] = regs[s as usize],
                Op::Append { dst, src, start, len } => {
                    let h = &self.hist[start as usize..(start + len) as usize];
                    regs[dst as usize] = tree.append(regs[src as usize] as u32, h, pos) as usize;
                }
            }
        }
    }

    fn collect(&self, regs: &[usize], tree: &PrefixTree) -> Vec<TagValue> {
        let mut out = vec![TagValue::Offset(None); self.ntags];
        for (slot, &t) in self.tags.iter().enumerate() {
            let v = regs[self.final_regs[slot] as usize];
            out[t as usize - 1] = if self.multi[slot] {
                TagValue::List(tree.unpack(v as u32))
            } else {
                TagValue::Offset(v.checked_sub(1))
            };
        }
        out
    }
}

/// Executes `ops` on a register file where scalar registers hold offset
/// plus one (zero is nil) and history registers hold prefix-tree indices.
pub fn run_ops(ops: &[RegOp], regs: &mut [usize], tree: &mut PrefixTree, pos: usize) {
    for op in ops {
        match op {
            RegOp::Set(d, Val::Pos) => regs[*d as usize] = pos + 1,
            RegOp::Set(d, Val::Nil) => regs[*d as usize] = 0,
            RegOp::Copy(d, s) => regs[*d as usize] = regs[*s as usize],
            RegOp::Append(d, s, h) => {
                regs[*d as usize] = tree.append(regs[*s as usize] as u32, h, pos) as usize
            }
        }
    }
}

/// Registers touched by `ops`.
pub fn registers_of(ops: &[RegOp]) -> Vec<Reg> {
    let mut v: Vec<Reg> = ops.iter().flat_map(|o| std::iter::once(o.dst()).chain(o.src())).collect();
    v.sort_unstable();
    v.dedup();
    v
}
