//! TNFA to TDFA conversion: powerset construction with registers,
//! lookahead tags and state mapping.

mod closure;
mod regop;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resyntax::TagId;
use crate::tnfa::{SignedTag, Tnfa};

pub use closure::{Closure, Conf};
pub use regop::{history, topological_sort, OpKind, Reg, RegOp, Val};

pub type StateId = u32;

/// Default cap on the number of automaton states.
pub const DEFAULT_MAX_STATES: usize = 100_000;

/// Partition of bytes into classes. Every byte the expression mentions
/// gets its own class; all other bytes are dead.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteClasses {
    /// Class `i` stands for `bytes[i]`.
    pub bytes: Vec<u8>,
}

impl ByteClasses {
    pub fn new(bytes: &[u8]) -> Self {
        let mut bytes = bytes.to_vec();
        bytes.sort_unstable();
        bytes.dedup();
        ByteClasses { bytes }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Lookup table from byte to class; dead bytes map to `u16::MAX`.
    pub fn table(&self) -> [u16; 256] {
        let mut t = [u16::MAX; 256];
        for (i, b) in self.bytes.iter().enumerate() {
            t[*b as usize] = i as u16;
        }
        t
    }

    pub fn class_of(&self, b: u8) -> Option<usize> {
        self.bytes.binary_search(&b).ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub to: StateId,
    pub ops: Vec<RegOp>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct State {
    /// Indexed by byte class; `None` means no match.
    pub trans: Vec<Option<Transition>>,
    /// Final quasi-transition, present iff the state is final.
    pub fin: Option<Vec<RegOp>>,
    /// Fallback quasi-transition, present iff the state is a fallback state.
    pub fallback: Option<Vec<RegOp>>,
}

impl State {
    pub fn is_final(&self) -> bool {
        self.fin.is_some()
    }
}

/// Tagged DFA with registers. State 0 is initial. Registers are numbered
/// from 1; register 0 is never used.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tdfa {
    /// Size of the tag id space of the expression.
    pub ntags: usize,
    /// Tag id of each slot; slots are the tags present in the automaton.
    pub tags: Vec<TagId>,
    /// Per slot: whether the tag keeps its full history.
    pub multi: Vec<bool>,
    pub classes: ByteClasses,
    pub states: Vec<State>,
    /// Highest register number in use.
    pub nregs: Reg,
    /// Final register of each slot.
    pub final_regs: Vec<Reg>,
}

impl Tdfa {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn final_states(&self) -> Vec<StateId> {
        (0..self.states.len() as StateId).filter(|s| self.states[*s as usize].is_final()).collect()
    }

    /// Total number of operations on transitions and quasi-transitions.
    pub fn op_count(&self) -> usize {
        self.states
            .iter()
            .map(|s| {
                s.trans.iter().flatten().map(|t| t.ops.len()).sum::<usize>()
                    + s.fin.as_ref().map_or(0, Vec::len)
                    + s.fallback.as_ref().map_or(0, Vec::len)
            })
            .sum()
    }

    /// Registers that appear in some operation, ascending.
    pub fn used_registers(&self) -> Vec<Reg> {
        let mut used = HashSet::new();
        for op in self.all_ops() {
            used.insert(op.dst());
            if let Some(s) = op.src() {
                used.insert(s);
            }
        }
        let mut v: Vec<Reg> = used.into_iter().collect();
        v.sort_unstable();
        v
    }

    pub fn all_ops(&self) -> impl Iterator<Item = &RegOp> {
        self.states.iter().flat_map(|s| {
            s.trans
                .iter()
                .flatten()
                .flat_map(|t| t.ops.iter())
                .chain(s.fin.iter().flatten())
                .chain(s.fallback.iter().flatten())
        })
    }

    /// Mutable access to every operation list.
    pub fn for_each_ops_mut(&mut self, mut f: impl FnMut(&mut Vec<RegOp>)) {
        for s in &mut self.states {
            for t in s.trans.iter_mut().flatten() {
                f(&mut t.ops);
            }
            if let Some(o) = &mut s.fin {
                f(o);
            }
            if let Some(o) = &mut s.fallback {
                f(o);
            }
        }
    }

    pub fn slot_of(&self, tag: TagId) -> Option<usize> {
        self.tags.binary_search(&tag).ok()
    }
}

/// Kernel configuration of a TDFA state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct KConf {
    q: u32,
    regs: Vec<Reg>,
    la: Vec<SignedTag>,
}

type Kernel = Vec<KConf>;
type Shape = Vec<(u32, Vec<SignedTag>)>;

fn shape(k: &Kernel) -> Shape {
    k.iter().map(|c| (c.q, c.la.clone())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Rhs {
    Set(Val),
    Append(Reg, Vec<Val>),
}

/// Determinizes `nfa`. `multi[t - 1]` tells whether tag `t` is
/// multi-valued.
pub fn determinize(nfa: &Tnfa, multi: &[bool], max_states: usize) -> Result<Tdfa> {
    Determinizer::new(nfa, multi, max_states).run()
}

struct Determinizer<'a> {
    nfa: &'a Tnfa,
    tags: Vec<TagId>,
    multi: Vec<bool>,
    classes: ByteClasses,
    final_regs: Vec<Reg>,
    max_reg: Reg,
    max_states: usize,
    kernels: Vec<Kernel>,
    by_kernel: HashMap<Kernel, StateId>,
    by_shape: HashMap<Shape, Vec<StateId>>,
    states: Vec<State>,
}

impl<'a> Determinizer<'a> {
    fn new(nfa: &'a Tnfa, multi: &[bool], max_states: usize) -> Self {
        let tags = nfa.tags.clone();
        let n = tags.len() as Reg;
        Determinizer {
            nfa,
            multi: tags.iter().map(|t| multi.get(*t as usize - 1).copied().unwrap_or(false)).collect(),
            tags,
            classes: ByteClasses::new(&nfa.alphabet),
            final_regs: (n + 1..=2 * n).collect(),
            max_reg: 2 * n,
            max_states,
            kernels: Vec::new(),
            by_kernel: HashMap::new(),
            by_shape: HashMap::new(),
            states: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Tdfa> {
        let nfa = self.nfa;
        let mut closure = Closure::new(nfa);
        let r0: Vec<Reg> = (1..=self.tags.len() as Reg).collect();
        let c = closure.run(vec![(nfa.initial, (r0, Vec::new()))]);
        self.add_state(c, Vec::new())?;

        let mut s = 0;
        while s < self.states.len() {
            let mut cache: HashMap<(usize, Rhs), Reg> = HashMap::new();
            let kernel = self.kernels[s].clone();
            let mut trans = Vec::with_capacity(self.classes.len());
            for &byte in &self.classes.bytes.clone() {
                let seeds: Vec<_> = kernel
                    .iter()
                    .filter_map(|k| {
                        closure.step(k.q, byte).map(|to| (to, (k.regs.clone(), k.la.clone())))
                    })
                    .collect();
                if seeds.is_empty() {
                    trans.push(None);
                    continue;
                }
                let mut c = closure.run(seeds);
                let ops = self.transition_regops(&mut c, &mut cache);
                let (to, ops) = self.add_state(c, ops)?;
                trans.push(Some(Transition { to, ops }));
            }
            self.states[s].trans = trans;
            s += 1;
        }

        Ok(Tdfa {
            ntags: nfa.ntags,
            tags: self.tags,
            multi: self.multi,
            classes: self.classes,
            states: self.states,
            nregs: self.max_reg,
            final_regs: self.final_regs,
        })
    }

    fn rhs(&self, slot: usize, reg: Reg, h: Vec<Val>) -> Rhs {
        if self.multi[slot] {
            Rhs::Append(reg, h)
        } else {
            Rhs::Set(*h.last().unwrap())
        }
    }

    fn op(dst: Reg, rhs: &Rhs) -> RegOp {
        match rhs {
            Rhs::Set(v) => RegOp::Set(dst, *v),
            Rhs::Append(src, h) => RegOp::Append(dst, *src, h.clone()),
        }
    }

    /// Turns the inherited tag sequences into operations, allocating one
    /// register per distinct (tag, right-hand side) for the source state.
    fn transition_regops(
        &mut self,
        confs: &mut [Conf<(Vec<Reg>, Vec<SignedTag>)>],
        cache: &mut HashMap<(usize, Rhs), Reg>,
    ) -> Vec<RegOp> {
        let mut ops = Vec::new();
        let mut emitted = HashSet::new();
        for c in confs.iter_mut() {
            let (regs, h) = &mut c.payload;
            for slot in 0..self.tags.len() {
                let ht = history(h, self.tags[slot]);
                if ht.is_empty() {
                    continue;
                }
                let rhs = self.rhs(slot, regs[slot], ht);
                let reg = match cache.get(&(slot, rhs.clone())) {
                    Some(r) => *r,
                    None => {
                        self.max_reg += 1;
                        cache.insert((slot, rhs.clone()), self.max_reg);
                        self.max_reg
                    }
                };
                if emitted.insert(reg) {
                    ops.push(Self::op(reg, &rhs));
                }
                regs[slot] = reg;
            }
        }
        ops
    }

    fn final_regops(&self, c: &KConf) -> Vec<RegOp> {
        (0..self.tags.len())
            .map(|slot| {
                let lt = history(&c.la, self.tags[slot]);
                let dst = self.final_regs[slot];
                if lt.is_empty() {
                    RegOp::Copy(dst, c.regs[slot])
                } else {
                    Self::op(dst, &self.rhs(slot, c.regs[slot], lt))
                }
            })
            .collect()
    }

    fn add_state(
        &mut self,
        c: Vec<Conf<(Vec<Reg>, Vec<SignedTag>)>>,
        ops: Vec<RegOp>,
    ) -> Result<(StateId, Vec<RegOp>)> {
        let kernel: Kernel =
            c.into_iter().map(|c| KConf { q: c.q, regs: c.payload.0, la: c.la }).collect();
        if let Some(&s) = self.by_kernel.get(&kernel) {
            return Ok((s, ops));
        }
        let sh = shape(&kernel);
        if let Some(cands) = self.by_shape.get(&sh) {
            for &s in cands {
                if let Some(mapped) = self.map(&kernel, &self.kernels[s as usize], &ops) {
                    return Ok((s, mapped));
                }
            }
        }
        if self.states.len() >= self.max_states {
            return Err(Error::TooManyStates { limit: self.max_states });
        }
        let id = self.states.len() as StateId;
        let fin = kernel.iter().find(|k| k.q == self.nfa.fin).map(|k| self.final_regops(k));
        self.states.push(State { trans: Vec::new(), fin, fallback: None });
        self.by_kernel.insert(kernel.clone(), id);
        self.by_shape.entry(sh).or_default().push(id);
        self.kernels.push(kernel);
        Ok((id, ops))
    }

    /// Tries to find a register bijection from `x` onto the existing state
    /// `y` and returns the operations rewritten for it.
    fn map(&self, x: &Kernel, y: &Kernel, ops: &[RegOp]) -> Option<Vec<RegOp>> {
        let mut fwd: BTreeMap<Reg, Reg> = BTreeMap::new();
        let mut bwd: HashMap<Reg, Reg> = HashMap::new();
        for (cx, cy) in x.iter().zip(y) {
            debug_assert_eq!((cx.q, &cx.la), (cy.q, &cy.la));
            for slot in 0..self.tags.len() {
                if !self.multi[slot] && !history(&cx.la, self.tags[slot]).is_empty() {
                    continue;
                }
                let (i, j) = (cx.regs[slot], cy.regs[slot]);
                match (fwd.get(&i), bwd.get(&j)) {
                    (None, None) => {
                        fwd.insert(i, j);
                        bwd.insert(j, i);
                    }
                    (Some(&fj), Some(&bi)) if fj == j && bi == i => {}
                    _ => return None,
                }
            }
        }

        let mut out = Vec::with_capacity(ops.len() + fwd.len());
        let mut rewritten = Vec::with_capacity(ops.len());
        for op in ops {
            // Operations on registers the target does not need are dropped.
            if let Some(j) = fwd.remove(&op.dst()) {
                let mut op = op.clone();
                *op.dst_mut() = j;
                rewritten.push(op);
            }
        }
        for (j, i) in fwd {
            if i != j {
                out.push(RegOp::Copy(i, j));
            }
        }
        out.extend(rewritten);
        topological_sort(&mut out).then_some(out)
    }
}
