//! Tagged NFA: construction by structural recursion and leftmost-greedy
//! simulation.

mod simulate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::resyntax::{Nesting, Regex, TagId};

pub use simulate::{simulate, simulate_lists, HistoryMemory, LastValue, TagMemory};

pub type StateId = u32;

/// A signed tag on an ε-transition: `t > 0` records the current offset for
/// tag `t`, `t < 0` records nil for tag `-t`, and `0` is an untagged
/// ε-transition.
pub type SignedTag = i32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Eps {
    pub tag: SignedTag,
    pub to: StateId,
}

/// Outgoing transitions of a state. The priority of an ε-transition is its
/// index in the list plus one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Final,
    Sym { byte: u8, to: StateId },
    Eps(Vec<Eps>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tnfa {
    pub nodes: Vec<Node>,
    pub initial: StateId,
    pub fin: StateId,
    /// Size of the tag id space; tag values are reported for `1..=ntags`.
    pub ntags: usize,
    /// Tags that occur in the automaton, ascending.
    pub tags: Vec<TagId>,
    /// Bytes the automaton can consume, ascending.
    pub alphabet: Vec<u8>,
}

/// Which negative tags a bypass path emits.
#[derive(Clone, Debug, Default)]
pub enum NegativeTags {
    /// Every tag of the bypassed subexpression.
    #[default]
    All,
    /// Only tags not nested inside another bypassed pair; the rest are
    /// implied by the nesting map.
    Topmost(Nesting),
}

impl Tnfa {
    pub fn state_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, q: StateId) -> &Node {
        &self.nodes[q as usize]
    }

    /// True if the state has an outgoing symbol transition or is final.
    pub fn is_core(&self, q: StateId) -> bool {
        matches!(self.nodes[q as usize], Node::Final | Node::Sym { .. })
    }

    pub fn transition_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Final => 0,
                Node::Sym { .. } => 1,
                Node::Eps(v) => v.len(),
            })
            .sum()
    }
}

/// Builds the TNFA of `e`. `ntags` is the size of the tag id space, which
/// may exceed the tags present in `e` when some were removed beforehand.
///
/// States are numbered in the order a depth-first reading of the
/// expression meets them, with the final state last.
pub fn build_tnfa(e: &Regex, ntags: usize) -> Tnfa {
    build_tnfa_with(e, ntags, &NegativeTags::All)
}

pub fn build_tnfa_with(e: &Regex, ntags: usize, negatives: &NegativeTags) -> Tnfa {
    let mut b = Builder { nodes: Vec::new(), negatives };
    let fin = b.node(Node::Final);
    let (initial, mut order) = b.build(e, fin);
    order.push(fin);

    let mut renum = vec![StateId::MAX; b.nodes.len()];
    for (i, q) in order.iter().enumerate() {
        debug_assert_eq!(renum[*q as usize], StateId::MAX, "state numbered twice");
        renum[*q as usize] = i as StateId;
    }
    debug_assert!(renum.iter().all(|&r| r != StateId::MAX), "state left unnumbered");
    let mut nodes = vec![Node::Final; order.len()];
    for (old, node) in b.nodes.into_iter().enumerate() {
        nodes[renum[old] as usize] = match node {
            Node::Final => Node::Final,
            Node::Sym { byte, to } => Node::Sym { byte, to: renum[to as usize] },
            Node::Eps(v) => Node::Eps(
                v.into_iter().map(|x| Eps { tag: x.tag, to: renum[x.to as usize] }).collect(),
            ),
        };
    }
    Tnfa {
        nodes,
        initial: renum[initial as usize],
        fin: renum[fin as usize],
        ntags,
        tags: e.tag_set().into_iter().collect(),
        alphabet: e.alphabet(),
    }
}

struct Builder<'a> {
    nodes: Vec<Node>,
    negatives: &'a NegativeTags,
}

// Every `build*` method returns the entry state and the states it created
// in numbering order.
impl Builder<'_> {
    fn node(&mut self, n: Node) -> StateId {
        self.nodes.push(n);
        (self.nodes.len() - 1) as StateId
    }

    fn build(&mut self, e: &Regex, qf: StateId) -> (StateId, Vec<StateId>) {
        match e {
            Regex::Empty => (qf, Vec::new()),
            Regex::Symbol(a) => {
                let q = self.node(Node::Sym { byte: *a, to: qf });
                (q, vec![q])
            }
            Regex::Tag(t) => {
                let q = self.node(Node::Eps(vec![Eps { tag: *t as SignedTag, to: qf }]));
                (q, vec![q])
            }
            Regex::Cat(e1, e2) => {
                let (q2, o2) = self.build(e2, qf);
                let (q1, mut o1) = self.build(e1, q2);
                o1.extend(o2);
                (q1, o1)
            }
            Regex::Alt(e1, e2) => {
                let (q2, o2) = self.build(e2, qf);
                let (q2n, c2) = self.ntags(&e2.tag_set(), qf);
                let (q1, o1) = self.build(e1, q2n);
                let (q1n, c1) = self.ntags(&e1.tag_set(), q2);
                let q0 = self.node(Node::Eps(vec![Eps { tag: 0, to: q1 }, Eps { tag: 0, to: q1n }]));
                let mut order = vec![q0];
                order.extend(o1);
                order.extend(c2);
                order.extend(c1);
                order.extend(o2);
                (q0, order)
            }
            Regex::Rep(body, lo, hi) => self.repeat(body, *lo, *hi, qf),
        }
    }

    fn repeat(&mut self, e: &Regex, lo: u32, hi: Option<u32>, qf: StateId) -> (StateId, Vec<StateId>) {
        if lo == 0 {
            if hi == Some(0) {
                return self.ntags(&e.tag_set(), qf);
            }
            let (q1, o1) = self.repeat(e, 1, hi, qf);
            let (q1n, c1) = self.ntags(&e.tag_set(), qf);
            let q0 = self.node(Node::Eps(vec![Eps { tag: 0, to: q1 }, Eps { tag: 0, to: q1n }]));
            let mut order = vec![q0];
            order.extend(o1);
            order.extend(c1);
            return (q0, order);
        }

        // e{lo,hi} = e ... e (lo - 1 copies) followed by e{1,hi-lo+1}
        let (mut start, mut order) = match hi {
            None => {
                let loop_q = self.node(Node::Eps(Vec::new()));
                let (q0, mut o) = self.build(e, loop_q);
                self.nodes[loop_q as usize] =
                    Node::Eps(vec![Eps { tag: 0, to: q0 }, Eps { tag: 0, to: qf }]);
                o.push(loop_q);
                (q0, o)
            }
            Some(hi) => {
                let (mut start, mut order) = self.build(e, qf);
                for _ in 1..=(hi - lo) {
                    let branch =
                        self.node(Node::Eps(vec![Eps { tag: 0, to: start }, Eps { tag: 0, to: qf }]));
                    let (q0, mut o) = self.build(e, branch);
                    o.push(branch);
                    o.extend(order);
                    start = q0;
                    order = o;
                }
                (start, order)
            }
        };
        for _ in 1..lo {
            let (q0, mut o) = self.build(e, start);
            o.extend(order);
            start = q0;
            order = o;
        }
        (start, order)
    }

    fn ntags(&mut self, tags: &BTreeSet<TagId>, qf: StateId) -> (StateId, Vec<StateId>) {
        let emitted: Vec<TagId> = match self.negatives {
            NegativeTags::All => tags.iter().copied().collect(),
            NegativeTags::Topmost(n) => n.topmost(tags).into_iter().collect(),
        };
        let mut next = qf;
        let mut order = Vec::with_capacity(emitted.len());
        for t in emitted.iter().rev() {
            next = self.node(Node::Eps(vec![Eps { tag: -(*t as SignedTag), to: next }]));
            order.push(next);
        }
        order.reverse();
        (next, order)
    }
}
