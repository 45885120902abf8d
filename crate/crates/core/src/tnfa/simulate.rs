use super::{Node, StateId, Tnfa};
use crate::resyntax::TagId;

/// Storage for tag values during simulation.
pub trait TagMemory: Clone {
    fn with_tags(ntags: usize) -> Self;
    fn record(&mut self, tag: TagId, value: Option<usize>);
}

/// Keeps the last value of each tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LastValue(pub Vec<Option<usize>>);

impl TagMemory for LastValue {
    fn with_tags(ntags: usize) -> Self {
        LastValue(vec![None; ntags])
    }

    fn record(&mut self, tag: TagId, value: Option<usize>) {
        self.0[tag as usize - 1] = value;
    }
}

/// Keeps every value each tag was assigned along the path, nil included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryMemory(pub Vec<Vec<Option<usize>>>);

impl TagMemory for HistoryMemory {
    fn with_tags(ntags: usize) -> Self {
        HistoryMemory(vec![Vec::new(); ntags])
    }

    fn record(&mut self, tag: TagId, value: Option<usize>) {
        self.0[tag as usize - 1].push(value);
    }
}

/// Runs the TNFA on `input` and returns the last value of every tag, or
/// `None` if the input does not match.
pub fn simulate(nfa: &Tnfa, input: &[u8]) -> Option<Vec<Option<usize>>> {
    run::<LastValue>(nfa, input).map(|m| m.0)
}

/// Like [`simulate`], but returns the full history of each tag.
pub fn simulate_lists(nfa: &Tnfa, input: &[u8]) -> Option<Vec<Vec<Option<usize>>>> {
    run::<HistoryMemory>(nfa, input).map(|m| m.0)
}

fn run<M: TagMemory>(nfa: &Tnfa, input: &[u8]) -> Option<M> {
    let mut sim = Sim { nfa, visited: vec![false; nfa.state_count()], stack: Vec::new() };
    let mut confs = vec![(nfa.initial, M::with_tags(nfa.ntags))];
    for (k, &a) in input.iter().enumerate() {
        confs = sim.closure(confs, k);
        confs = step_on_symbol(nfa, confs, a);
        if confs.is_empty() {
            return None;
        }
    }
    let confs = sim.closure(confs, input.len());
    confs.into_iter().find(|(q, _)| *q == nfa.fin).map(|(_, m)| m)
}

struct Sim<'a, M> {
    nfa: &'a Tnfa,
    visited: Vec<bool>,
    stack: Vec<(StateId, M)>,
}

impl<M: TagMemory> Sim<'_, M> {
    /// Depth-first ε-closure; the first path to reach a state wins. `k` is
    /// the number of symbols consumed so far.
    fn closure(&mut self, confs: Vec<(StateId, M)>, k: usize) -> Vec<(StateId, M)> {
        self.visited.iter_mut().for_each(|v| *v = false);
        let mut out = Vec::new();
        self.stack.extend(confs.into_iter().rev());
        while let Some((q, m)) = self.stack.pop() {
            if self.visited[q as usize] {
                continue;
            }
            self.visited[q as usize] = true;
            if let Node::Eps(arcs) = self.nfa.node(q) {
                for arc in arcs.iter().rev() {
                    if self.visited[arc.to as usize] {
                        continue;
                    }
                    let mut m2 = m.clone();
                    if arc.tag > 0 {
                        m2.record(arc.tag as TagId, Some(k));
                    } else if arc.tag < 0 {
                        m2.record((-arc.tag) as TagId, None);
                    }
                    self.stack.push((arc.to, m2));
                }
            }
            if self.nfa.is_core(q) {
                out.push((q, m));
            }
        }
        out
    }
}

fn step_on_symbol<M>(nfa: &Tnfa, confs: Vec<(StateId, M)>, a: u8) -> Vec<(StateId, M)> {
    confs
        .into_iter()
        .filter_map(|(q, m)| match nfa.node(q) {
            Node::Sym { byte, to } if *byte == a => Some((*to, m)),
            _ => None,
        })
        .collect()
}
