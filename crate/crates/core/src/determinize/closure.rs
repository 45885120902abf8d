use crate::tnfa::{Node, SignedTag, StateId, Tnfa};

/// A closure configuration: TNFA state, caller payload, and the tag
/// sequence collected on the ε-path that reached the state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conf<P> {
    pub q: StateId,
    pub payload: P,
    pub la: Vec<SignedTag>,
}

/// Reusable scratch space for ε-closures over one TNFA.
pub struct Closure<'a> {
    nfa: &'a Tnfa,
    visited: Vec<bool>,
}

impl<'a> Closure<'a> {
    pub fn new(nfa: &'a Tnfa) -> Self {
        Closure { nfa, visited: vec![false; nfa.state_count()] }
    }

    /// Leftmost-greedy ε-closure: depth-first in priority order, the first
    /// arrival at a state wins. Only final states and states with a symbol
    /// transition are kept, in the order they were reached.
    pub fn run<P: Clone>(&mut self, seeds: Vec<(StateId, P)>) -> Vec<Conf<P>> {
        self.visited.iter_mut().for_each(|v| *v = false);
        let mut out = Vec::new();
        let mut stack: Vec<Conf<P>> = seeds
            .into_iter()
            .rev()
            .map(|(q, payload)| Conf { q, payload, la: Vec::new() })
            .collect();
        while let Some(c) = stack.pop() {
            if self.visited[c.q as usize] {
                continue;
            }
            self.visited[c.q as usize] = true;
            match self.nfa.node(c.q) {
                Node::Eps(arcs) => {
                    for arc in arcs.iter().rev() {
                        if self.visited[arc.to as usize] {
                            continue;
                        }
                        let mut la = c.la.clone();
                        if arc.tag != 0 {
                            la.push(arc.tag);
                        }
                        stack.push(Conf { q: arc.to, payload: c.payload.clone(), la });
                    }
                }
                Node::Final | Node::Sym { .. } => out.push(c),
            }
        }
        out
    }

    /// Target of the symbol transition from `q` on `byte`, if any.
    pub fn step(&self, q: StateId, byte: u8) -> Option<StateId> {
        match self.nfa.node(q) {
            Node::Sym { byte: b, to } if *b == byte => Some(*to),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resyntax::parse_regex;
    use crate::tnfa::build_tnfa;

    #[test]
    fn initial_closure_of_running_example() {
        let e = parse_regex("(a)*#(?:a|#b)#b*").unwrap();
        let nfa = build_tnfa(&e, 5);
        let mut cl = Closure::new(&nfa);
        let c = cl.run(vec![(nfa.initial, ())]);
        let got: Vec<(StateId, Vec<SignedTag>)> = c.into_iter().map(|c| (c.q, c.la)).collect();
        assert_eq!(
            got,
            vec![(2, vec![1]), (9, vec![-1, -2, 3]), (12, vec![-1, -2, 3, 4])]
        );
    }

    #[test]
    fn no_epsilon_is_identity() {
        let e = parse_regex("ab").unwrap();
        let nfa = build_tnfa(&e, 0);
        let mut cl = Closure::new(&nfa);
        let c = cl.run(vec![(0, ())]);
        assert_eq!(c, vec![Conf { q: 0, payload: (), la: vec![] }]);
    }
}
