use std::collections::BTreeMap;

use serde::Serialize;

use super::fallback::risky_region;
use crate::determinize::{Reg, RegOp, StateId, Tdfa};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Basic,
    Final,
    Fallback,
}

/// Where the operations of a block live in the automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Start,
    Transition { state: StateId, class: usize },
    Final(StateId),
    Fallback(StateId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub origin: Origin,
    pub ops: Vec<RegOp>,
    pub succ: Vec<usize>,
}

/// Control-flow graph of register operations. Block 0 is the start block;
/// it has no operations and leads to everything reachable from the
/// initial state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegCfg {
    pub blocks: Vec<Block>,
    /// Registers are `1..=nregs`.
    pub nregs: Reg,
    pub final_regs: Vec<Reg>,
    /// Per final register: whether its tag is multi-valued.
    pub multi: Vec<bool>,
}

impl RegCfg {
    pub fn build(d: &Tdfa) -> RegCfg {
        let n = d.states.len();
        let mut blocks = vec![Block { kind: BlockKind::Basic, origin: Origin::Start, ops: Vec::new(), succ: Vec::new() }];
        let mut trans_block = BTreeMap::new();
        for (s, st) in d.states.iter().enumerate() {
            for (c, t) in st.trans.iter().enumerate() {
                if let Some(t) = t.as_ref().filter(|t| !t.ops.is_empty()) {
                    trans_block.insert((s, c), blocks.len());
                    blocks.push(Block {
                        kind: BlockKind::Basic,
                        origin: Origin::Transition { state: s as StateId, class: c },
                        ops: t.ops.clone(),
                        succ: Vec::new(),
                    });
                }
            }
        }
        let mut final_block = vec![None; n];
        for (s, st) in d.states.iter().enumerate() {
            if let Some(ops) = &st.fin {
                final_block[s] = Some(blocks.len());
                blocks.push(Block { kind: BlockKind::Final, origin: Origin::Final(s as StateId), ops: ops.clone(), succ: Vec::new() });
            }
        }
        // Fallback blocks of the fallback states whose non-accepting paths
        // may stop in a given state.
        let mut falls_to: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, st) in d.states.iter().enumerate() {
            if let Some(ops) = &st.fallback {
                let b = blocks.len();
                blocks.push(Block { kind: BlockKind::Fallback, origin: Origin::Fallback(s as StateId), ops: ops.clone(), succ: Vec::new() });
                for t in risky_region(d, s as StateId) {
                    falls_to[t as usize].push(b);
                }
            }
        }

        let mut seen = vec![false; n];
        let mut succ_at = |s0: StateId| -> Vec<usize> {
            seen.iter_mut().for_each(|x| *x = false);
            let mut out = Vec::new();
            let mut stack = vec![s0 as usize];
            seen[s0 as usize] = true;
            while let Some(s) = stack.pop() {
                for (c, t) in d.states[s].trans.iter().enumerate() {
                    let Some(t) = t else { continue };
                    if t.ops.is_empty() {
                        if !seen[t.to as usize] {
                            seen[t.to as usize] = true;
                            stack.push(t.to as usize);
                        }
                    } else {
                        out.push(trans_block[&(s, c)]);
                    }
                }
                out.extend(final_block[s]);
                out.extend(falls_to[s].iter().copied());
            }
            out.sort_unstable();
            out.dedup();
            out
        };
        for b in 0..blocks.len() {
            let at = match blocks[b].origin {
                Origin::Start => 0,
                Origin::Transition { state, class } => d.states[state as usize].trans[class].as_ref().unwrap().to,
                Origin::Final(_) | Origin::Fallback(_) => continue,
            };
            if n > 0 {
                blocks[b].succ = succ_at(at);
            }
        }

        let multi = d.multi.clone();
        RegCfg { blocks, nregs: d.nregs, final_regs: d.final_regs.clone(), multi }
    }

    /// Writes the block operations back into `d`.
    pub fn apply(&self, d: &mut Tdfa) {
        for b in &self.blocks {
            match b.origin {
                Origin::Start => {}
                Origin::Transition { state, class } => {
                    d.states[state as usize].trans[class].as_mut().unwrap().ops = b.ops.clone();
                }
                Origin::Final(s) => d.states[s as usize].fin = Some(b.ops.clone()),
                Origin::Fallback(s) => d.states[s as usize].fallback = Some(b.ops.clone()),
            }
        }
        d.final_regs = self.final_regs.clone();
        d.nregs = self.nregs;
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn op_count(&self) -> usize {
        self.blocks.iter().map(|b| b.ops.len()).sum()
    }

    /// Blocks in depth-first post-order from the start block, followed by
    /// any unreachable blocks.
    pub fn post_order(&self) -> Vec<usize> {
        let n = self.blocks.len();
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![(0usize, 0usize)];
        seen[0] = true;
        while let Some((b, i)) = stack.pop() {
            if let Some(&s) = self.blocks[b].succ.get(i) {
                stack.push((b, i + 1));
                if !seen[s] {
                    seen[s] = true;
                    stack.push((s, 0));
                }
            } else {
                out.push(b);
            }
        }
        out.extend((0..n).filter(|&b| !seen[b]));
        out
    }

    /// Registers appearing in some operation or as a final register.
    pub fn used_registers(&self) -> Vec<bool> {
        let mut used = vec![false; self.nregs as usize + 1];
        for op in self.blocks.iter().flat_map(|b| &b.ops) {
            used[op.dst() as usize] = true;
            if let Some(j) = op.src() {
                used[j as usize] = true;
            }
        }
        for &r in &self.final_regs {
            used[r as usize] = true;
        }
        used
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::determinize::{determinize, DEFAULT_MAX_STATES};
    use crate::optimizer::add_fallback_regops;
    use crate::resyntax::parse_regex;
    use crate::tnfa::build_tnfa;

    fn tdfa(p: &str) -> Tdfa {
        let e = parse_regex(p).unwrap();
        let n = e.tags().len();
        let mut d = determinize(&build_tnfa(&e, n), &vec![false; n], DEFAULT_MAX_STATES).unwrap();
        add_fallback_regops(&mut d);
        d
    }

    #[test]
    fn running_example_has_nine_blocks() {
        let g = RegCfg::build(&tdfa("(a)*#(?:a|#b)#b*"));
        assert_eq!(g.len(), 9);
        let kinds: Vec<BlockKind> = g.blocks.iter().map(|b| b.kind).collect();
        assert_eq!(&kinds[..6], &[BlockKind::Basic; 6]);
        assert_eq!(&kinds[6..], &[BlockKind::Final; 3]);
        assert!(g.blocks[0].ops.is_empty());
        assert!(!g.blocks[0].succ.is_empty());
    }

    #[test]
    fn tag_free_is_single_empty_block() {
        let g = RegCfg::build(&tdfa("ab*"));
        let ops: usize = g.op_count();
        assert_eq!(ops, 0);
        assert_eq!(g.blocks.iter().filter(|b| b.kind == BlockKind::Basic).count(), 1);
    }

    #[test]
    fn fallback_arcs_iff_fallback_blocks() {
        let g = RegCfg::build(&tdfa("#a(?:bc)?"));
        let fb: Vec<usize> = (0..g.len()).filter(|&b| g.blocks[b].kind == BlockKind::Fallback).collect();
        assert_eq!(fb.len(), 1);
        assert!(g.blocks.iter().any(|b| b.succ.contains(&fb[0])));

        let g = RegCfg::build(&tdfa("(a)*#(?:a|#b)#b*"));
        assert!(g.blocks.iter().all(|b| b.kind != BlockKind::Fallback));
    }

    #[test]
    fn build_apply_round_trip() {
        let d = tdfa("(a)*#(?:a|#b)#b*");
        let mut e = d.clone();
        RegCfg::build(&d).apply(&mut e);
        assert_eq!(d, e);
    }

    #[test]
    fn post_order_visits_successors_first() {
        let g = RegCfg::build(&tdfa("(a)*#(?:a|#b)#b*"));
        let po = g.post_order();
        assert_eq!(po.len(), g.len());
        assert_eq!(*po.last().unwrap(), 0);
    }
}
