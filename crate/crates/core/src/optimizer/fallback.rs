use std::collections::BTreeSet;

use crate::determinize::{Reg, RegOp, StateId, Tdfa};

/// Final states with a transition into a non-final state. Stopping at a
/// final state needs no fallback, so only these states can be left along
/// a path that ends without a match.
pub fn find_fallback_states(d: &Tdfa) -> Vec<StateId> {
    (0..d.states.len())
        .filter(|&s| {
            let st = &d.states[s];
            st.is_final() && st.trans.iter().flatten().any(|t| !d.states[t.to as usize].is_final())
        })
        .map(|s| s as StateId)
        .collect()
}

/// Non-final states reachable from `s` through non-final states only.
pub fn risky_region(d: &Tdfa, s: StateId) -> Vec<StateId> {
    let mut seen = vec![false; d.states.len()];
    let mut stack = vec![s];
    let mut out = Vec::new();
    while let Some(x) = stack.pop() {
        for t in d.states[x as usize].trans.iter().flatten() {
            let to = t.to as usize;
            if !d.states[to].is_final() && !seen[to] {
                seen[to] = true;
                out.push(t.to);
                stack.push(t.to);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Registers written on transitions of non-accepting paths out of `s`.
pub fn clobbered_registers(d: &Tdfa, s: StateId) -> BTreeSet<Reg> {
    let mut out = BTreeSet::new();
    for x in std::iter::once(s).chain(risky_region(d, s)) {
        for t in d.states[x as usize].trans.iter().flatten() {
            if !d.states[t.to as usize].is_final() {
                out.extend(t.ops.iter().map(RegOp::dst));
            }
        }
    }
    out
}

/// Adds backup operations and the fallback quasi-transition to every
/// fallback state. Final registers hold the backups.
pub fn add_fallback_regops(d: &mut Tdfa) {
    for s in find_fallback_states(d) {
        let clobbered = clobbered_registers(d, s);
        let fin = d.states[s as usize].fin.clone().unwrap_or_default();
        let mut psi = Vec::new();
        let mut backups = Vec::new();
        for op in &fin {
            match op {
                RegOp::Append(i, j, h) if clobbered.contains(j) => {
                    backups.push(RegOp::Copy(*i, *j));
                    psi.push(RegOp::Append(*i, *i, h.clone()));
                }
                RegOp::Copy(i, j) if clobbered.contains(j) => backups.push(RegOp::Copy(*i, *j)),
                _ => psi.push(op.clone()),
            }
        }
        if !backups.is_empty() {
            let finals: Vec<bool> = d.states.iter().map(|x| x.is_final()).collect();
            for t in d.states[s as usize].trans.iter_mut().flatten() {
                if !finals[t.to as usize] {
                    let mut ops = backups.clone();
                    ops.append(&mut t.ops);
                    t.ops = ops;
                }
            }
        }
        d.states[s as usize].fallback = Some(psi);
    }
}
