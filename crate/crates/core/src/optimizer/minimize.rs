use std::collections::HashMap;

use crate::determinize::{RegOp, State, StateId, Tdfa, Transition};

const NONE: u32 = u32::MAX;

/// Moore partition refinement. Transitions on the same class are equal
/// only if their operation lists are identical; lists are interned so
/// that comparison is by id.
pub fn minimize(d: &Tdfa) -> Tdfa {
    let n = d.states.len();
    if n == 0 {
        return d.clone();
    }
    let mut ids: HashMap<&[RegOp], u32> = HashMap::new();
    fn intern<'a>(ids: &mut HashMap<&'a [RegOp], u32>, ops: Option<&'a Vec<RegOp>>) -> u32 {
        match ops {
            None => NONE,
            Some(o) => {
                let k = ids.len() as u32;
                *ids.entry(o.as_slice()).or_insert(k)
            }
        }
    }
    let fin: Vec<(u32, u32)> = d.states.iter().map(|s| (intern(&mut ids, s.fin.as_ref()), intern(&mut ids, s.fallback.as_ref()))).collect();
    let trans: Vec<Vec<(u32, u32)>> = d
        .states
        .iter()
        .map(|s| {
            s.trans
                .iter()
                .map(|t| match t {
                    None => (NONE, NONE),
                    Some(t) => (t.to, intern(&mut ids, Some(&t.ops))),
                })
                .collect()
        })
        .collect();

    let mut class = number(fin.iter().map(|f| vec![f.0, f.1]));
    let mut count = distinct(&class);
    loop {
        let next = number((0..n).map(|s| {
            let mut key = vec![class[s]];
            for &(to, ops) in &trans[s] {
                key.push(if to == NONE { NONE } else { class[to as usize] });
                key.push(ops);
            }
            key
        }));
        let c = distinct(&next);
        class = next;
        if c == count {
            break;
        }
        count = c;
    }

    // Renumber classes in breadth-first order from the initial state.
    let mut new_id = vec![NONE; count];
    let mut order = Vec::with_capacity(count);
    new_id[class[0] as usize] = 0;
    order.push(0usize);
    let mut i = 0;
    while i < order.len() {
        let s = order[i];
        i += 1;
        for t in d.states[s].trans.iter().flatten() {
            let c = class[t.to as usize] as usize;
            if new_id[c] == NONE {
                new_id[c] = order.len() as u32;
                order.push(t.to as usize);
            }
        }
    }
    let states = order
        .iter()
        .map(|&s| {
            let st = &d.states[s];
            State {
                trans: st
                    .trans
                    .iter()
                    .map(|t| {
                        t.as_ref().map(|t| Transition { to: new_id[class[t.to as usize] as usize] as StateId, ops: t.ops.clone() })
                    })
                    .collect(),
                fin: st.fin.clone(),
                fallback: st.fallback.clone(),
            }
        })
        .collect();
    Tdfa { states, ..d.clone() }
}

fn number(keys: impl Iterator<Item = Vec<u32>>) -> Vec<u32> {
    let mut seen: HashMap<Vec<u32>, u32> = HashMap::new();
    keys.map(|k| {
        let n = seen.len() as u32;
        *seen.entry(k).or_insert(n)
    })
    .collect()
}

fn distinct(class: &[u32]) -> usize {
    class.iter().copied().max().map_or(0, |m| m as usize + 1)
}
