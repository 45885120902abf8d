use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::determinize::Tdfa;
use crate::resyntax::{Regex, TagId};

/// Bounds on randomly generated expressions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenLimits {
    /// Maximum number of AST nodes.
    pub max_nodes: usize,
    pub max_tags: usize,
    /// Bytes symbols are drawn from.
    pub alphabet: Vec<u8>,
    /// Largest finite repetition bound.
    pub max_bound: u32,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits { max_nodes: 10, max_tags: 6, alphabet: b"ab".to_vec(), max_bound: 3 }
    }
}

/// Generates a random expression within `limits`. Tags are numbered
/// 1, 2, ... from left to right.
pub fn random_regex<R: Rng>(rng: &mut R, limits: &GenLimits) -> Regex {
    let nodes = rng.gen_range(1..=limits.max_nodes.max(1));
    let mut g = Gen { rng, limits, tags: 0 };
    let e = g.gen(nodes);
    renumber(&e, &mut 0)
}

struct Gen<'a, R> {
    rng: &'a mut R,
    limits: &'a GenLimits,
    tags: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn leaf(&mut self) -> Regex {
        let roll = self.rng.gen_range(0..10);
        if roll < 3 && self.tags < self.limits.max_tags {
            self.tags += 1;
            Regex::Tag(0)
        } else if roll == 3 {
            Regex::Empty
        } else {
            let i = self.rng.gen_range(0..self.limits.alphabet.len());
            Regex::Symbol(self.limits.alphabet[i])
        }
    }

    fn gen(&mut self, budget: usize) -> Regex {
        if budget <= 1 {
            return self.leaf();
        }
        match self.rng.gen_range(0..10) {
            0 => self.leaf(),
            1..=3 if budget >= 3 => {
                let l = self.rng.gen_range(1..budget - 1);
                let a = self.gen(l);
                Regex::alt(a, self.gen(budget - 1 - l))
            }
            4..=6 if budget >= 3 => {
                let l = self.rng.gen_range(1..budget - 1);
                let a = self.gen(l);
                Regex::cat(a, self.gen(budget - 1 - l))
            }
            _ => {
                let lo = self.rng.gen_range(0..=self.limits.max_bound);
                let hi = if self.rng.gen_bool(0.4) {
                    None
                } else {
                    Some(self.rng.gen_range(lo..=self.limits.max_bound.max(lo)))
                };
                Regex::rep(self.gen(budget - 1), lo, hi)
            }
        }
    }
}

fn renumber(e: &Regex, next: &mut TagId) -> Regex {
    match e {
        Regex::Tag(_) => {
            *next += 1;
            Regex::Tag(*next)
        }
        Regex::Empty | Regex::Symbol(_) => e.clone(),
        Regex::Alt(l, r) => {
            let l = renumber(l, next);
            Regex::alt(l, renumber(r, next))
        }
        Regex::Cat(l, r) => {
            let l = renumber(l, next);
            Regex::cat(l, renumber(r, next))
        }
        Regex::Rep(b, lo, hi) => Regex::rep(renumber(b, next), *lo, *hi),
    }
}

/// All strings over `alphabet` of length at most `max_len`, shortest first.
pub fn all_strings(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * alphabet.len());
        for s in &layer {
            for &a in alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// A matching input of roughly `len` bytes, built by a random walk over
/// `d` that only enters states from which a final state is reachable, then
/// finishes along a shortest path. Returns `None` if nothing matches.
pub fn matching_input<R: Rng>(rng: &mut R, d: &Tdfa, len: usize) -> Option<Vec<u8>> {
    let n = d.states.len();
    // Distance to the nearest final state, with the class leading there.
    let mut dist = vec![usize::MAX; n];
    let mut step = vec![0usize; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        if d.states[s].is_final() {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    let mut preds = vec![Vec::new(); n];
    for (s, st) in d.states.iter().enumerate() {
        for (c, t) in st.trans.iter().enumerate() {
            if let Some(t) = t {
                preds[t.to as usize].push((s, c));
            }
        }
    }
    while let Some(s) = queue.pop_front() {
        for &(p, c) in &preds[s] {
            if dist[p] == usize::MAX {
                dist[p] = dist[s] + 1;
                step[p] = c;
                queue.push_back(p);
            }
        }
    }
    if n == 0 || dist[0] == usize::MAX {
        return None;
    }
    // States with arbitrarily long matching continuations.
    let mut endless: Vec<bool> = dist.iter().map(|&x| x != usize::MAX).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if endless[s] && !d.states[s].trans.iter().flatten().any(|t| endless[t.to as usize]) {
                endless[s] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = Vec::with_capacity(len + n);
    let mut s = 0usize;
    while out.len() < len {
        let next = |ok: &dyn Fn(usize) -> bool| -> Vec<(usize, usize)> {
            d.states[s]
                .trans
                .iter()
                .enumerate()
                .filter_map(|(c, t)| t.as_ref().filter(|t| ok(t.to as usize)).map(|t| (c, t.to as usize)))
                .collect()
        };
        let mut live = next(&|q| endless[q]);
        if live.is_empty() {
            live = next(&|q| dist[q] != usize::MAX);
        }
        if live.is_empty() {
            break;
        }
        let (c, to) = live[rng.gen_range(0..live.len())];
        out.push(d.classes.bytes[c]);
        s = to;
    }
    while dist[s] != 0 {
        let c = step[s];
        out.push(d.classes.bytes[c]);
        s = d.states[s].trans[c].as_ref().expect("shortest path").to as usize;
    }
    Some(out)
}
