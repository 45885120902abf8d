use std::collections::HashMap;
use std::fmt::Write;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::cfg::{BlockKind, RegCfg};
use crate::determinize::{topological_sort, OpKind, Reg, RegOp, Val};

/// Register renaming: `map[i]` is the new name of register `i`.
pub type Renaming = Vec<Reg>;

/// Live registers at the end of each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Liveness {
    pub live_out: Vec<FixedBitSet>,
}

/// Symmetric register interference matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interference {
    rows: Vec<FixedBitSet>,
}

impl Interference {
    fn new(nregs: usize) -> Self {
        Interference { rows: vec![FixedBitSet::with_capacity(nregs + 1); nregs + 1] }
    }

    fn mark(&mut self, i: Reg, j: Reg) {
        if i != j {
            self.rows[i as usize].insert(j as usize);
            self.rows[j as usize].insert(i as usize);
        }
    }

    pub fn interferes(&self, i: Reg, j: Reg) -> bool {
        self.rows[i as usize].contains(j as usize)
    }

    pub fn nregs(&self) -> usize {
        self.rows.len() - 1
    }

    /// Text grid: `*` for interfering pairs, `.` otherwise.
    pub fn grid(&self) -> String {
        let n = self.nregs();
        let w = format!("r{n}").len();
        let mut s = format!("{:w$}", "");
        for j in 1..=n {
            write!(s, " {:>w$}", format!("r{j}")).unwrap();
        }
        s.push('\n');
        for i in 1..=n {
            write!(s, "{:<w$}", format!("r{i}")).unwrap();
            for j in 1..=n {
                let c = if self.interferes(i as Reg, j as Reg) { '*' } else { '.' };
                write!(s, " {c:>w$}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

impl Liveness {
    /// Text grid of blocks by registers: `*` for live, `.` otherwise.
    pub fn grid(&self, nregs: Reg) -> String {
        let n = nregs as usize;
        let w = format!("r{n}").len().max(format!("b{}", self.live_out.len()).len());
        let mut s = format!("{:w$}", "");
        for j in 1..=n {
            write!(s, " {:>w$}", format!("r{j}")).unwrap();
        }
        s.push('\n');
        for (b, row) in self.live_out.iter().enumerate() {
            write!(s, "{:<w$}", format!("b{b}")).unwrap();
            for j in 1..=n {
                let c = if row.contains(j) { '*' } else { '.' };
                write!(s, " {c:>w$}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

impl Serialize for Liveness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<usize>> = self.live_out.iter().map(|r| r.ones().collect()).collect();
        rows.serialize(s)
    }
}

impl Serialize for Interference {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<usize>> = self.rows.iter().map(|r| r.ones().collect()).collect();
        rows.serialize(s)
    }
}

/// Renames used registers to a contiguous range starting at 1.
pub fn compaction(g: &RegCfg) -> Renaming {
    let used = g.used_registers();
    let mut map = vec![0; used.len()];
    let mut n = 0;
    for (i, u) in used.iter().enumerate().skip(1) {
        if *u {
            n += 1;
            map[i] = n;
        }
    }
    map
}

/// Applies `map` to every operation and to the final registers, then
/// drops copies of a register to itself.
pub fn renaming(g: &mut RegCfg, map: &[Reg]) {
    for b in &mut g.blocks {
        for op in &mut b.ops {
            let d = op.dst_mut();
            *d = map[*d as usize];
            if let Some(s) = op.src_mut() {
                *s = map[*s as usize];
            }
        }
        b.ops.retain(|op| !matches!(op, RegOp::Copy(i, j) if i == j));
    }
    for r in &mut g.final_regs {
        *r = map[*r as usize];
    }
    g.nregs = map.iter().copied().max().unwrap_or(0);
}

/// Backward transfer through `op`: the destination dies, the source of a
/// live copy or append becomes live. Returns false if the op is dead.
fn transfer(op: &RegOp, live: &mut FixedBitSet) -> bool {
    let i = op.dst() as usize;
    if !live.contains(i) {
        return false;
    }
    live.set(i, false);
    if let Some(j) = op.src() {
        live.insert(j as usize);
    }
    true
}

fn live_in(ops: &[RegOp], live_out: &FixedBitSet) -> FixedBitSet {
    let mut l = live_out.clone();
    for op in ops.iter().rev() {
        transfer(op, &mut l);
    }
    l
}

/// Iterative backward data flow. Final and fallback blocks have the final
/// registers live on exit; other blocks take the union of their
/// successors' live-in sets.
pub fn liveness_analysis(g: &RegCfg) -> Liveness {
    let n = g.nregs as usize + 1;
    let mut fin = FixedBitSet::with_capacity(n);
    for &r in &g.final_regs {
        fin.insert(r as usize);
    }
    let mut live_out: Vec<FixedBitSet> = g
        .blocks
        .iter()
        .map(|b| if b.kind == BlockKind::Basic { FixedBitSet::with_capacity(n) } else { fin.clone() })
        .collect();
    let order = g.post_order();
    loop {
        let mut fix = true;
        for &b in &order {
            if g.blocks[b].kind != BlockKind::Basic {
                continue;
            }
            let mut l = live_out[b].clone();
            for &s in &g.blocks[b].succ {
                l.union_with(&live_in(&g.blocks[s].ops, &live_out[s]));
            }
            if l != live_out[b] {
                live_out[b] = l;
                fix = false;
            }
        }
        if fix {
            break;
        }
    }
    Liveness { live_out }
}

/// Removes operations of basic blocks whose destination is dead.
pub fn dead_code_elimination(g: &mut RegCfg, l: &Liveness) {
    for (b, block) in g.blocks.iter_mut().enumerate() {
        if block.kind != BlockKind::Basic {
            continue;
        }
        let mut live = l.live_out[b].clone();
        let mut keep = vec![true; block.ops.len()];
        for (k, op) in block.ops.iter().enumerate().rev() {
            keep[k] = transfer(op, &mut live);
        }
        let mut k = 0;
        block.ops.retain(|_| {
            k += 1;
            keep[k - 1]
        });
    }
}

/// Symbolic register value inside one block.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Value {
    Entry(Reg),
    Const(Val),
    Append(Box<Value>, Vec<Val>),
}

/// Registers interfere if one is written while the other is live and holds
/// a different value. Registers of multi-valued tags also interfere with
/// all registers of single-valued tags.
pub fn interference_analysis(g: &RegCfg, l: &Liveness) -> Interference {
    let n = g.nregs as usize;
    let mut m = Interference::new(n);
    for (b, block) in g.blocks.iter().enumerate() {
        let mut after = vec![l.live_out[b].clone(); block.ops.len()];
        for k in (1..block.ops.len()).rev() {
            let mut x = after[k].clone();
            transfer(&block.ops[k], &mut x);
            after[k - 1] = x;
        }
        let mut vals: HashMap<Reg, Value> = HashMap::new();
        let val = |vals: &HashMap<Reg, Value>, r: Reg| vals.get(&r).cloned().unwrap_or(Value::Entry(r));
        for (k, op) in block.ops.iter().enumerate() {
            let v = match op {
                RegOp::Set(_, x) => Value::Const(*x),
                RegOp::Copy(_, j) => val(&vals, *j),
                RegOp::Append(_, j, h) => Value::Append(Box::new(val(&vals, *j)), h.clone()),
            };
            let i = op.dst();
            vals.insert(i, v.clone());
            for r in after[k].ones() {
                if r as Reg != i && val(&vals, r as Reg) != v {
                    m.mark(i, r as Reg);
                }
            }
        }
    }

    let multi = multi_valued_registers(g);
    for i in 1..=n {
        if multi[i] {
            continue;
        }
        for j in 1..=n {
            if multi[j] {
                m.mark(i as Reg, j as Reg);
            }
        }
    }
    m
}

/// Registers connected through copies and appends to an append or to the
/// final register of a multi-valued tag.
fn multi_valued_registers(g: &RegCfg) -> Vec<bool> {
    let n = g.nregs as usize + 1;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut seeds = Vec::new();
    for op in g.blocks.iter().flat_map(|b| &b.ops) {
        if let Some(j) = op.src() {
            let (a, b) = (find(&mut parent, op.dst() as usize), find(&mut parent, j as usize));
            parent[a] = b;
        }
        if op.kind() == OpKind::Append {
            seeds.push(op.dst() as usize);
        }
    }
    for (r, m) in g.final_regs.iter().zip(&g.multi) {
        if *m {
            seeds.push(*r as usize);
        }
    }
    let mut multi_root = vec![false; n];
    for s in seeds {
        let r = find(&mut parent, s);
        multi_root[r] = true;
    }
    (0..n).map(|r| multi_root[find(&mut parent, r)]).collect()
}

/// Partitions registers into non-interfering classes, preferring to put
/// the two sides of a copy together, and numbers the classes from 1.
pub fn register_allocation(g: &RegCfg, m: &Interference) -> Renaming {
    let n = g.nregs as usize;
    let mut rep: Vec<Option<usize>> = vec![None; n + 1];
    let mut class: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let clear = |class: &[usize], j: usize| class.iter().all(|&k| !m.interferes(k as Reg, j as Reg));

    for op in g.blocks.iter().flat_map(|b| &b.ops) {
        let Some(j) = op.src() else { continue };
        let (i, j) = (op.dst() as usize, j as usize);
        if i == j {
            continue;
        }
        match (rep[i], rep[j]) {
            (None, None) => {
                if !m.interferes(i as Reg, j as Reg) {
                    rep[i] = Some(i);
                    rep[j] = Some(i);
                    class[i] = vec![i, j];
                }
            }
            (Some(x), None) => {
                if clear(&class[x], j) {
                    rep[j] = Some(x);
                    class[x].push(j);
                }
            }
            (None, Some(y)) => {
                if clear(&class[y], i) {
                    rep[i] = Some(y);
                    class[y].push(i);
                }
            }
            (Some(_), Some(_)) => {}
        }
    }

    for x in 1..=n {
        if rep[x] != Some(x) {
            continue;
        }
        for y in x + 1..=n {
            if rep[y] != Some(y) {
                continue;
            }
            if class[y].iter().all(|&k| clear(&class[x], k)) {
                let moved = std::mem::take(&mut class[y]);
                for &k in &moved {
                    rep[k] = Some(x);
                }
                class[x].extend(moved);
            }
        }
    }

    // Registers that no operation mentions get no class at all.
    let used = g.used_registers();
    for i in 1..=n {
        if rep[i].is_some() || !used[i] {
            continue;
        }
        match (1..=n).find(|&j| rep[j] == Some(j) && clear(&class[j], i)) {
            Some(j) => {
                rep[i] = Some(j);
                class[j].push(i);
            }
            None => {
                rep[i] = Some(i);
                class[i] = vec![i];
            }
        }
    }

    let mut map = vec![0; n + 1];
    let mut next = 0;
    for i in 1..=n {
        if rep[i] == Some(i) {
            next += 1;
            for &k in &class[i] {
                map[k] = next;
            }
        }
    }
    map
}

fn remove_duplicates(ops: &mut Vec<RegOp>) {
    let mut out: Vec<RegOp> = Vec::with_capacity(ops.len());
    for op in ops.drain(..) {
        if !out.contains(&op) {
            out.push(op);
        }
    }
    *ops = out;
}

/// Canonicalizes each maximal run of operations of one kind: duplicates
/// go, sets are sorted, copies are topologically sorted.
pub fn normalization(g: &mut RegCfg) {
    for b in &mut g.blocks {
        let mut out = Vec::with_capacity(b.ops.len());
        let mut rest = &b.ops[..];
        while let Some(first) = rest.first() {
            let kind = first.kind();
            let len = rest.iter().take_while(|o| o.kind() == kind).count();
            let mut run = rest[..len].to_vec();
            rest = &rest[len..];
            match kind {
                OpKind::Set => {
                    // Only the last write to a register matters.
                    let mut last = Vec::with_capacity(run.len());
                    for (k, op) in run.iter().enumerate() {
                        if !run[k + 1..].iter().any(|o| o.dst() == op.dst()) {
                            last.push(op.clone());
                        }
                    }
                    run = last;
                    run.sort();
                }
                OpKind::Copy => {
                    remove_duplicates(&mut run);
                    topological_sort(&mut run);
                }
                OpKind::Append => remove_duplicates(&mut run),
            }
            out.extend(run);
        }
        b.ops = out;
    }
}
