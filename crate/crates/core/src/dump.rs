//! DOT renderings of the automata and the CFG, plus a reloadable automaton
//! file format.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::determinize::{RegOp, Tdfa};
use crate::error::{Error, Result};
use crate::multipass::MultipassTdfa;
use crate::optimizer::{BlockKind, Origin, RegCfg};
use crate::resyntax::TagTable;
use crate::tnfa::{Node, Tnfa};

fn byte_str(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("\\x{b:02x}")
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn ops_label(ops: &[RegOp]) -> String {
    ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("\\n")
}

/// Symbol transitions are bold; ε-transitions are labeled
/// `priority/tag` and dashed when tagged.
pub fn tnfa_dot(nfa: &Tnfa) -> String {
    let mut s = String::from("digraph tnfa {\n  rankdir=LR;\n  node [shape=circle];\n");
    let _ = writeln!(s, "  start [shape=point];\n  start -> {};", nfa.initial);
    let _ = writeln!(s, "  {} [shape=doublecircle];", nfa.fin);
    for (q, n) in nfa.nodes.iter().enumerate() {
        match n {
            Node::Final => {}
            Node::Sym { byte, to } => {
                let _ = writeln!(s, "  {q} -> {to} [label=\"{}\", style=bold];", esc(&byte_str(*byte)));
            }
            Node::Eps(es) => {
                for (i, e) in es.iter().enumerate() {
                    let tag = if e.tag == 0 { "ε".to_string() } else { e.tag.to_string() };
                    let style = if e.tag == 0 { "" } else { ", style=dashed" };
                    let _ = writeln!(s, "  {q} -> {} [label=\"{}/{tag}\"{style}];", e.to, i + 1);
                }
            }
        }
    }
    s.push_str("}\n");
    s
}

/// Edges carry the symbol and the register operations, e.g. `a / r11 ← p`.
/// Final operations hang off a box attached to each final state; fallback
/// operations are drawn the same way with a dotted edge.
pub fn tdfa_dot(d: &Tdfa) -> String {
    let mut s = String::from("digraph tdfa {\n  rankdir=LR;\n  node [shape=circle];\n  start [shape=point];\n  start -> 0;\n");
    for (i, st) in d.states.iter().enumerate() {
        if let Some(fin) = &st.fin {
            let _ = writeln!(s, "  {i} [shape=doublecircle];");
            let _ = writeln!(s, "  f{i} [shape=box, label=\"{}\"];\n  {i} -> f{i} [style=dashed];", ops_label(fin));
        }
        if let Some(fb) = &st.fallback {
            let _ = writeln!(s, "  b{i} [shape=box, label=\"{}\"];\n  {i} -> b{i} [style=dotted];", ops_label(fb));
        }
        for (c, t) in st.trans.iter().enumerate() {
            let Some(t) = t else { continue };
            let mut label = esc(&byte_str(d.classes.bytes[c]));
            if !t.ops.is_empty() {
                label.push_str(" / ");
                label.push_str(&ops_label(&t.ops));
            }
            let _ = writeln!(s, "  {i} -> {} [label=\"{label}\"];", t.to);
        }
    }
    s.push_str("}\n");
    s
}

/// Blocks are boxes listing their operations; final and fallback blocks
/// are drawn with double and dashed borders.
pub fn cfg_dot(g: &RegCfg) -> String {
    let mut s = String::from("digraph cfg {\n  node [shape=box, fontname=monospace];\n");
    for (i, b) in g.blocks.iter().enumerate() {
        let head = match b.origin {
            Origin::Start => "start".to_string(),
            Origin::Transition { state, class } => format!("{state}:{class}"),
            Origin::Final(q) => format!("final {q}"),
            Origin::Fallback(q) => format!("fallback {q}"),
        };
        let style = match b.kind {
            BlockKind::Basic => "",
            BlockKind::Final => ", peripheries=2",
            BlockKind::Fallback => ", style=dashed",
        };
        let mut label = format!("B{i} ({head})");
        for o in &b.ops {
            label.push_str("\\l");
            label.push_str(&o.to_string());
        }
        label.push_str("\\l");
        let _ = writeln!(s, "  b{i} [label=\"{label}\"{style}];");
        for &j in &b.succ {
            let _ = writeln!(s, "  b{i} -> b{j};");
        }
    }
    s.push_str("}\n");
    s
}

fn backlink_label(i: u32, h: &[i32]) -> String {
    let h: Vec<String> = h.iter().map(|t| t.to_string()).collect();
    format!("{i}:{}", h.join(" "))
}

/// Edges list the backlink arrays; final states list their final backlink.
pub fn multipass_dot(m: &MultipassTdfa) -> String {
    let mut s = String::from("digraph multipass {\n  rankdir=LR;\n  node [shape=circle];\n  start [shape=point];\n  start -> 0;\n");
    for (i, st) in m.states.iter().enumerate() {
        if let Some(b) = &st.fin {
            let _ = writeln!(s, "  {i} [shape=doublecircle];");
            let _ = writeln!(s, "  f{i} [shape=box, label=\"{}\"];\n  {i} -> f{i} [style=dashed];", backlink_label(b.i, &b.h));
        }
        for (c, t) in st.trans.iter().enumerate() {
            let Some(t) = t else { continue };
            let links: Vec<String> = t.backlinks.iter().map(|b| backlink_label(b.i, &b.h)).collect();
            let label = format!("{} / [{}]", esc(&byte_str(m.classes.bytes[c])), links.join(", "));
            let _ = writeln!(s, "  {i} -> {} [label=\"{label}\"];", t.to);
        }
    }
    s.push_str("}\n");
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub states: usize,
    pub registers: usize,
    pub final_registers: usize,
    pub operations: usize,
}

impl Stats {
    pub fn of(d: &Tdfa) -> Stats {
        Stats {
            states: d.state_count(),
            registers: d.nregs as usize,
            final_registers: d.final_regs.len(),
            operations: d.op_count(),
        }
    }
}

/// A saved automaton: the TDFA plus the tag table needed to report fixed
/// tags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonFile {
    pub pattern: String,
    pub tags: TagTable,
    pub tdfa: Tdfa,
}

impl AutomatonFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton serializes")
    }

    pub fn from_json(s: &str) -> Result<AutomatonFile> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad automaton file: {e}")))
    }
}
