use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::resyntax::TagId;
use crate::tnfa::SignedTag;

pub type Reg = u32;

/// Value written by a set operation or appended to a history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Val {
    /// The current position.
    Pos,
    Nil,
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Val::Nil => "n",
            Val::Pos => "p",
        })
    }
}

/// A register operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegOp {
    /// `dst <- v`
    Set(Reg, Val),
    /// `dst <- src`
    Copy(Reg, Reg),
    /// `dst <- src . history`; the history is never empty.
    Append(Reg, Reg, Vec<Val>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Set,
    Copy,
    Append,
}

impl RegOp {
    pub fn dst(&self) -> Reg {
        match self {
            RegOp::Set(d, _) | RegOp::Copy(d, _) | RegOp::Append(d, _, _) => *d,
        }
    }

    pub fn src(&self) -> Option<Reg> {
        match self {
            RegOp::Set(..) => None,
            RegOp::Copy(_, s) | RegOp::Append(_, s, _) => Some(*s),
        }
    }

    pub fn kind(&self) -> OpKind {
        match self {
            RegOp::Set(..) => OpKind::Set,
            RegOp::Copy(..) => OpKind::Copy,
            RegOp::Append(..) => OpKind::Append,
        }
    }

    pub fn dst_mut(&mut self) -> &mut Reg {
        match self {
            RegOp::Set(d, _) | RegOp::Copy(d, _) | RegOp::Append(d, _, _) => d,
        }
    }

    pub fn src_mut(&mut self) -> Option<&mut Reg> {
        match self {
            RegOp::Set(..) => None,
            RegOp::Copy(_, s) | RegOp::Append(_, s, _) => Some(s),
        }
    }
}

impl fmt::Display for RegOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegOp::Set(d, v) => write!(f, "r{d} ← {v}"),
            RegOp::Copy(d, s) => write!(f, "r{d} ← r{s}"),
            RegOp::Append(d, s, h) => {
                write!(f, "r{d} ← r{s}·")?;
                h.iter().try_for_each(|v| write!(f, "{v}"))
            }
        }
    }
}

/// Projects a tag sequence onto tag `t`: `t` becomes `p`, `-t` becomes
/// `n`, other tags are dropped.
pub fn history(seq: &[SignedTag], t: TagId) -> Vec<Val> {
    let t = t as SignedTag;
    seq.iter()
        .filter_map(|&x| {
            if x == t {
                Some(Val::Pos)
            } else if x == -t {
                Some(Val::Nil)
            } else {
                None
            }
        })
        .collect()
}

/// Orders operations so that every register is read before it is
/// overwritten. Returns `false` if a cycle other than a self-append
/// remains; the cyclic tail is left in place at the end of the list.
pub fn topological_sort(ops: &mut Vec<RegOp>) -> bool {
    let mut indeg: HashMap<Reg, u32> = HashMap::new();
    for op in ops.iter() {
        if let Some(s) = op.src() {
            indeg.insert(op.dst(), 0);
            indeg.insert(s, 0);
        }
    }
    for op in ops.iter() {
        if let Some(s) = op.src() {
            *indeg.get_mut(&s).unwrap() += 1;
        }
    }

    let mut rest: Vec<Option<RegOp>> = ops.drain(..).map(Some).collect();
    let mut left = rest.len();
    let mut nontrivial = false;
    while left > 0 {
        let mut progress = false;
        for slot in rest.iter_mut() {
            let Some(op) = slot else { continue };
            if indeg.get(&op.dst()).copied().unwrap_or(0) == 0 {
                if let Some(s) = op.src() {
                    *indeg.get_mut(&s).unwrap() -= 1;
                }
                ops.push(slot.take().unwrap());
                left -= 1;
                progress = true;
            }
        }
        if !progress {
            nontrivial = rest.iter().flatten().any(|op| op.src().is_some_and(|s| s != op.dst()));
            ops.extend(rest.into_iter().flatten());
            break;
        }
    }
    !nontrivial
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_projection() {
        assert!(history(&[], 1).is_empty());
        assert_eq!(history(&[1, 2, -1], 1), vec![Val::Pos, Val::Nil]);
        assert_eq!(history(&[3, -2], 3), vec![Val::Pos]);
    }

    #[test]
    fn chain_reads_before_writes() {
        let mut ops = vec![RegOp::Copy(2, 3), RegOp::Copy(1, 2)];
        assert!(topological_sort(&mut ops));
        assert_eq!(ops, vec![RegOp::Copy(1, 2), RegOp::Copy(2, 3)]);
    }

    #[test]
    fn set_waits_for_readers() {
        let mut ops = vec![RegOp::Set(11, Val::Pos), RegOp::Copy(12, 11)];
        assert!(topological_sort(&mut ops));
        assert_eq!(ops, vec![RegOp::Copy(12, 11), RegOp::Set(11, Val::Pos)]);
    }

    #[test]
    fn swap_is_rejected() {
        let mut ops = vec![RegOp::Copy(1, 2), RegOp::Copy(2, 1)];
        assert!(!topological_sort(&mut ops));
        assert_eq!(ops.len(), 2);
    }

    #[test]
    fn self_append_is_accepted() {
        let mut ops = vec![RegOp::Append(1, 1, vec![Val::Pos])];
        assert!(topological_sort(&mut ops));
        let mut ops = vec![RegOp::Append(1, 1, vec![Val::Pos]), RegOp::Copy(2, 1)];
        assert!(topological_sort(&mut ops));
        assert_eq!(ops[0], RegOp::Copy(2, 1));
    }

    #[test]
    fn display() {
        assert_eq!(RegOp::Set(11, Val::Pos).to_string(), "r11 ← p");
        assert_eq!(RegOp::Copy(12, 11).to_string(), "r12 ← r11");
        assert_eq!(RegOp::Append(3, 2, vec![Val::Nil, Val::Pos]).to_string(), "r3 ← r2·np");
    }
}
