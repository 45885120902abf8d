use crate::determinize::Val;

const CHUNK_BITS: u32 = 12;
const CHUNK: usize = 1 << CHUNK_BITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Node {
    pred: u32,
    /// Offset plus one; zero is nil.
    offs: usize,
}

/// Histories of multi-valued tags stored as a tree of shared prefixes.
/// Index 0 is the empty history. Nodes are allocated in fixed-size chunks,
/// so indices stay valid while the tree grows.
#[derive(Clone, Debug)]
pub struct PrefixTree {
    chunks: Vec<Vec<Node>>,
    len: usize,
}

impl Default for PrefixTree {
    fn default() -> Self {
        Self::new()
    }
}

impl PrefixTree {
    pub fn new() -> Self {
        let mut first = Vec::with_capacity(CHUNK);
        first.push(Node { pred: 0, offs: 0 });
        PrefixTree { chunks: vec![first], len: 1 }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len <= 1
    }

    /// Drops every history except the empty one.
    pub fn clear(&mut self) {
        self.chunks.truncate(1);
        self.chunks[0].truncate(1);
        self.len = 1;
    }

    fn get(&self, idx: u32) -> Node {
        let i = idx as usize;
        self.chunks[i >> CHUNK_BITS][i & (CHUNK - 1)]
    }

    fn push(&mut self, n: Node) -> u32 {
        if self.chunks.last().unwrap().len() == CHUNK {
            self.chunks.push(Vec::with_capacity(CHUNK));
        }
        self.chunks.last_mut().unwrap().push(n);
        self.len += 1;
        (self.len - 1) as u32
    }

    /// Extends history `idx` with `h`, where `p` stands for `pos`.
    pub fn append(&mut self, mut idx: u32, h: &[Val], pos: usize) -> u32 {
        for v in h {
            let offs = match v {
                Val::Pos => pos + 1,
                Val::Nil => 0,
            };
            idx = self.push(Node { pred: idx, offs });
        }
        idx
    }

    /// The history at `idx`, oldest first.
    pub fn unpack(&self, mut idx: u32) -> Vec<Option<usize>> {
        let mut out = Vec::new();
        while idx != 0 {
            let n = self.get(idx);
            out.push(n.offs.checked_sub(1));
            idx = n.pred;
        }
        out.reverse();
        out
    }
}
