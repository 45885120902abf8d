//! Fallback operations, register optimizations on the operation CFG, and
//! minimization.

mod cfg;
mod fallback;
mod minimize;
mod passes;

use serde::Serialize;

use crate::determinize::Tdfa;

pub use cfg::{Block, BlockKind, Origin, RegCfg};
pub use fallback::{add_fallback_regops, clobbered_registers, find_fallback_states, risky_region};
pub use minimize::minimize;
pub use passes::{
    compaction, dead_code_elimination, interference_analysis, liveness_analysis, normalization, register_allocation,
    renaming, Interference, Liveness, Renaming,
};

/// Number of liveness/allocation rounds after compaction.
pub const ROUNDS: usize = 2;

/// State of the CFG after one pass.
#[derive(Clone, Debug, Serialize)]
pub struct PassSnapshot {
    pub pass: String,
    pub cfg: RegCfg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liveness: Option<Liveness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference: Option<Interference>,
}

/// Runs compaction and the register optimization rounds on `d`.
pub fn optimize(d: &mut Tdfa) {
    optimize_traced(d, false);
}

/// Like [`optimize`]; with `trace` set, returns the CFG after every pass.
pub fn optimize_traced(d: &mut Tdfa, trace: bool) -> Vec<PassSnapshot> {
    optimize_with(d, trace, true)
}

/// Runs the pipeline with normalization optionally disabled; the fuzzer
/// uses this to check that it notices a broken pipeline.
#[doc(hidden)]
pub fn optimize_with(d: &mut Tdfa, trace: bool, normalize: bool) -> Vec<PassSnapshot> {
    let mut g = RegCfg::build(d);
    let mut log = Vec::new();
    let mut snap = |name: String, g: &RegCfg, l: Option<&Liveness>, i: Option<&Interference>| {
        if trace {
            log.push(PassSnapshot { pass: name, cfg: g.clone(), liveness: l.cloned(), interference: i.cloned() });
        }
    };
    snap("initial".into(), &g, None, None);
    let v = compaction(&g);
    renaming(&mut g, &v);
    snap("compaction".into(), &g, None, None);
    for round in 1..=ROUNDS {
        let l = liveness_analysis(&g);
        snap(format!("round{round}/liveness"), &g, Some(&l), None);
        dead_code_elimination(&mut g, &l);
        snap(format!("round{round}/dce"), &g, None, None);
        let i = interference_analysis(&g, &l);
        snap(format!("round{round}/interference"), &g, Some(&l), Some(&i));
        let v = register_allocation(&g, &i);
        renaming(&mut g, &v);
        snap(format!("round{round}/allocation"), &g, None, None);
        if normalize {
            normalization(&mut g);
        }
        snap(format!("round{round}/normalization"), &g, None, None);
    }
    g.apply(d);
    log
}
