//! The whole pipeline behind one call: parse, tag analysis, TNFA,
//! determinization, optimization, and matching with any engine.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::determinize::{determinize, Tdfa, DEFAULT_MAX_STATES};
use crate::error::{Error, Result};
use crate::multipass::{determinize_multipass, MultipassTdfa, TString};
use crate::optimizer::{add_fallback_regops, minimize, optimize_traced, PassSnapshot};
use crate::resyntax::{apply_fixed_tags, auto_tag, find_fixed_tags, parse_regex, Nesting, Regex, TagId, TagTable};
use crate::runtime::{MatchOutcome, Mode, Program, TagValue};
use crate::tnfa::{build_tnfa_with, simulate_lists, NegativeTags, Tnfa};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptLevel {
    /// Determinization and fallback operations only.
    None,
    /// Register optimizations followed by minimization.
    #[default]
    Full,
}

/// Which tags keep their full history.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiPolicy {
    #[default]
    None,
    /// Tags under a repetition that allows more than one iteration.
    UnderRepetition,
    All,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Options {
    pub opt: OptLevel,
    pub fixed_tags: bool,
    pub multi: MultiPolicy,
    /// Per-tag overrides of the multi-valued policy.
    pub multi_overrides: Vec<(TagId, bool)>,
    /// Ignore explicit tags and tag every subexpression.
    pub full_parse: bool,
    pub max_states: usize,
    /// Keep a snapshot of the CFG after every optimization pass.
    pub trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            opt: OptLevel::Full,
            fixed_tags: false,
            multi: MultiPolicy::None,
            multi_overrides: Vec::new(),
            full_parse: false,
            max_states: DEFAULT_MAX_STATES,
            trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Engine {
    Simulation,
    #[default]
    Tdfa,
    Multipass,
}

/// Shape of the reported submatch values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Repr {
    /// Per-tag values as configured: offsets, or lists for multi-valued tags.
    #[default]
    Offsets,
    /// Offset lists for every tag.
    Lists,
    /// Tagged string (multi-pass engine only).
    TString,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub engine: Engine,
    pub mode: Mode,
    pub repr: Repr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Submatch {
    /// Indexed by `tag - 1`.
    Tags(Vec<TagValue>),
    TString(TString),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    NoMatch,
    Match(Submatch),
    PrefixMatch { end: usize, submatch: Submatch },
}

impl Outcome {
    pub fn submatch(&self) -> Option<&Submatch> {
        match self {
            Outcome::NoMatch => None,
            Outcome::Match(s) | Outcome::PrefixMatch { submatch: s, .. } => Some(s),
        }
    }

    pub fn tags(&self) -> Option<&[TagValue]> {
        match self.submatch()? {
            Submatch::Tags(t) => Some(t),
            Submatch::TString(_) => None,
        }
    }
}

/// A compiled expression with every intermediate artifact.
#[derive(Debug)]
pub struct Compiled {
    pub options: Options,
    /// The tagged expression (after automatic tagging in full-parse mode).
    pub ast: Regex,
    pub tags: TagTable,
    /// TNFA of the expression with fixed tags removed.
    pub nfa: Tnfa,
    /// Determinized automaton with fallback operations.
    pub raw: Tdfa,
    /// Automaton after the configured optimization level.
    pub tdfa: Tdfa,
    /// Register-optimized automaton before minimization.
    pub optimized: Option<Tdfa>,
    /// CFG snapshots, filled when tracing.
    pub passes: Vec<PassSnapshot>,
    program: Program,
    multipass: OnceLock<std::result::Result<MultipassTdfa, Error>>,
    multi_slots: Vec<bool>,
}

/// Parses and compiles `pattern`.
pub fn compile(pattern: &str, options: &Options) -> Result<Compiled> {
    compile_regex(&parse_regex(pattern)?, options)
}

/// Compiles an already parsed expression.
pub fn compile_regex(e: &Regex, options: &Options) -> Result<Compiled> {
    e.validate().map_err(Error::Config)?;
    let (ast, nesting) = if options.full_parse {
        let (t, pairs) = auto_tag(&e.strip_tags());
        (t, Some(Nesting::new(pairs)))
    } else {
        (e.clone(), None)
    };
    let ntags = ast.tags().iter().copied().max().unwrap_or(0) as usize;
    let mut tags = TagTable::new(ntags);
    tags.nesting = nesting;
    let repeated = ast.tags_under_repetition();
    for info in &mut tags.tags {
        info.multi_valued = match options.multi {
            MultiPolicy::None => false,
            MultiPolicy::UnderRepetition => repeated.contains(&info.id),
            MultiPolicy::All => true,
        };
    }
    for &(t, m) in &options.multi_overrides {
        if t == 0 || t as usize > ntags {
            return Err(Error::Config(format!("no tag {t}")));
        }
        tags.info_mut(t).multi_valued = m;
    }

    let mut fixed = BTreeSet::new();
    if options.fixed_tags {
        let f = find_fixed_tags(&ast, |t| tags.is_multi(t));
        for (t, fix) in f.fixations {
            tags.info_mut(t).fixed = Some(fix);
            fixed.insert(t);
        }
    }
    let nfa = build_tnfa_with(&ast.remove_tags(&fixed), ntags, &NegativeTags::All);
    let multi: Vec<bool> = (1..=ntags as TagId).map(|t| tags.is_multi(t)).collect();
    let mut raw = determinize(&nfa, &multi, options.max_states)?;
    add_fallback_regops(&mut raw);

    let (tdfa, optimized, passes) = match options.opt {
        OptLevel::None => (raw.clone(), None, Vec::new()),
        OptLevel::Full => {
            let mut d = raw.clone();
            let passes = optimize_traced(&mut d, options.trace);
            (minimize(&d), Some(d), passes)
        }
    };
    let program = Program::new(&tdfa);
    let multi_slots = multi;
    Ok(Compiled {
        options: options.clone(),
        ast,
        tags,
        nfa,
        raw,
        tdfa,
        optimized,
        passes,
        program,
        multipass: OnceLock::new(),
        multi_slots,
    })
}

impl Compiled {
    pub fn ntags(&self) -> usize {
        self.tags.len()
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// The multi-pass automaton, built on first use from the expression
    /// with all tags kept.
    pub fn multipass(&self) -> Result<&MultipassTdfa> {
        self.multipass
            .get_or_init(|| {
                let n = self.ntags();
                let nfa = match &self.tags.nesting {
                    Some(nest) => build_tnfa_with(&self.ast, n, &NegativeTags::Topmost(nest.clone())),
                    None => build_tnfa_with(&self.ast, n, &NegativeTags::All),
                };
                determinize_multipass(&nfa, self.tags.nesting.clone(), self.options.max_states)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Matches `input`.
    pub fn exec(&self, input: &[u8], cfg: &MatchConfig) -> Result<Outcome> {
        if cfg.mode == Mode::LongestPrefix && cfg.engine != Engine::Tdfa {
            return Err(Error::Config("longest-prefix matching needs the tdfa engine".into()));
        }
        if cfg.repr == Repr::TString && cfg.engine != Engine::Multipass {
            return Err(Error::Config("tagged strings need the multipass engine".into()));
        }
        match cfg.engine {
            Engine::Simulation => Ok(self.exec_simulation(input, cfg.repr)),
            Engine::Tdfa => self.exec_tdfa(input, cfg),
            Engine::Multipass => self.exec_multipass(input, cfg.repr),
        }
    }

    fn exec_simulation(&self, input: &[u8], repr: Repr) -> Outcome {
        let Some(lists) = simulate_lists(&self.nfa, input) else {
            return Outcome::NoMatch;
        };
        let mut vals: Vec<TagValue> = lists
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                if repr == Repr::Lists || self.multi_slots[i] {
                    TagValue::List(l)
                } else {
                    TagValue::Offset(l.last().copied().flatten())
                }
            })
            .collect();
        self.fix(&mut vals, input.len());
        Outcome::Match(Submatch::Tags(vals))
    }

    fn exec_tdfa(&self, input: &[u8], cfg: &MatchConfig) -> Result<Outcome> {
        if cfg.repr == Repr::Lists && self.multi_slots.iter().any(|m| !m) {
            return Err(Error::Config("offset lists need every tag multi-valued".into()));
        }
        let out = self.program.exec(input, cfg.mode);
        Ok(match out {
            MatchOutcome::NoMatch => Outcome::NoMatch,
            MatchOutcome::Match(mut t) => {
                self.fix(&mut t, input.len());
                Outcome::Match(Submatch::Tags(t))
            }
            MatchOutcome::PrefixMatch { end, mut tags } => {
                self.fix(&mut tags, end);
                Outcome::PrefixMatch { end, submatch: Submatch::Tags(tags) }
            }
        })
    }

    fn exec_multipass(&self, input: &[u8], repr: Repr) -> Result<Outcome> {
        let m = self.multipass()?;
        let Some(p) = m.match_forward(input) else {
            return Ok(Outcome::NoMatch);
        };
        let sub = match repr {
            Repr::TString => Submatch::TString(m.extract_tstring(input, &p)),
            Repr::Lists => Submatch::Tags(m.extract_offset_lists(&p).into_iter().map(TagValue::List).collect()),
            Repr::Offsets => {
                let offs = m.extract_offsets(&p);
                if self.multi_slots.iter().any(|&x| x) {
                    let lists = m.extract_offset_lists(&p);
                    Submatch::Tags(
                        offs.into_iter()
                            .zip(lists)
                            .zip(&self.multi_slots)
                            .map(|((o, l), &multi)| if multi { TagValue::List(l) } else { TagValue::Offset(o) })
                            .collect(),
                    )
                } else {
                    Submatch::Tags(offs.into_iter().map(TagValue::Offset).collect())
                }
            }
        };
        Ok(Outcome::Match(sub))
    }

    fn fix(&self, vals: &mut [TagValue], end: usize) {
        fill_fixed_tags(&self.tags, vals, end);
    }
}

/// Fills in fixed tags from their bases; `end` is the match end.
pub fn fill_fixed_tags(tags: &TagTable, vals: &mut [TagValue], end: usize) {
    if tags.tags.iter().all(|i| i.fixed.is_none()) {
        return;
    }
    let mut offs: Vec<Option<usize>> = vals.iter().map(TagValue::offset).collect();
    apply_fixed_tags(&mut offs, tags, end);
    for info in &tags.tags {
        if info.fixed.is_some() {
            vals[info.id as usize - 1] = TagValue::Offset(offs[info.id as usize - 1]);
        }
    }
}
