use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{all_strings, random_regex, GenLimits};
use crate::compile::{compile_regex, Engine, MatchConfig, Options};
use crate::determinize::{determinize, RegOp, Tdfa, DEFAULT_MAX_STATES};
use crate::error::Result;
use crate::multipass::{determinize_multipass, TItem};
use crate::optimizer::{add_fallback_regops, minimize, normalization, optimize_with, RegCfg};
use crate::resyntax::Regex;
use crate::runtime::{MatchOutcome, Mode, Program, TagValue};
use crate::tnfa::{build_tnfa, simulate, simulate_lists, Tnfa};

/// A deliberate defect injected into the pipeline under test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mutation {
    #[default]
    None,
    SkipNormalization,
    SkipFallback,
    /// Delete the first copy operation of the minimized automaton.
    DropFirstCopy,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [Mutation::None, Mutation::SkipNormalization, Mutation::SkipFallback, Mutation::DropFirstCopy];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::None => "none",
            Mutation::SkipNormalization => "skip-normalization",
            Mutation::SkipFallback => "skip-fallback",
            Mutation::DropFirstCopy => "drop-first-copy",
        }
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mutation::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mutation {s:?}"))
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub count: usize,
    /// Index of the first expression; expression `i` depends only on the
    /// seed and `i`.
    pub start: usize,
    pub limits: GenLimits,
    /// Inputs are all strings over the alphabet up to this length.
    pub max_len: usize,
    pub mutation: Mutation,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig { seed: 0, count: 1000, start: 0, limits: GenLimits::default(), max_len: 6, mutation: Mutation::None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub index: usize,
    pub pattern: String,
    pub input: String,
    /// Which automaton, mode and representation disagreed.
    pub check: String,
    pub expected: String,
    pub got: String,
}

impl Divergence {
    /// Command line that replays only the failing expression.
    pub fn repro(&self, cfg: &FuzzConfig) -> String {
        let mut s = format!("tdfa fuzz --seed {} --start {} --count 1 --max-len {}", cfg.seed, self.index, cfg.max_len);
        let l = &cfg.limits;
        let d = GenLimits::default();
        if l.max_nodes != d.max_nodes {
            s.push_str(&format!(" --max-nodes {}", l.max_nodes));
        }
        if l.max_tags != d.max_tags {
            s.push_str(&format!(" --max-tags {}", l.max_tags));
        }
        if l.max_bound != d.max_bound {
            s.push_str(&format!(" --max-bound {}", l.max_bound));
        }
        if l.alphabet != d.alphabet {
            s.push_str(&format!(" --alphabet {}", String::from_utf8_lossy(&l.alphabet)));
        }
        if cfg.mutation != Mutation::None {
            s.push_str(&format!(" --mutation {}", cfg.mutation));
        }
        s
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{} {:?} on {:?}: {} expected {} got {}",
            self.index, self.pattern, self.input, self.check, self.expected, self.got
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FuzzReport {
    pub regexes: usize,
    pub checks: u64,
    pub divergence: Option<Divergence>,
}

/// Expression number `index` of the stream for `seed`.
pub fn regex_at(seed: u64, index: usize, limits: &GenLimits) -> Regex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    random_regex(&mut rng, limits)
}

/// Longest prefix of `s` matched by `nfa`, by simulation on every prefix.
pub fn longest_prefix_oracle(nfa: &Tnfa, s: &[u8]) -> Option<(usize, Vec<Option<usize>>)> {
    (0..=s.len()).rev().find_map(|end| simulate(nfa, &s[..end]).map(|v| (end, v)))
}

/// Checks every engine, optimization level, mode and representation
/// against simulation; stops at the first divergence.
pub fn run_fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    let inputs = all_strings(&cfg.limits.alphabet, cfg.max_len);
    let mut report = FuzzReport::default();
    for index in cfg.start..cfg.start + cfg.count {
        let e = regex_at(cfg.seed, index, &cfg.limits);
        report.regexes += 1;
        let mut c = Checker { inputs: &inputs, checks: 0, found: None };
        c.run(&e, cfg.mutation)?;
        report.checks += c.checks;
        if let Some((check, input, expected, got)) = c.found {
            report.divergence = Some(Divergence {
                index,
                pattern: e.to_pattern(),
                input: String::from_utf8_lossy(&input).into_owned(),
                check,
                expected,
                got,
            });
            break;
        }
    }
    Ok(report)
}

fn show_offsets(v: &Option<Vec<Option<usize>>>) -> String {
    match v {
        None => "no match".into(),
        Some(v) => v.iter().map(|o| o.map_or("n".into(), |x| x.to_string())).collect::<Vec<_>>().join(" "),
    }
}

fn show_lists(v: &Option<Vec<Vec<Option<usize>>>>) -> String {
    match v {
        None => "no match".into(),
        Some(v) => v
            .iter()
            .map(|l| format!("{{{}}}", l.iter().map(|o| o.map_or("n".into(), |x| x.to_string())).collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn offsets(t: Option<&[TagValue]>) -> Option<Vec<Option<usize>>> {
    t.map(|t| t.iter().map(TagValue::offset).collect())
}

fn lists(t: Option<&[TagValue]>) -> Option<Vec<Vec<Option<usize>>>> {
    t.map(|t| {
        t.iter()
            .map(|v| match v {
                TagValue::List(l) => l.clone(),
                TagValue::Offset(o) => vec![*o],
            })
            .collect()
    })
}

fn prefix(m: &MatchOutcome, len: usize) -> Option<(usize, Vec<Option<usize>>)> {
    Some((m.end(len)?, offsets(m.tags())?))
}

fn show_prefix(v: &Option<(usize, Vec<Option<usize>>)>) -> String {
    match v {
        None => "no match".into(),
        Some((end, t)) => format!("end {end}: {}", show_offsets(&Some(t.clone()))),
    }
}

/// Raw, optimized and minimized automata, with `m` applied, and whether
/// the optimized operations are in normal form.
fn pipeline(nfa: &Tnfa, multi: bool, m: Mutation) -> Result<([(&'static str, Program); 3], bool)> {
    let mut raw = determinize(nfa, &vec![multi; nfa.ntags], DEFAULT_MAX_STATES)?;
    if m != Mutation::SkipFallback {
        add_fallback_regops(&mut raw);
    }
    let mut opt = raw.clone();
    optimize_with(&mut opt, false, m != Mutation::SkipNormalization);
    let mut min = minimize(&opt);
    if m == Mutation::DropFirstCopy {
        drop_first_copy(&mut min);
    }
    let g = RegCfg::build(&opt);
    let mut n = g.clone();
    normalization(&mut n);
    let normal = n == g;
    Ok(([("raw", Program::new(&raw)), ("optimized", Program::new(&opt)), ("minimized", Program::new(&min))], normal))
}

fn drop_first_copy(d: &mut Tdfa) {
    let mut done = false;
    d.for_each_ops_mut(|ops| {
        if !done {
            if let Some(i) = ops.iter().position(|o| matches!(o, RegOp::Copy(..))) {
                ops.remove(i);
                done = true;
            }
        }
    });
}

type Found = (String, Vec<u8>, String, String);

struct Checker<'a> {
    inputs: &'a [Vec<u8>],
    checks: u64,
    found: Option<Found>,
}

impl Checker<'_> {
    fn expect<T: PartialEq>(&mut self, check: &str, s: &[u8], want: &T, got: &T, show: impl Fn(&T) -> String) -> bool {
        self.checks += 1;
        if want != got && self.found.is_none() {
            self.found = Some((check.to_string(), s.to_vec(), show(want), show(got)));
        }
        self.found.is_none()
    }

    fn run(&mut self, e: &Regex, m: Mutation) -> Result<()> {
        let nfa = build_tnfa(e, e.tags().len());
        let (single, normal1) = pipeline(&nfa, false, m)?;
        let (multi, normal2) = pipeline(&nfa, true, m)?;
        if !self.expect("optimized/normal-form", b"", &true, &(normal1 && normal2), |b| b.to_string()) {
            return Ok(());
        }
        let mp = determinize_multipass(&nfa, None, DEFAULT_MAX_STATES)?;
        let fixed = compile_regex(e, &Options { fixed_tags: true, ..Default::default() })?;
        let full = compile_regex(e, &Options { full_parse: true, ..Default::default() })?;
        let full_nfa = build_tnfa(&full.ast, full.ntags());
        let full_mp = full.multipass()?;

        for s in self.inputs {
            let want = simulate(&nfa, s);
            let hist = simulate_lists(&nfa, s);
            let lp = longest_prefix_oracle(&nfa, s);
            for (name, p) in &single {
                let got = offsets(p.exec(s, Mode::Full).tags());
                if !self.expect(&format!("{name}/full/offsets"), s, &want, &got, show_offsets) {
                    return Ok(());
                }
                let got = prefix(&p.exec(s, Mode::LongestPrefix), s.len());
                if !self.expect(&format!("{name}/longest-prefix/offsets"), s, &lp, &got, show_prefix) {
                    return Ok(());
                }
            }
            for (name, p) in &multi {
                let got = lists(p.exec(s, Mode::Full).tags());
                if !self.expect(&format!("{name}/full/lists"), s, &hist, &got, show_lists) {
                    return Ok(());
                }
                let want_lp = lp.as_ref().and_then(|(end, _)| simulate_lists(&nfa, &s[..*end]));
                let got = lists(p.exec(s, Mode::LongestPrefix).tags());
                if !self.expect(&format!("{name}/longest-prefix/lists"), s, &want_lp, &got, show_lists) {
                    return Ok(());
                }
            }

            let got = offsets(fixed.exec(s, &MatchConfig::default())?.tags());
            if !self.expect("fixed-tags/full/offsets", s, &want, &got, show_offsets) {
                return Ok(());
            }

            let path = mp.match_forward(s);
            let got = path.as_ref().map(|p| mp.extract_offsets(p));
            if !self.expect("multipass/full/offsets", s, &want, &got, show_offsets) {
                return Ok(());
            }
            let got = path.as_ref().map(|p| mp.extract_offset_lists(p));
            if !self.expect("multipass/full/lists", s, &hist, &got, show_lists) {
                return Ok(());
            }
            let got = path.as_ref().map(|p| {
                let ts = mp.extract_tstring(s, p);
                let syms: Vec<u8> = ts.0.iter().filter_map(|x| if let TItem::Sym(b) = x { Some(*b) } else { None }).collect();
                if syms == *s {
                    ts.offset_lists(nfa.ntags, None)
                } else {
                    Vec::new()
                }
            });
            if !self.expect("multipass/full/tstring", s, &hist, &got, show_lists) {
                return Ok(());
            }

            let want = simulate(&full_nfa, s);
            let got = full_mp.match_forward(s).map(|p| full_mp.extract_offsets(&p));
            if !self.expect("full-parse/multipass/offsets", s, &want, &got, show_offsets) {
                return Ok(());
            }
            let got = offsets(full.exec(s, &MatchConfig { engine: Engine::Tdfa, ..Default::default() })?.tags());
            if !self.expect("full-parse/tdfa/offsets", s, &want, &got, show_offsets) {
                return Ok(());
            }
        }
        Ok(())
    }
}
