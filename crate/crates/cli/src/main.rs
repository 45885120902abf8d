mod bench;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tdfa::compile::{compile, Compiled, Engine, MatchConfig, MultiPolicy, OptLevel, Options, Outcome, Repr, Submatch};
use tdfa::determinize::DEFAULT_MAX_STATES;
use tdfa::dump::{cfg_dot, multipass_dot, tdfa_dot, tnfa_dot, AutomatonFile, Stats};
use tdfa::fuzz::{run_fuzz, FuzzConfig, GenLimits, Mutation};
use tdfa::optimizer::RegCfg;
use tdfa::runtime::{MatchOutcome, Mode, Program, TagValue};

const EXIT_NO_MATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

#[derive(Parser)]
#[command(name = "tdfa", version, about = "Submatch extraction with tagged DFAs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build every automaton, print statistics and write dumps.
    Compile(CompileArgs),
    /// Match an input and print the tag values.
    Match(MatchArgs),
    /// Cross-check all engines against simulation on random expressions.
    Fuzz(FuzzArgs),
    /// Measure throughput on generated inputs.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OptArg {
    None,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum MultiArg {
    None,
    Repeated,
    All,
}

#[derive(Args, Clone)]
struct BuildArgs {
    /// Optimization level.
    #[arg(long, value_enum, default_value = "full")]
    opt: OptArg,
    /// Which tags keep their full history.
    #[arg(long, value_enum, default_value = "none")]
    multi: MultiArg,
    /// Compute fixed tags from their bases instead of tracking them.
    #[arg(long)]
    fixed_tags: bool,
    /// Ignore explicit tags and tag every subexpression.
    #[arg(long)]
    full_parse: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
}

impl BuildArgs {
    fn options(&self) -> Options {
        Options {
            opt: match self.opt {
                OptArg::None => OptLevel::None,
                OptArg::Full => OptLevel::Full,
            },
            multi: match self.multi {
                MultiArg::None => MultiPolicy::None,
                MultiArg::Repeated => MultiPolicy::UnderRepetition,
                MultiArg::All => MultiPolicy::All,
            },
            fixed_tags: self.fixed_tags,
            full_parse: self.full_parse,
            max_states: self.max_states,
            ..Options::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DumpTarget {
    Ast,
    Tnfa,
    Raw,
    Cfg,
    Optimized,
    Minimized,
    Multipass,
    Automaton,
    All,
}

#[derive(Args)]
struct CompileArgs {
    pattern: String,
    #[command(flatten)]
    build: BuildArgs,
    /// Comma-separated artifacts to write.
    #[arg(long, value_enum, value_delimiter = ',')]
    dump: Vec<DumpTarget>,
    /// Directory for dump files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print statistics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Simulation,
    Tdfa,
    Multipass,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    LongestPrefix,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReprArg {
    Offsets,
    Lists,
    Tstring,
}

#[derive(Clone, Copy, ValueEnum)]
enum TStringStyle {
    /// `1 a 2`
    Spaced,
    /// `<1>a<2>`
    Brackets,
}

#[derive(Args)]
struct MatchArgs {
    /// Pattern and input; with --automaton only the input.
    #[arg(num_args = 0..=2)]
    args: Vec<String>,
    /// Read the input from a file.
    #[arg(long)]
    input_file: Option<PathBuf>,
    /// Run a saved automaton instead of compiling a pattern.
    #[arg(long)]
    automaton: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tdfa")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "offsets")]
    repr: ReprArg,
    #[arg(long, value_enum, default_value = "spaced")]
    tstring_style: TStringStyle,
    #[command(flatten)]
    build: BuildArgs,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Index of the first expression.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Longest input string.
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    #[arg(long, default_value_t = 10)]
    max_nodes: usize,
    #[arg(long, default_value_t = 6)]
    max_tags: usize,
    #[arg(long, default_value_t = 3)]
    max_bound: u32,
    #[arg(long, default_value = "ab")]
    alphabet: String,
    /// Inject a defect to check that the fuzzer notices.
    #[arg(long, default_value = "none")]
    mutation: Mutation,
    #[arg(long)]
    json: bool,
}

/// An error with its exit code.
struct Failure(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = match e.downcast_ref::<tdfa::Error>() {
            Some(tdfa::Error::TooManyStates { .. }) => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        Failure(code, e)
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Compile(a) => cmd_compile(a),
        Cmd::Match(a) => cmd_match(a),
        Cmd::Fuzz(a) => cmd_fuzz(a),
        Cmd::Bench(a) => bench::run(a).map_err(Failure::from),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

fn write(dir: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
}

fn stats_line(name: &str, s: &Stats) -> String {
    format!(
        "{name:<10} states {} registers {} final-registers {} operations {}",
        s.states, s.registers, s.final_registers, s.operations
    )
}

fn cmd_compile(a: CompileArgs) -> CmdResult {
    let all = a.dump.contains(&DumpTarget::All);
    let want = |t| all || a.dump.contains(&t);
    let mut opts = a.build.options();
    opts.trace = want(DumpTarget::Cfg);
    let c = compile(&a.pattern, &opts)?;
    let mp = c.multipass()?;

    let raw = Stats::of(&c.raw);
    let opt = c.optimized.as_ref().map(Stats::of);
    let min = c.optimized.as_ref().map(|_| Stats::of(&c.tdfa));
    if a.json {
        let j = serde_json::json!({
            "tnfa": { "states": c.nfa.state_count() },
            "raw": raw,
            "optimized": opt,
            "minimized": min,
            "multipass": { "states": mp.state_count(), "backlinks": mp.backlink_count() },
        });
        println!("{}", serde_json::to_string_pretty(&j)?);
    } else {
        println!("{:<10} states {}", "tnfa", c.nfa.state_count());
        println!("{}", stats_line("raw", &raw));
        if let (Some(o), Some(m)) = (opt, min) {
            println!("{}", stats_line("optimized", &o));
            println!("{}", stats_line("minimized", &m));
        }
        println!("{:<10} states {} backlinks {}", "multipass", mp.state_count(), mp.backlink_count());
    }

    if a.dump.is_empty() {
        return Ok(0);
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let dir = a.out.as_path();
    if want(DumpTarget::Ast) {
        write(dir, "ast.json", &serde_json::to_string_pretty(&c.ast.to_json())?)?;
    }
    if want(DumpTarget::Tnfa) {
        write(dir, "tnfa.dot", &tnfa_dot(&c.nfa))?;
    }
    if want(DumpTarget::Raw) {
        write(dir, "raw.dot", &tdfa_dot(&c.raw))?;
        write(dir, "raw.json", &serde_json::to_string_pretty(&c.raw)?)?;
    }
    if want(DumpTarget::Cfg) {
        dump_cfg(dir, &c)?;
    }
    if let Some(o) = c.optimized.as_ref().filter(|_| want(DumpTarget::Optimized)) {
        write(dir, "optimized.dot", &tdfa_dot(o))?;
        write(dir, "optimized.json", &serde_json::to_string_pretty(o)?)?;
    }
    if c.optimized.is_some() && want(DumpTarget::Minimized) {
        write(dir, "minimized.dot", &tdfa_dot(&c.tdfa))?;
        write(dir, "minimized.json", &serde_json::to_string_pretty(&c.tdfa)?)?;
    }
    if want(DumpTarget::Multipass) {
        write(dir, "multipass.dot", &multipass_dot(mp))?;
        write(dir, "multipass.json", &serde_json::to_string_pretty(mp)?)?;
    }
    if want(DumpTarget::Automaton) {
        let f = AutomatonFile { pattern: a.pattern.clone(), tags: c.tags.clone(), tdfa: c.tdfa.clone() };
        write(dir, "automaton.json", &f.to_json())?;
    }
    Ok(0)
}

fn dump_cfg(dir: &Path, c: &Compiled) -> anyhow::Result<()> {
    if c.passes.is_empty() {
        let g = RegCfg::build(&c.raw);
        return write(dir, "cfg-00-initial.dot", &cfg_dot(&g));
    }
    for (i, p) in c.passes.iter().enumerate() {
        let stem = format!("{i:02}-{}", p.pass.replace('/', "-"));
        write(dir, &format!("cfg-{stem}.dot"), &cfg_dot(&p.cfg))?;
        if let Some(l) = &p.liveness {
            write(dir, &format!("liveness-{stem}.txt"), &l.grid(p.cfg.nregs))?;
        }
        if let Some(i) = &p.interference {
            write(dir, &format!("interference-{stem}.txt"), &i.grid())?;
        }
    }
    Ok(())
}

fn show_offset(o: Option<usize>) -> String {
    o.map_or_else(|| "n".to_string(), |x| x.to_string())
}

fn show_tags(tags: &[TagValue]) -> String {
    if tags.is_empty() {
        return "match".into();
    }
    tags.iter()
        .enumerate()
        .map(|(i, v)| match v {
            TagValue::Offset(o) => format!("t{}={}", i + 1, show_offset(*o)),
            TagValue::List(l) => {
                format!("t{}={{{}}}", i + 1, l.iter().map(|o| show_offset(*o)).collect::<Vec<_>>().join(","))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_match(a: MatchArgs) -> CmdResult {
    let (pattern, input) = match (&a.automaton, a.args.as_slice(), &a.input_file) {
        (None, [p, i], None) => (Some(p.clone()), i.as_bytes().to_vec()),
        (None, [p], Some(f)) => (Some(p.clone()), read(f)?),
        (Some(_), [i], None) => (None, i.as_bytes().to_vec()),
        (Some(_), [], Some(f)) => (None, read(f)?),
        _ => return Err(anyhow!("expected PATTERN INPUT, PATTERN --input-file F, or --automaton A with one input").into()),
    };
    let mode = match a.mode {
        ModeArg::Full => Mode::Full,
        ModeArg::LongestPrefix => Mode::LongestPrefix,
    };

    let Some(pattern) = pattern else {
        let path = a.automaton.as_ref().expect("automaton given");
        let f = AutomatonFile::from_json(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?;
        if !matches!(a.engine, EngineArg::Tdfa) || a.repr == ReprArg::Tstring {
            return Err(anyhow!("a saved automaton runs only on the tdfa engine").into());
        }
        let out = match Program::new(&f.tdfa).exec(&input, mode) {
            MatchOutcome::NoMatch => Outcome::NoMatch,
            MatchOutcome::Match(mut t) => {
                tdfa::compile::fill_fixed_tags(&f.tags, &mut t, input.len());
                Outcome::Match(Submatch::Tags(t))
            }
            MatchOutcome::PrefixMatch { end, mut tags } => {
                tdfa::compile::fill_fixed_tags(&f.tags, &mut tags, end);
                Outcome::PrefixMatch { end, submatch: Submatch::Tags(tags) }
            }
        };
        return Ok(print_outcome(&out, a.tstring_style));
    };

    let engine = match a.engine {
        EngineArg::Simulation => Engine::Simulation,
        EngineArg::Tdfa => Engine::Tdfa,
        EngineArg::Multipass => Engine::Multipass,
    };
    let repr = match a.repr {
        ReprArg::Offsets => Repr::Offsets,
        ReprArg::Lists => Repr::Lists,
        ReprArg::Tstring => Repr::TString,
    };
    let mut opts = a.build.options();
    if repr == Repr::Lists && engine == Engine::Tdfa {
        opts.multi = MultiPolicy::All;
    }
    let c = compile(&pattern, &opts)?;
    let out = c.exec(&input, &MatchConfig { engine, mode, repr })?;
    Ok(print_outcome(&out, a.tstring_style))
}

fn read(p: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(p).with_context(|| format!("reading {}", p.display()))
}

fn print_outcome(out: &Outcome, style: TStringStyle) -> u8 {
    let show = |s: &Submatch| match s {
        Submatch::Tags(t) => show_tags(t),
        Submatch::TString(ts) => match style {
            TStringStyle::Spaced => ts.spaced(),
            TStringStyle::Brackets => ts.to_string(),
        },
    };
    match out {
        Outcome::NoMatch => {
            println!("no match");
            EXIT_NO_MATCH
        }
        Outcome::Match(s) => {
            println!("{}", show(s));
            0
        }
        Outcome::PrefixMatch { end, submatch } => {
            println!("end={end} {}", show(submatch));
            0
        }
    }
}

fn cmd_fuzz(a: FuzzArgs) -> CmdResult {
    let cfg = FuzzConfig {
        seed: a.seed,
        count: a.count,
        start: a.start,
        limits: GenLimits {
            max_nodes: a.max_nodes,
            max_tags: a.max_tags,
            alphabet: a.alphabet.into_bytes(),
            max_bound: a.max_bound,
        },
        max_len: a.max_len,
        mutation: a.mutation,
    };
    if cfg.limits.alphabet.is_empty() || cfg.limits.max_nodes == 0 {
        return Err(Failure(EXIT_USAGE, anyhow!("alphabet and node limit must be non-empty")));
    }
    let r = run_fuzz(&cfg)?;
    if a.json {
        let repro = r.divergence.as_ref().map(|d| d.repro(&cfg));
        println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "report": r, "repro": repro }))?);
    } else {
        println!("seed {}: {} expressions, {} comparisons", cfg.seed, r.regexes, r.checks);
        match &r.divergence {
            None => println!("no divergence"),
            Some(d) => {
                println!("divergence: {d}");
                println!("repro: {}", d.repro(&cfg));
            }
        }
    }
    Ok(if r.divergence.is_some() { EXIT_DIVERGENCE } else { 0 })
}
