use std::time::{Duration, Instant};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tdfa::compile::{compile, MultiPolicy, Options};
use tdfa::dump::Stats;
use tdfa::fuzz::matching_input;
use tdfa::runtime::{Mode, Program};

const DEFAULT_PATTERNS: &[&str] = &[
    "(a)*#(?:a|#b)#b*",
    "(?:a|b|c)*abc",
    "(?:#a|#b)*#c",
    "(?:#a)*a{10}",
    "(?:#a)*a{100}",
];

#[derive(Args)]
pub struct BenchArgs {
    /// Patterns to measure; defaults to a built-in set.
    #[arg(long = "pattern")]
    patterns: Vec<String>,
    /// Input size in megabytes.
    #[arg(long, default_value_t = 10.0)]
    size_mb: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Runs per configuration; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Serialize)]
struct Row {
    pattern: String,
    config: &'static str,
    states: usize,
    registers: usize,
    operations: usize,
    bytes: usize,
    mb_per_s: f64,
    /// Register operations per byte (register engines) or recorded
    /// backlink arrays per byte (multipass). For multipass rows the
    /// operation column counts backlinks.
    work_per_byte: f64,
}

fn best<T>(repeat: usize, mut f: impl FnMut() -> T) -> (Duration, T) {
    let mut out = None;
    let mut fastest = Duration::MAX;
    for _ in 0..repeat.max(1) {
        let t = Instant::now();
        let r = f();
        fastest = fastest.min(t.elapsed());
        out = Some(r);
    }
    (fastest, out.expect("at least one run"))
}

pub fn run(a: BenchArgs) -> anyhow::Result<u8> {
    let patterns: Vec<String> =
        if a.patterns.is_empty() { DEFAULT_PATTERNS.iter().map(|s| s.to_string()).collect() } else { a.patterns.clone() };
    let len = (a.size_mb * 1e6) as usize;
    let mut rows = Vec::new();
    for p in &patterns {
        let single = compile(p, &Options::default())?;
        let multi = compile(p, &Options { multi: MultiPolicy::All, ..Options::default() })?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let Some(input) = matching_input(&mut rng, &single.tdfa, len) else {
            eprintln!("{p}: matches nothing, skipped");
            continue;
        };
        let mut bare = single.tdfa.clone();
        bare.for_each_ops_mut(Vec::clear);
        let bare = Program::new(&bare);
        let mp = single.multipass()?;

        let mpstats = Stats { states: mp.state_count(), registers: 0, final_registers: 0, operations: mp.backlink_count() };
        let mut row = |config, s: Stats, t: Duration, work: u64| {
            rows.push(Row {
                pattern: p.clone(),
                config,
                states: s.states,
                registers: s.registers,
                operations: s.operations,
                bytes: input.len(),
                mb_per_s: input.len() as f64 / 1e6 / t.as_secs_f64(),
                work_per_byte: work as f64 / input.len() as f64,
            });
        };
        let (t, _) = best(a.repeat, || bare.exec(&input, Mode::Full));
        row("dfa-no-ops", Stats::of(&single.tdfa), t, 0);
        let (t, _) = best(a.repeat, || single.program().exec(&input, Mode::Full));
        let (_, st) = single.program().exec_with_stats(&input, Mode::Full);
        row("tdfa-offsets", Stats::of(&single.tdfa), t, st.ops);
        let (t, _) = best(a.repeat, || multi.program().exec(&input, Mode::Full));
        let (_, st) = multi.program().exec_with_stats(&input, Mode::Full);
        row("tdfa-lists", Stats::of(&multi.tdfa), t, st.ops);
        let (t, path) = best(a.repeat, || mp.match_forward(&input));
        let steps = path.as_ref().map_or(0, |p| p.len() as u64);
        row("mp-forward", mpstats, t, steps);
        if path.is_some() {
            let (t, _) = best(a.repeat, || {
                let p = mp.match_forward(&input).expect("matched before");
                mp.extract_offsets(&p)
            });
            row("mp-offsets", mpstats, t, steps);
            let (t, _) = best(a.repeat, || {
                let p = mp.match_forward(&input).expect("matched before");
                mp.extract_offset_lists(&p)
            });
            row("mp-lists", mpstats, t, steps);
            let (t, _) = best(a.repeat, || {
                let p = mp.match_forward(&input).expect("matched before");
                mp.extract_tstring(&input, &p)
            });
            row("mp-tstring", mpstats, t, steps);
        }
    }

    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!(
            "{:<22} {:<13} {:>6} {:>5} {:>5} {:>10} {:>9} {:>9}",
            "pattern", "config", "states", "regs", "ops", "bytes", "MB/s", "work/B"
        );
        for r in &rows {
            println!(
                "{:<22} {:<13} {:>6} {:>5} {:>5} {:>10} {:>9.1} {:>9.3}",
                r.pattern, r.config, r.states, r.registers, r.operations, r.bytes, r.mb_per_s, r.work_per_byte
            );
        }
    }
    Ok(0)
}
