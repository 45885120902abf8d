//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use tdfa::compile::{compile, Compiled, Engine, MatchConfig, MultiPolicy, Options, Outcome, Repr, Submatch};
use tdfa::determinize::{topological_sort, RegOp, Val};
use tdfa::fuzz::{regex_at, run_fuzz, FuzzConfig, GenLimits};
use tdfa::optimizer::{
    compaction, dead_code_elimination, interference_analysis, liveness_analysis, normalization, register_allocation,
    renaming, RegCfg,
};
use tdfa::resyntax::{find_fixed_tags, Fixation};
use tdfa::runtime::{Mode, TagValue};
use tdfa::tnfa::{build_tnfa, simulate};

const EXAMPLE: &str = "(a)*#(?:a|#b)#b*";

// Pinned limits.
const GOLDEN_TIME: Duration = Duration::from_secs(1);
const ORACLE_TIME: Duration = Duration::from_secs(300);
const LINEAR_SLACK: f64 = 1.5;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn example(opts: &Options) -> Compiled {
    compile(EXAMPLE, opts).expect("example compiles")
}

fn offsets(o: &Outcome) -> Option<Vec<Option<usize>>> {
    o.tags().map(|t| t.iter().map(TagValue::offset).collect())
}

fn golden() -> Check {
    let t = Instant::now();
    let s = Some;
    let c = example(&Options::default());
    let nfa = build_tnfa(&c.ast, 5);
    ensure(simulate(&nfa, b"aab") == Some(vec![s(1), s(2), s(2), s(2), s(3)]), "simulation values")?;
    ensure(c.raw.state_count() == 4, format!("{} states", c.raw.state_count()))?;
    ensure(c.raw.final_states() == vec![1, 2, 3], format!("finals {:?}", c.raw.final_states()))?;
    ensure(c.tdfa.final_regs.len() == 5 && c.tdfa.nregs == 5, format!("{} registers", c.tdfa.nregs))?;

    let fixed = find_fixed_tags(&c.ast, |_| false).fixations;
    ensure(fixed.get(&1) == Some(&Fixation { base: 2, distance: 1 }), "t1 fixed on t2")?;
    ensure(fixed.get(&3) == Some(&Fixation { base: 5, distance: 1 }), "t3 fixed on t5")?;
    ensure(fixed.len() == 2, format!("fixed tags {:?}", fixed.keys().collect::<Vec<_>>()))?;

    let mp = |repr| c.exec(b"aab", &MatchConfig { engine: Engine::Multipass, repr, ..Default::default() }).unwrap();
    ensure(offsets(&mp(Repr::Offsets)) == Some(vec![s(1), s(2), s(2), s(2), s(3)]), "multipass offsets")?;
    let lists: Vec<TagValue> = [vec![s(0), s(1)], vec![s(1), s(2)], vec![s(2)], vec![s(2)], vec![s(3)]]
        .into_iter()
        .map(TagValue::List)
        .collect();
    ensure(mp(Repr::Lists).tags() == Some(&lists[..]), "multipass lists")?;
    let Outcome::Match(Submatch::TString(ts)) = mp(Repr::TString) else { return Err("no tagged string".into()) };
    ensure(ts.spaced() == "1 a 2 1 a 2 3 4 b 5", format!("tagged string {}", ts.spaced()))?;

    let el = t.elapsed();
    ensure(el < GOLDEN_TIME, format!("took {el:?}"))?;
    Ok(format!("all golden values exact, {el:.2?}"))
}

fn oracle() -> Check {
    let t = Instant::now();
    let r = run_fuzz(&FuzzConfig::default()).map_err(|e| e.to_string())?;
    if let Some(d) = r.divergence {
        return Err(format!("{d}"));
    }
    let el = t.elapsed();
    ensure(el < ORACLE_TIME, format!("took {el:?}"))?;
    Ok(format!("{} expressions, {} comparisons, 0 divergences, {el:.1?}", r.regexes, r.checks))
}

fn effectiveness() -> Check {
    let c = example(&Options { trace: true, ..Default::default() });
    let initial = &c.passes[0].cfg;
    let compacted = &c.passes.iter().find(|p| p.pass == "compaction").unwrap().cfg;
    ensure(initial.nregs == 20, format!("initial {} registers", initial.nregs))?;
    ensure(compacted.nregs == 11, format!("compaction {} registers", compacted.nregs))?;
    ensure(c.tdfa.nregs == 5, format!("final {} registers", c.tdfa.nregs))?;
    ensure(initial.len() == 9, format!("{} blocks", initial.len()))?;
    Ok("20 -> 11 -> 5 registers, 9 blocks".into())
}

fn periodic(n: usize) -> Vec<u8> {
    let mut v = vec![b'a'; n / 2];
    v.resize(n, b'b');
    v
}

fn best_time(input: &[u8], c: &Compiled) -> Duration {
    (0..3)
        .map(|_| {
            let t = Instant::now();
            let o = c.program().exec(input, Mode::Full);
            let el = t.elapsed();
            assert!(o.tags().is_some());
            el
        })
        .min()
        .unwrap()
}

fn linear() -> Check {
    let c = example(&Options::default());
    let mut ops = Vec::new();
    let mut max = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let (o, st) = c.program().exec_with_stats(&periodic(n), Mode::Full);
        ensure(o.tags().is_some(), "no match")?;
        ensure(st.transitions == n as u64, "one transition per byte")?;
        ops.push(st.ops as i64);
        max.push(st.max_ops_per_byte);
    }
    ensure(max.iter().all(|&m| m == max[0]), format!("max ops per byte {max:?}"))?;
    // Exactly affine in n: equal per-byte slope on both decades.
    let (d1, d2) = (ops[1] - ops[0], ops[2] - ops[1]);
    ensure(d1 * 10 == d2, format!("op counts {ops:?}"))?;

    let t1 = best_time(&periodic(1_000_000), &c);
    let t10 = best_time(&periodic(10_000_000), &c);
    let ratio = t10.as_secs_f64() / t1.as_secs_f64();
    ensure(
        (10.0 / LINEAR_SLACK..=10.0 * LINEAR_SLACK).contains(&ratio),
        format!("10 MB / 1 MB time ratio {ratio:.2}"),
    )?;
    Ok(format!("{:.4} ops/byte at every length, max {} per byte, time ratio {ratio:.2}", d2 as f64 / 90_000.0, max[0]))
}

fn pathological() -> Check {
    let n = 100_000;
    let input = vec![b'a'; n];
    let mut tdfa_cost = Vec::new();
    let mut mp_cost = Vec::new();
    for k in [10, 100] {
        let c = compile(&format!("(?:#a)*a{{{k}}}"), &Options::default()).map_err(|e| e.to_string())?;
        let (o, st) = c.program().exec_with_stats(&input, Mode::Full);
        ensure(o.tags().is_some(), "tdfa did not match")?;
        tdfa_cost.push((st.transitions + st.ops) as f64 / n as f64);
        let mp = c.multipass().map_err(|e| e.to_string())?;
        let p = mp.match_forward(&input).ok_or("multipass did not match")?;
        mp_cost.push((p.len() + input.len()) as f64 / n as f64);
        let got = mp.extract_offsets(&p);
        ensure(Some(got) == o.tags().map(|t| t.iter().map(TagValue::offset).collect()), "engines disagree")?;
    }
    ensure(tdfa_cost[1] > tdfa_cost[0], format!("tdfa cost {tdfa_cost:?}"))?;
    ensure(mp_cost[1] == mp_cost[0], format!("multipass cost {mp_cost:?}"))?;
    Ok(format!(
        "tdfa {:.2} -> {:.2} steps/byte, multipass forward {:.2} -> {:.2}",
        tdfa_cost[0], tdfa_cost[1], mp_cost[0], mp_cost[1]
    ))
}

fn rerun_is_noop(g: &RegCfg) -> Result<(), String> {
    let mut h = g.clone();
    renaming(&mut h, &compaction(g));
    ensure(&h == g, "compaction")?;
    let l = liveness_analysis(g);
    let mut h = g.clone();
    dead_code_elimination(&mut h, &l);
    ensure(&h == g, "dead code elimination")?;
    let i = interference_analysis(g, &l);
    let mut h = g.clone();
    renaming(&mut h, &register_allocation(g, &i));
    ensure(&h == g, "allocation")?;
    let mut h = g.clone();
    normalization(&mut h);
    ensure(&h == g, "normalization")
}

fn safety() -> Check {
    let mut cases = 0;
    for multi in [MultiPolicy::None, MultiPolicy::All] {
        let opts = Options { multi, trace: true, ..Default::default() };
        let mut exprs = vec![EXAMPLE.to_string()];
        exprs.extend((0..200).map(|i| regex_at(77, i, &GenLimits::default()).to_pattern()));
        for p in &exprs {
            let c = compile(p, &opts).map_err(|e| e.to_string())?;
            let last = &c.passes.last().unwrap().cfg;
            rerun_is_noop(last).map_err(|pass| format!("{pass} changed {p:?}"))?;
            cases += 1;
        }
    }
    let mut cycle = vec![RegOp::Copy(1, 2), RegOp::Copy(2, 1)];
    ensure(!topological_sort(&mut cycle), "2-cycle accepted")?;
    let mut selfie = vec![RegOp::Append(1, 1, vec![Val::Pos])];
    ensure(topological_sort(&mut selfie), "self-append rejected")?;
    Ok(format!("every pass is a no-op at fixpoint on {cases} automata; topological sort verdicts correct"))
}

fn longest_prefix() -> Check {
    let c = compile("#a(?:bc)?", &Options::default()).map_err(|e| e.to_string())?;
    let o = c.exec(b"abx", &MatchConfig { mode: Mode::LongestPrefix, ..Default::default() }).map_err(|e| e.to_string())?;
    let Outcome::PrefixMatch { end, submatch: Submatch::Tags(tags) } = o else { return Err(format!("{o:?}")) };
    ensure(end == 1, format!("end {end}"))?;
    let want = simulate(&build_tnfa(&c.ast, 1), b"a").ok_or("simulation rejects a")?;
    let got: Vec<Option<usize>> = tags.iter().map(TagValue::offset).collect();
    ensure(got == want, format!("{got:?} vs {want:?}"))?;
    let full = c.exec(b"a", &MatchConfig::default()).map_err(|e| e.to_string())?;
    ensure(offsets(&full) == Some(got.clone()), "differs from full match on the prefix")?;
    Ok(format!("PrefixMatch at 1 with t1={}", got[0].unwrap()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("worked example", golden),
        ("oracle equivalence", oracle),
        ("optimization effectiveness", effectiveness),
        ("linear-time matching", linear),
        ("pathological nondeterminism", pathological),
        ("pass-level safety", safety),
        ("longest-prefix mode", longest_prefix),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let line = match &r {
            Ok(detail) => format!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                format!("criterion {} {name}: FAIL ({why})", i + 1)
            }
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
