use proptest::prelude::*;
use tdfa::compile::{compile_regex, Engine, MatchConfig, Options};
use tdfa::determinize::{determinize, topological_sort, Reg, RegOp, Tdfa, Val, DEFAULT_MAX_STATES};
use tdfa::fuzz::{regex_at, GenLimits};
use tdfa::multipass::determinize_multipass;
use tdfa::optimizer::{add_fallback_regops, minimize, optimize_traced};
use tdfa::resyntax::{find_fixed_tags, Regex};
use tdfa::runtime::{run_ops, Mode, PrefixTree, Program, TagValue};
use tdfa::tnfa::{build_tnfa, simulate, simulate_lists};

fn regex() -> impl Strategy<Value = Regex> {
    any::<u64>().prop_map(|seed| regex_at(seed, 0, &GenLimits::default()))
}

fn input() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(vec![b'a', b'b']), 0..=6)
}

fn offsets(t: Option<&[TagValue]>) -> Option<Vec<Option<usize>>> {
    t.map(|t| t.iter().map(TagValue::offset).collect())
}

fn raw(e: &Regex, multi: bool) -> Tdfa {
    let nfa = build_tnfa(e, e.tags().len());
    determinize(&nfa, &vec![multi; nfa.ntags], DEFAULT_MAX_STATES).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fixed_tags_do_not_change_values(e in regex(), s in prop::collection::vec(input(), 1..8)) {
        let nfa = build_tnfa(&e, e.tags().len());
        let on = compile_regex(&e, &Options { fixed_tags: true, ..Default::default() }).unwrap();
        let off = compile_regex(&e, &Options::default()).unwrap();
        for s in &s {
            let want = simulate(&nfa, s);
            for engine in [Engine::Tdfa, Engine::Simulation] {
                let cfg = MatchConfig { engine, ..Default::default() };
                prop_assert_eq!(offsets(on.exec(s, &cfg).unwrap().tags()), want.clone());
                prop_assert_eq!(offsets(off.exec(s, &cfg).unwrap().tags()), want.clone());
            }
        }
    }

    #[test]
    fn fixed_tag_analysis_is_linear_and_level_local(e in regex()) {
        let f = find_fixed_tags(&e, |_| false);
        prop_assert!(f.visits <= e.size(), "{} visits for {} nodes", f.visits, e.size());
        for (t, fix) in &f.fixations {
            prop_assert!(!f.fixations.contains_key(&fix.base), "base of {} is itself fixed", t);
            if fix.base != 0 {
                prop_assert_eq!(f.levels[t], f.levels[&fix.base]);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic(e in regex(), s in input()) {
        let nfa = build_tnfa(&e, e.tags().len());
        prop_assert_eq!(simulate(&nfa, &s), simulate(&nfa, &s));
        prop_assert_eq!(simulate_lists(&nfa, &s), simulate_lists(&nfa, &s));
    }

    #[test]
    fn determinization_is_deterministic(e in regex(), multi in any::<bool>()) {
        prop_assert_eq!(raw(&e, multi), raw(&e, multi));
    }

    #[test]
    fn registers_never_shared_between_tags(e in regex(), multi in any::<bool>()) {
        let d = raw(&e, multi);
        let n = d.tags.len();
        let mut parent: Vec<usize> = (0..=d.nregs as usize).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for op in d.all_ops() {
            if let Some(s) = op.src() {
                let (a, b) = (find(&mut parent, op.dst() as usize), find(&mut parent, s as usize));
                parent[a] = b;
            }
        }
        // Registers 1..=n start the slots, n+1..=2n hold the final values.
        let mut owner = vec![None; parent.len()];
        for slot in 0..n {
            for r in [slot + 1, d.final_regs[slot] as usize] {
                let root = find(&mut parent, r);
                prop_assert!(owner[root].is_none() || owner[root] == Some(slot), "slots share register {}", r);
                owner[root] = Some(slot);
            }
        }
    }

    #[test]
    fn optimization_is_monotone_and_preserving(e in regex(), multi in any::<bool>(), s in prop::collection::vec(input(), 1..8)) {
        let nfa = build_tnfa(&e, e.tags().len());
        let mut d = raw(&e, multi);
        add_fallback_regops(&mut d);
        let before = Program::new(&d);
        let log = optimize_traced(&mut d, true);
        for w in log.windows(2) {
            prop_assert!(w[1].cfg.nregs <= w[0].cfg.nregs || w[1].pass == "compaction" && w[0].pass == "initial");
            prop_assert!(w[1].cfg.op_count() <= w[0].cfg.op_count(), "{}", w[1].pass);
        }
        prop_assert!(log.last().unwrap().cfg.nregs <= log[0].cfg.nregs);
        let after = Program::new(&d);
        for s in &s {
            let a = before.exec(s, Mode::Full);
            prop_assert_eq!(&after.exec(s, Mode::Full), &a);
            if !multi {
                prop_assert_eq!(offsets(a.tags()), simulate(&nfa, s));
            }
        }
    }

    #[test]
    fn minimization_shrinks_and_is_idempotent(e in regex()) {
        let mut d = raw(&e, false);
        add_fallback_regops(&mut d);
        optimize_traced(&mut d, false);
        let m = minimize(&d);
        prop_assert!(m.state_count() <= d.state_count());
        prop_assert_eq!(minimize(&m).state_count(), m.state_count());
    }

    #[test]
    fn multipass_forward_pass_length(e in regex(), s in input()) {
        let nfa = build_tnfa(&e, e.tags().len());
        let mp = determinize_multipass(&nfa, None, DEFAULT_MAX_STATES).unwrap();
        match mp.state_sequence(&s) {
            Some(seq) => {
                prop_assert_eq!(seq.len(), s.len() + 1);
                let p = mp.match_forward(&s).unwrap();
                let lists = mp.extract_offset_lists(&p);
                let last: Vec<Option<usize>> = lists.iter().map(|l| l.last().copied().flatten()).collect();
                prop_assert_eq!(mp.extract_offsets(&p), last);
            }
            None => prop_assert!(simulate(&nfa, &s).is_none()),
        }
    }
}

#[derive(Debug, Clone)]
enum MOp {
    Reset(Reg),
    Copy(Reg, Reg),
    Append(Reg, Reg, Vec<Val>),
}

fn multi_op() -> impl Strategy<Value = MOp> {
    let r = 1u32..6;
    let val = prop::sample::select(vec![Val::Pos, Val::Nil]);
    prop_oneof![
        r.clone().prop_map(MOp::Reset),
        (r.clone(), r.clone()).prop_map(|(d, s)| MOp::Copy(d, s)),
        (r.clone(), r, prop::collection::vec(val, 1..4)).prop_map(|(d, s, h)| MOp::Append(d, s, h)),
    ]
}

proptest! {
    #[test]
    fn prefix_tree_matches_naive_lists(prog in prop::collection::vec(prop::collection::vec(multi_op(), 0..5), 0..20)) {
        let mut regs = vec![0usize; 6];
        let mut tree = PrefixTree::new();
        let mut naive: Vec<Vec<Option<usize>>> = vec![Vec::new(); 6];
        for (pos, step) in prog.iter().enumerate() {
            let ops: Vec<RegOp> = step
                .iter()
                .map(|o| match o {
                    MOp::Reset(d) => RegOp::Set(*d, Val::Nil),
                    MOp::Copy(d, s) => RegOp::Copy(*d, *s),
                    MOp::Append(d, s, h) => RegOp::Append(*d, *s, h.clone()),
                })
                .collect();
            run_ops(&ops, &mut regs, &mut tree, pos);
            for o in step {
                match o {
                    MOp::Reset(d) => naive[*d as usize].clear(),
                    MOp::Copy(d, s) => naive[*d as usize] = naive[*s as usize].clone(),
                    MOp::Append(d, s, h) => {
                        let mut l = naive[*s as usize].clone();
                        l.extend(h.iter().map(|v| (*v == Val::Pos).then_some(pos)));
                        naive[*d as usize] = l;
                    }
                }
            }
            for r in 1..6 {
                prop_assert_eq!(tree.unpack(regs[r] as u32), naive[r].clone());
            }
        }
    }

    #[test]
    fn topological_sort_preserves_parallel_copies(pairs in prop::collection::vec((1u32..7, 1u32..7), 0..6), vals in prop::collection::vec(0usize..100, 7)) {
        // Distinct destinations: a parallel assignment.
        let mut ops: Vec<RegOp> = Vec::new();
        for (d, s) in pairs {
            if d != s && !ops.iter().any(|o| o.dst() == d) {
                ops.push(RegOp::Copy(d, s));
            }
        }
        let mut want = vals.clone();
        for o in &ops {
            if let RegOp::Copy(d, s) = o {
                want[*d as usize] = vals[*s as usize];
            }
        }
        let mut sorted = ops.clone();
        let acyclic = topological_sort(&mut sorted);
        let mut sorted_set = sorted.clone();
        sorted_set.sort();
        let mut orig = ops.clone();
        orig.sort();
        prop_assert_eq!(sorted_set, orig);
        if acyclic {
            let mut got = vals.clone();
            let mut tree = PrefixTree::new();
            run_ops(&sorted, &mut got, &mut tree, 0);
            prop_assert_eq!(got, want);
        } else {
            // A cycle exists: some register is both read and overwritten.
            prop_assert!(ops.iter().any(|o| ops.iter().any(|p| p.src() == Some(o.dst()))));
        }
    }
}
