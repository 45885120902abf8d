use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdfa::determinize::{determinize, DEFAULT_MAX_STATES};
use tdfa::fuzz::{all_strings, random_regex, GenLimits};
use tdfa::runtime::{MatchOutcome, Mode, Program, TagValue};
use tdfa::tnfa::{build_tnfa, simulate, simulate_lists};

fn offsets(m: &MatchOutcome) -> Option<Vec<Option<usize>>> {
    m.tags().map(|t| t.iter().map(TagValue::offset).collect())
}

#[test]
fn raw_tdfa_agrees_with_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let lim = GenLimits::default();
    let inputs = all_strings(b"ab", 6);
    for _ in 0..400 {
        let e = random_regex(&mut rng, &lim);
        let n = e.tags().len();
        let nfa = build_tnfa(&e, n);
        for multi in [false, true] {
            let d = determinize(&nfa, &vec![multi; n], DEFAULT_MAX_STATES).unwrap();
            let p = Program::new(&d);
            for s in &inputs {
                let got = p.exec(s, Mode::Full);
                if multi {
                    let want = simulate_lists(&nfa, s);
                    let got: Option<Vec<Vec<Option<usize>>>> = got.tags().map(|t| {
                        t.iter()
                            .map(|v| match v {
                                TagValue::List(l) => l.clone(),
                                TagValue::Offset(o) => vec![*o],
                            })
                            .collect()
                    });
                    assert_eq!(got, want, "{} on {:?}", e, String::from_utf8_lossy(s));
                } else {
                    assert_eq!(offsets(&got), simulate(&nfa, s), "{} on {:?}", e, String::from_utf8_lossy(s));
                }
            }
        }
    }
}

fn longest_prefix_oracle(nfa: &tdfa::tnfa::Tnfa, s: &[u8]) -> MatchOutcome {
    for end in (0..=s.len()).rev() {
        if let Some(v) = simulate(nfa, &s[..end]) {
            let tags = v.into_iter().map(TagValue::Offset).collect();
            return if end == s.len() { MatchOutcome::Match(tags) } else { MatchOutcome::PrefixMatch { end, tags } };
        }
    }
    MatchOutcome::NoMatch
}

#[test]
fn optimized_and_minimized_agree_in_both_modes() {
    use tdfa::optimizer::{add_fallback_regops, minimize, optimize};
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lim = GenLimits::default();
    let inputs = all_strings(b"ab", 6);
    for _ in 0..400 {
        let e = random_regex(&mut rng, &lim);
        let n = e.tags().len();
        let nfa = build_tnfa(&e, n);
        let mut d = determinize(&nfa, &vec![false; n], DEFAULT_MAX_STATES).unwrap();
        add_fallback_regops(&mut d);
        let raw = Program::new(&d);
        optimize(&mut d);
        let opt = Program::new(&d);
        let min = Program::new(&minimize(&d));
        for s in &inputs {
            let want = simulate(&nfa, s);
            let lp = longest_prefix_oracle(&nfa, s);
            for (name, p) in [("raw", &raw), ("opt", &opt), ("min", &min)] {
                assert_eq!(offsets(&p.exec(s, Mode::Full)), want, "{name} {} on {:?}", e, String::from_utf8_lossy(s));
                assert_eq!(p.exec(s, Mode::LongestPrefix), lp, "{name} prefix {} on {:?}", e, String::from_utf8_lossy(s));
            }
        }
    }
}

fn lists(m: &MatchOutcome) -> Option<Vec<Vec<Option<usize>>>> {
    m.tags().map(|t| {
        t.iter()
            .map(|v| match v {
                TagValue::List(l) => l.clone(),
                TagValue::Offset(o) => vec![*o],
            })
            .collect()
    })
}

#[test]
fn optimized_histories_agree() {
    use tdfa::optimizer::{add_fallback_regops, minimize, optimize};
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lim = GenLimits::default();
    let inputs = all_strings(b"ab", 6);
    for _ in 0..300 {
        let e = random_regex(&mut rng, &lim);
        let n = e.tags().len();
        let nfa = build_tnfa(&e, n);
        let mut d = determinize(&nfa, &vec![true; n], DEFAULT_MAX_STATES).unwrap();
        add_fallback_regops(&mut d);
        optimize(&mut d);
        let min = Program::new(&minimize(&d));
        let opt = Program::new(&d);
        for s in &inputs {
            let want = simulate_lists(&nfa, s);
            for p in [&opt, &min] {
                assert_eq!(lists(&p.exec(s, Mode::Full)), want, "{} on {:?}", e, String::from_utf8_lossy(s));
                let end = p.exec(s, Mode::LongestPrefix).end(s.len());
                if let Some(end) = end {
                    assert_eq!(lists(&p.exec(s, Mode::LongestPrefix)), simulate_lists(&nfa, &s[..end]));
                }
            }
        }
    }
}
