use std::fs;
use std::process::{Command, Output};

const EXAMPLE: &str = "(a)*#(?:a|#b)#b*";

fn tdfa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdfa")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn match_prints_offsets() {
    let o = tdfa(&["match", EXAMPLE, "aab"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "t1=1 t2=2 t3=2 t4=2 t5=3\n");
}

#[test]
fn every_engine_prints_the_same() {
    for engine in ["simulation", "tdfa", "multipass"] {
        for opt in ["none", "full"] {
            let o = tdfa(&["match", "--engine", engine, "--opt", opt, EXAMPLE, "aab"]);
            assert_eq!(stdout(&o), "t1=1 t2=2 t3=2 t4=2 t5=3\n", "{engine} {opt}");
        }
    }
    let o = tdfa(&["match", "--fixed-tags", EXAMPLE, "b"]);
    assert_eq!(stdout(&o), "t1=n t2=n t3=0 t4=0 t5=1\n");
}

#[test]
fn multipass_representations() {
    let o = tdfa(&["match", "--engine", "multipass", "--repr", "tstring", EXAMPLE, "aab"]);
    assert_eq!(stdout(&o), "1 a 2 1 a 2 3 4 b 5\n");
    let o = tdfa(&["match", "--engine", "multipass", "--repr", "tstring", "--tstring-style", "brackets", EXAMPLE, "b"]);
    assert_eq!(stdout(&o), "<-1><-2><3><4>b<5>\n");
    let o = tdfa(&["match", "--engine", "multipass", "--repr", "lists", EXAMPLE, "aab"]);
    assert_eq!(stdout(&o), "t1={0,1} t2={1,2} t3={2} t4={2} t5={3}\n");
    let o = tdfa(&["match", "--repr", "lists", EXAMPLE, "aab"]);
    assert_eq!(stdout(&o), "t1={0,1} t2={1,2} t3={2} t4={2} t5={3}\n");
}

#[test]
fn exit_codes() {
    assert_eq!(tdfa(&["match", EXAMPLE, "abc"]).status.code(), Some(1));
    let bad = tdfa(&["match", "(a", "x"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("offset 0"));
    assert_eq!(tdfa(&["match", "--engine", "multipass", "--mode", "longest-prefix", "a", "a"]).status.code(), Some(2));
    assert_eq!(tdfa(&["match", "--repr", "tstring", "a", "a"]).status.code(), Some(2));
    assert_eq!(tdfa(&["bogus"]).status.code(), Some(2));
    assert_eq!(tdfa(&["compile", "--max-states", "2", EXAMPLE]).status.code(), Some(4));
}

#[test]
fn longest_prefix() {
    let o = tdfa(&["match", "--mode", "longest-prefix", "#a(?:bc)?", "abx"]);
    assert_eq!(stdout(&o), "end=1 t1=0\n");
    let o = tdfa(&["match", "--mode", "longest-prefix", "#a(?:bc)?", "abc"]);
    assert_eq!(stdout(&o), "t1=0\n");
}

#[test]
fn compile_stats_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tdfa(&["compile", "--dump", "all", "--out", out, EXAMPLE]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("raw        states 4 registers 20"), "{text}");
    assert!(text.contains("minimized  states 4 registers 5 final-registers 5"), "{text}");
    for f in ["ast.json", "tnfa.dot", "raw.dot", "optimized.dot", "minimized.json", "multipass.dot", "automaton.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let cfg = fs::read_to_string(dir.path().join("cfg-00-initial.dot")).unwrap();
    assert_eq!(cfg.matches("[label=").count(), 9);
    let grid = fs::read_to_string(dir.path().join("interference-09-round2-interference.txt")).unwrap();
    assert_eq!(grid.matches('*').count(), 20);

    let o = tdfa(&["compile", "--json", EXAMPLE]);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["minimized"]["final_registers"], 5);
    assert_eq!(j["raw"]["registers"], 20);
}

#[test]
fn saved_automaton_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    tdfa(&["compile", "--fixed-tags", "--dump", "automaton", "--out", out, EXAMPLE]);
    let file = dir.path().join("automaton.json");
    let file = file.to_str().unwrap();
    for input in ["aab", "b", "ab", "aaabbb", "x", ""] {
        let direct = tdfa(&["match", "--fixed-tags", EXAMPLE, input]);
        let saved = tdfa(&["match", "--automaton", file, input]);
        assert_eq!(stdout(&direct), stdout(&saved), "{input:?}");
        assert_eq!(direct.status.code(), saved.status.code());
    }
    let input = dir.path().join("in.txt");
    fs::write(&input, "aab").unwrap();
    let o = tdfa(&["match", "--automaton", file, "--input-file", input.to_str().unwrap()]);
    assert_eq!(stdout(&o), "t1=1 t2=2 t3=2 t4=2 t5=3\n");
}

#[test]
fn fuzz_is_clean_and_reproducible() {
    let a = tdfa(&["fuzz", "--seed", "9", "--count", "40", "--max-len", "4"]);
    let b = tdfa(&["fuzz", "--seed", "9", "--count", "40", "--max-len", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("no divergence"));
}

#[test]
fn fuzz_reports_mutation() {
    let o = tdfa(&["fuzz", "--mutation", "skip-fallback", "--count", "300", "--json"]);
    assert_eq!(o.status.code(), Some(3));
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let repro = j["repro"].as_str().unwrap().to_string();
    let args: Vec<&str> = repro.split_whitespace().skip(1).collect();
    let again = tdfa(&args);
    assert_eq!(again.status.code(), Some(3));
    assert!(stdout(&again).contains(j["report"]["divergence"]["check"].as_str().unwrap()));
}

#[test]
fn bench_reports_rows() {
    let o = tdfa(&["bench", "--size-mb", "0.001", "--repeat", "1", "--pattern", "(?:#a)*a{3}", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r["bytes"].as_u64().unwrap() >= 1000));
}
