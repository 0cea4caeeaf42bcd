//! End-to-end acceptance checks. Runs without the libtest harness so the verdict lines are
//! always printed; exits non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use postinfer::emit::{emit_contract, lint, metrics};
use postinfer::far::{far, to_spec, Lexical, Node, SpecGraph};
use postinfer::gen::{random_program, random_snf, rng, sequential_branches, MethodShape, SnfShape};
use postinfer::lang::{parse, typecheck, TypedMethod};
use postinfer::oracle::{prop_equiv, satisfies, Domain};
use postinfer::pipeline::{run_method, Options, Status};
use postinfer::spec::{AtomSet, Case, Specification};
use rand::seq::SliceRandom;
use rand::Rng;

type Verdict = Result<String, String>;

fn here(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn methods(src: &str) -> Vec<TypedMethod> {
    typecheck(&parse(src).map_err(|e| e.to_string()).unwrap()).unwrap().methods
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn cmp_end_to_end() -> Verdict {
    let start = Instant::now();
    let src = fs::read_to_string(here("corpus/cmp.imp")).unwrap();
    let m = &methods(&src)[0];

    let flat = run_method(m, &Options { far: false, ..Options::default() });
    check(flat.status == Status::Inferred, || format!("status {:?}", flat.status))?;
    let cases = flat.spec.unwrap().cases().unwrap();
    let expected = [
        Case::of(&["a < b"], &["\\result == -1"]),
        Case::of(&["!(a < b)", "a > b"], &["\\result == 1"]),
        Case::of(&["!(a < b)", "!(a > b)"], &["\\result == 0"]),
    ];
    check(cases.len() == 3, || format!("{} flat cases", cases.len()))?;
    for e in &expected {
        check(cases.iter().any(|c| c.same_as(e)), || format!("missing flat case {e}"))?;
    }

    let r = run_method(m, &Options::default());
    let spec = r.spec.unwrap();
    let shape = Specification::Disjunction(vec![
        Specification::Leaf(expected[0].clone()),
        Specification::distrib(
            AtomSet::of(&["!(a < b)"]),
            Specification::from_cases([
                Case::of(&["a > b"], &["\\result == 1"]),
                Case::of(&["!(a > b)"], &["\\result == 0"]),
            ]),
        ),
    ]);
    check(spec == shape, || format!("compacted shape {spec}"))?;
    let golden = fs::read_to_string(here("tests/golden/cmp.spec")).unwrap();
    check(emit_contract(&spec, &r.frame) == golden, || "contract differs from the golden file".into())?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("3 flat cases, nested shape matches golden, {:.0?}", start.elapsed()))
}

fn far_soundness() -> Verdict {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut merged = 0;
    for i in 0..1000 {
        let s = random_snf(&mut r, SnfShape::default());
        let f = far(&s, &Lexical).map_err(|e| e.to_string())?;
        if f != s {
            merged += 1;
        }
        let same = prop_equiv(&s, &f).map_err(|e| format!("spec {i}: {e}"))?;
        check(same, || format!("spec {i} changed meaning:\n{s}\n=>\n{f}"))?;
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("1000 specs equivalent ({merged} restructured), {:.1?}", start.elapsed()))
}

fn sp_against_interpreter() -> Verdict {
    let start = Instant::now();
    let shape = MethodShape::default();
    let mut checked = 0;
    for seed in 0..50 {
        let src = random_program(&mut rng(seed), 4, shape);
        for m in methods(&src) {
            let res = run_method(&m, &Options::default());
            let spec =
                res.spec.ok_or_else(|| format!("seed {seed} {}: {:?} {:?}", m.name(), res.status, res.message))?;
            satisfies(&m, &spec, Domain::new(shape.bound))
                .map_err(|e| format!("seed {seed} {}: {e}\n{src}", m.name()))?;
            checked += 1;
        }
    }
    check(checked == 200, || format!("{checked} methods"))?;
    within(Duration::from_secs(120), start)?;
    Ok(format!("200/200 methods satisfy their inferred specs, {:.1?}", start.elapsed()))
}

fn flat_tree_readback() -> Verdict {
    let mut r = rng(7);
    let pool = ["p", "q", "r", "s", "!(p)", "x > 0", "y == 1"];
    for t in 0..100 {
        let n = r.gen_range(1..=50);
        let mut g = SpecGraph::new();
        let mut leaves = Vec::new();
        for i in 0..n {
            let k = r.gen_range(0..=3);
            let pre: Vec<&str> = pool.choose_multiple(&mut r, k).copied().collect();
            let rest = format!("\\result == {i}");
            let c = Case::of(&pre, &[rest.as_str()]);
            let id = g.add_node(Node::Case(c.clone()), i);
            g.add_edge(g.root(), id);
            leaves.push((id, c));
        }
        check(g.is_flat(), || format!("tree {t} not flat"))?;
        let expected = Specification::from_cases(leaves.iter().map(|(_, c)| c.clone()));
        let got = to_spec(&g, g.root()).map_err(|e| e.to_string())?;
        check(got == expected, || format!("tree {t}: {got} != {expected}"))?;

        // drop a random subset; a pair survives together exactly when both leaves remain
        let removed: BTreeSet<usize> = (0..n).filter(|_| r.gen_bool(0.3)).collect();
        for &i in &removed {
            g.remove_vertex(leaves[i].0);
        }
        let got = to_spec(&g, g.root()).map_err(|e| e.to_string())?;
        let present = |i: usize| matches!(&got, Specification::Disjunction(a) if a.contains(&Specification::Leaf(leaves[i].1.clone())));
        for i in 0..n {
            for j in i + 1..n {
                let both = present(i) && present(j);
                let vertices = g.is_vertex(leaves[i].0) && g.is_vertex(leaves[j].0);
                check(both == vertices, || format!("tree {t}: pair ({i}, {j}) present={both}, vertices={vertices}"))?;
            }
        }
    }
    Ok("100 random flat trees".into())
}

fn blowup_reduction() -> Verdict {
    let src = sequential_branches("branch8", 8, 3);
    let m = &methods(&src)[0];
    let r = run_method(m, &Options::default());
    check(r.status == Status::Inferred, || format!("status {:?}", r.status))?;
    let raw = r.raw.as_ref().unwrap();
    check(raw.leaf_count() == 256, || format!("{} raw cases", raw.leaf_count()))?;
    let before = metrics(raw, &r.frame);
    let after = metrics(r.spec.as_ref().unwrap(), &r.frame);
    check(after.nesting < before.nesting, || format!("nesting {} -> {}", before.nesting, after.nesting))?;
    let ratio = after.length as f64 / before.length as f64;
    check(ratio < 0.25, || format!("length {} -> {} ({:.1}%)", before.length, after.length, 100.0 * ratio))?;
    Ok(format!(
        "256 raw cases; nesting {} -> {}; length {} -> {} ({:.1}%)",
        before.nesting,
        after.nesting,
        before.length,
        after.length,
        100.0 * ratio
    ))
}

fn corpus_lint() -> Verdict {
    let mut methods_seen = 0;
    let mut problems = Vec::new();
    for entry in fs::read_dir(here("corpus")).unwrap() {
        let path = entry.unwrap().path();
        let src = fs::read_to_string(&path).unwrap();
        for m in methods(&src) {
            let r = run_method(&m, &Options::default());
            let Some(spec) = &r.spec else {
                problems.push(format!("{}: {:?}", m.name(), r.status));
                continue;
            };
            methods_seen += 1;
            let text = emit_contract(spec, &r.frame);
            problems.extend(lint(spec, &text).iter().map(|i| format!("{}: {i}", m.name())));
        }
    }
    check(problems.is_empty(), || problems.join("; "))?;
    Ok(format!("{methods_seen} contracts, no issues"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "spec" || x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let corpus = here("corpus");
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let bin = env!("CARGO_BIN_EXE_postinfer");
        let out = dir.path().to_str().unwrap();
        let ok = Command::new(bin)
            .args(["infer", corpus.to_str().unwrap(), "--out-dir", out])
            .stderr(Stdio::null())
            .status()
            .unwrap();
        let csv = dir.path().join("metrics.csv");
        let ok2 = Command::new(bin)
            .args(["metrics", corpus.to_str().unwrap(), "--out", csv.to_str().unwrap()])
            .stderr(Stdio::null())
            .status()
            .unwrap();
        (ok.success() && ok2.success(), snapshot(dir.path()))
    };
    let (ok_a, a) = run_once();
    let (ok_b, b) = run_once();
    check(ok_a && ok_b, || "a run failed".into())?;
    check(a.len() > 1, || "no output files".into())?;
    check(a == b, || {
        let diff: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
        format!("outputs differ: {diff:?}")
    })?;
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Verdict); 7] = [
        (1, cmp_end_to_end),
        (2, far_soundness),
        (3, sp_against_interpreter),
        (4, flat_tree_readback),
        (5, blowup_reduction),
        (6, corpus_lint),
        (7, determinism),
    ];
    let mut failed = 0;
    for (n, run) in criteria {
        match run() {
            Ok(note) => println!("[PASS] criterion {n}: {note}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {n}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
