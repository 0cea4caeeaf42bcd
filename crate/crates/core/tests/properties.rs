//! Invariants of the pipeline, checked on seeded random programs and specifications.

use std::collections::BTreeSet;

use postinfer::emit::{emit_json, parse_json, tr};
use postinfer::far::{far, far_reference, Lexical};
use postinfer::gen::{random_program, random_snf, rng, MethodShape, SnfShape};
use postinfer::lang::{parse, typecheck, TypedMethod, TypedProgram};
use postinfer::oracle::{
    eval, eval_atom, inputs, interpret, interpret_passive, prop_equiv, satisfies, Domain, Position, Valuation, Value,
    DEFAULT_FUEL,
};
use postinfer::passive::passivize;
use postinfer::pipeline::{run_method, Options, Status};
use postinfer::refine::{infer_frame, prune_unsat, refine, RefineOptions};
use postinfer::sp::{infer, SpOptions};
use postinfer::spec::{Case, Specification};
use proptest::prelude::*;

fn program(seed: u64, count: usize) -> TypedProgram {
    let src = random_program(&mut rng(seed), count, MethodShape::default());
    typecheck(&parse(&src).unwrap()).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

/// Final specification of a method with compaction on or off.
fn inferred(m: &TypedMethod, far: bool) -> Specification {
    let r = run_method(m, &Options { far, ..Options::default() });
    assert_eq!(r.status, Status::Inferred, "{:?}", r.message);
    r.spec.unwrap()
}

/// Rewrites `x$3` to `x` everywhere in `text`.
fn strip_versions(text: &str) -> String {
    let mut out = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '$' {
            while chars.peek().is_some_and(char::is_ascii_digit) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Turns a passive dump back into source: `x$k` becomes the identifier `x_k`, version-0 names
/// that are not parameters become globals, and every other name becomes a declared local.
fn passive_as_source(dump: &str) -> String {
    let renamed = dump.replace('$', "_");
    let header = renamed.lines().next().unwrap();
    let mut names = BTreeSet::new();
    let mut word = String::new();
    for c in dump.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
            word.push(c);
        } else {
            if let Some((base, k)) = word.split_once('$') {
                names.insert((base.to_string(), k.to_string()));
            }
            word.clear();
        }
    }
    let mut globals = String::new();
    let mut locals = String::new();
    for (base, k) in names {
        let ident = format!("{base}_{k}");
        if header.contains(&format!("int {ident}")) {
            continue;
        }
        if k == "0" {
            globals.push_str(&format!("global int {ident};\n"));
        } else {
            locals.push_str(&format!("    int {ident};\n"));
        }
    }
    let (sig, body) = renamed.split_once('\n').unwrap();
    format!("{globals}{sig}\n{locals}{body}")
}

/// Direct reading of the satisfaction relation on one run: every applicable case's rest holds.
fn cases_hold(cases: &[Case], v: &Valuation) -> bool {
    let pre = Valuation::at_pre(&v.pre);
    cases.iter().all(|c| {
        !c.pre.iter().all(|a| eval_atom(a.expr(), &pre, Position::Pre) == Ok(true))
            || c.rest.iter().all(|a| eval_atom(a.expr(), v, Position::Rest) == Ok(true))
    })
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn passive_form_agrees_with_the_interpreter(seed in any::<u64>()) {
        let p = program(seed, 3);
        for m in &p.methods {
            let pm = passivize(m);
            for input in Domain::default().states(&inputs(m)).unwrap() {
                let direct = interpret(m, &input, DEFAULT_FUEL);
                let passive = interpret_passive(&pm, &input, DEFAULT_FUEL);
                prop_assert_eq!(direct, passive, "{}\n{}", m.name(), pm);
            }
        }
    }

    #[test]
    fn passivizing_twice_only_renames(seed in any::<u64>()) {
        let p = program(seed, 3);
        for m in &p.methods {
            let once = passivize(m).to_string();
            let src = passive_as_source(&once);
            let again = typecheck(&parse(&src).unwrap()).unwrap_or_else(|e| panic!("{e}\n{src}"));
            let twice = passivize(&again.methods[0]).to_string();
            let expected: Vec<String> = once.replace('$', "_").lines().map(String::from).collect();
            let got: Vec<String> = strip_versions(&twice).lines().map(String::from).collect();
            prop_assert_eq!(got, expected, "{}", src);
        }
    }

    #[test]
    fn inferred_specs_hold(seed in any::<u64>()) {
        let p = program(seed, 2);
        for m in &p.methods {
            for compact in [false, true] {
                let spec = inferred(m, compact);
                let r = satisfies(m, &spec, Domain::default());
                prop_assert!(r.is_ok(), "{}: {}", m.name(), r.unwrap_err());
            }
        }
    }

    #[test]
    fn loop_free_cases_are_disjoint_and_cover(seed in any::<u64>()) {
        let p = program(seed, 2);
        for m in &p.methods {
            let cases = inferred(m, false).cases().unwrap();
            for input in Domain::default().states(&inputs(m)).unwrap() {
                let at = Valuation::at_pre(&input);
                let enabled = cases
                    .iter()
                    .filter(|c| c.pre.iter().all(|a| eval_atom(a.expr(), &at, Position::Pre) == Ok(true)))
                    .count();
                prop_assert_eq!(enabled, 1, "{} on {:?}", m.name(), input);
            }
        }
    }

    #[test]
    fn tr_agrees_with_case_reading(seed in any::<u64>(), rotate in 0usize..4) {
        let p = program(seed, 2);
        for m in &p.methods {
            let spec = inferred(m, true);
            // shifting the rests between leaves yields a spec the method usually violates
            let flat = spec.flatten().cases().unwrap();
            let n = flat.len();
            let mutated: Vec<Case> = (0..n)
                .map(|i| Case::new(flat[i].pre.clone(), flat[(i + rotate) % n].rest.clone()))
                .collect();
            for s in [spec.clone(), Specification::from_cases(mutated.clone())] {
                let formula = tr(&s);
                let cases = s.flatten().cases().unwrap();
                for input in Domain::default().states(&inputs(m)).unwrap() {
                    let out = interpret(m, &input, DEFAULT_FUEL).unwrap();
                    let v = Valuation { pre: input.clone(), post: out.post, result: out.result };
                    let direct = cases_hold(&cases, &v);
                    let via_tr = eval(&formula, &v, Position::Rest) == Ok(Value::Bool(true));
                    prop_assert_eq!(direct, via_tr, "{} on {:?}\n{}", m.name(), input, formula);
                }
            }
        }
    }

    #[test]
    fn frame_covers_every_change(seed in any::<u64>()) {
        let p = program(seed, 3);
        for m in &p.methods {
            let frame = infer_frame(m);
            for input in Domain::default().states(&inputs(m)).unwrap() {
                let out = interpret(m, &input, DEFAULT_FUEL).unwrap();
                for g in m.globals() {
                    if input[g] != out.post[g] {
                        prop_assert!(frame.assignable.iter().any(|a| a == g), "{} writes {}", m.name(), g);
                    }
                }
            }
        }
    }

    #[test]
    fn pruning_keeps_satisfaction(seed in any::<u64>()) {
        let p = program(seed, 2);
        for m in &p.methods {
            let pm = passivize(m);
            let raw = infer(&pm, &SpOptions::default()).unwrap();
            let ext = refine(&raw, &pm, RefineOptions { simplify: false, deep_prune: None }).unwrap().spec;
            prop_assume!(satisfies(m, &ext, Domain::default()).is_ok());
            let shallow = prune_unsat(&ext, None).unwrap();
            prop_assert!(satisfies(m, &shallow, Domain::default()).is_ok());
            if let Ok(deep) = prune_unsat(&ext, Some((&m.env, Domain::default()))) {
                prop_assert!(satisfies(m, &deep, Domain::default()).is_ok());
                prop_assert!(deep.leaf_count() <= shallow.leaf_count());
            }
        }
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn far_is_sound(seed in any::<u64>()) {
        let s = random_snf(&mut rng(seed), SnfShape::default());
        let f = far(&s, &Lexical).unwrap();
        prop_assert!(prop_equiv(&s, &f).unwrap(), "{}\n=>\n{}", s, f);
    }

    #[test]
    fn far_conserves_cases(seed in any::<u64>()) {
        let s = random_snf(&mut rng(seed), SnfShape::default());
        let f = far(&s, &Lexical).unwrap();
        // the input is a set of cases: repeats count once
        prop_assert_eq!(f.leaf_count(), s.cases().unwrap().len());
        let key = |c: &Case| {
            let mut pre: Vec<String> = c.pre.texts().into_iter().map(String::from).collect();
            pre.sort();
            let mut rest: Vec<String> = c.rest.texts().into_iter().map(String::from).collect();
            rest.sort();
            (pre, rest)
        };
        let mut before: Vec<_> = s.cases().unwrap().iter().map(key).collect();
        let mut after: Vec<_> = f.flatten().cases().unwrap().iter().map(key).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn far_is_deterministic(seed in any::<u64>()) {
        let s = random_snf(&mut rng(seed), SnfShape::default());
        prop_assert_eq!(far(&s, &Lexical).unwrap(), far(&s, &Lexical).unwrap());
    }

    #[test]
    fn far_matches_the_graph_per_round_definition(seed in any::<u64>(), big in any::<bool>()) {
        let shape = if big { SnfShape { min_cases: 20, max_cases: 80, ..SnfShape::default() } } else { SnfShape::default() };
        let s = random_snf(&mut rng(seed), shape);
        prop_assert_eq!(far(&s, &Lexical).unwrap(), far_reference(&s, &Lexical).unwrap());
    }

    #[test]
    fn far_output_is_shallow(seed in any::<u64>()) {
        let s = random_snf(&mut rng(seed), SnfShape::default());
        let f = far(&s, &Lexical).unwrap();
        let Specification::Disjunction(top) = &f else { panic!("top level is a disjunction") };
        for alt in top {
            match alt {
                Specification::Leaf(_) => {}
                Specification::Distrib { body, .. } => prop_assert!(body.is_snf()),
                Specification::Disjunction(_) => prop_assert!(false, "nested disjunction at the top"),
            }
        }
    }

    #[test]
    fn json_round_trips(seed in any::<u64>()) {
        let s = random_snf(&mut rng(seed), SnfShape::default());
        prop_assert_eq!(parse_json(&emit_json(&s)).unwrap(), s.clone());
        let f = far(&s, &Lexical).unwrap();
        prop_assert_eq!(parse_json(&emit_json(&f)).unwrap(), f);
    }
}
