//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

mod common;

use std::cell::Cell;
use std::time::{Duration, Instant};

use common::*;
use dcxg_core::activation::{
    associative_strength, base_activation, plain_activation, salience, total_activation, CueKind, CueMatch, ObjectKind,
};
use dcxg_core::fs::{loose_unify, Provenance, VectorRole};
use dcxg_core::processor::{Route, TraceKind};
use dcxg_core::properties::{evaluate, relaxation_score, verdict, PropertyEvaluation, Verdict};
use dcxg_core::{
    interpret_batch, tokenize, ActivationParams, ActivationRecord, FeatureStructure, Processor, PropertyConstraint,
    PropertyKind, Weight,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};
use serde_json::json;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol
}

fn unification_laws() -> Outcome {
    let h = law_hierarchy();
    let started = Instant::now();
    let compatible_pairs = Cell::new(0usize);
    let compatible_triples = Cell::new(0usize);
    let structures = Cell::new(0usize);
    let result = runner(1000).run(&(feature_structure(), feature_structure(), feature_structure()), |(a, b, c)| {
        structures.set(structures.get() + 3);
        for x in [&a, &b, &c] {
            prop_assert!(x.depth() <= 4, "depth {} > 4", x.depth());
            law_idempotent(x, &h).map_err(TestCaseError::fail)?;
        }
        for (x, y) in [(&a, &b), (&b, &c), (&a, &c)] {
            law_commutative(x, y, &h).map_err(TestCaseError::fail)?;
            law_monotone(x, y, &h).map_err(TestCaseError::fail)?;
            law_reentrancy(x, y, &h).map_err(TestCaseError::fail)?;
        }
        if dcxg_core::fs::unify(&a, &b, &h).is_ok() {
            compatible_pairs.set(compatible_pairs.get() + 1);
        }
        if law_associative(&a, &b, &c, &h).map_err(TestCaseError::fail)? {
            compatible_triples.set(compatible_triples.get() + 1);
        }
        Ok(())
    });
    let elapsed = started.elapsed();
    result.map_err(|e| e.to_string())?;
    let (structures, compatible_pairs, compatible_triples) =
        (structures.get(), compatible_pairs.get(), compatible_triples.get());
    ensure!(compatible_triples > 0, "no compatible triple was generated");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{structures} structures, {compatible_pairs} compatible pairs, {compatible_triples} compatible triples, {elapsed:.2?}"
    ))
}

fn cue(weight: Weight, f: f64, fan: usize) -> CueMatch {
    CueMatch { cue: "c".into(), kind: CueKind::Syntactic, weight: Some(weight), f, fan, satisfied: true }
}

fn activation_arithmetic() -> Outcome {
    let p = ActivationParams::default();
    let tol = 1e-9;

    let s = associative_strength(&p, 2).map_err(|e| e.to_string())?;
    ensure!(close(s, 2.0 - 2f64.ln(), tol) && close(s, 1.30685, 1e-5), "associative strength {s}");

    let b = base_activation(3.0, 2.0, &p).map_err(|e| e.to_string())?;
    ensure!(close(b, 4f64.ln() - 0.5 * 2f64.ln(), tol) && close(b, 1.03972, 1e-5), "base activation {b}");

    let single = ActivationRecord::new("x", ObjectKind::Construction, 0.0, vec![cue(Weight::Hard, 1.0, 1)]);
    let a = total_activation(&single, &p);
    ensure!(close(a, 2.0, tol), "single-cue activation {a}");

    let p_half = ActivationParams { soft_cue_weight: 0.5, ..p.clone() };
    let two = ActivationRecord::new(
        "x",
        ObjectKind::Construction,
        0.5,
        vec![cue(Weight::Hard, 0.9, 1), cue(Weight::Soft, 1.0, 2)],
    );
    let a = total_activation(&two, &p_half);
    ensure!(
        close(a, 0.5 + 0.9 * 2.0 + 0.5 * (2.0 - 2f64.ln()), tol) && close(a, 2.95343, 1e-5),
        "two-cue activation {a}"
    );

    let mixed = ActivationRecord::new(
        "x",
        ObjectKind::Construction,
        0.0,
        vec![cue(Weight::Hard, 1.0, 1), cue(Weight::Soft, 1.0, 1)],
    );
    let sigma = salience(&mixed, &p);
    ensure!(close(sigma, 1.4, tol), "salience {sigma}");

    let ev = PropertyEvaluation { verdicts: vec![Verdict::Violated; 2], hard_violations: 0, soft_violations: 2 };
    let r = relaxation_score(&ev, 0.25);
    ensure!(close(r, 0.75 * 0.75, tol), "relaxation score {r}");

    // with every F = 1 the distributional form must reduce to the plain one bit for bit
    let record = (
        -3.0..3.0f64,
        prop::collection::vec((any::<bool>(), any::<bool>(), 1usize..50, any::<bool>()), 0..12),
        0.5..4.0f64,
    );
    let checked = Cell::new(0usize);
    runner(1000)
        .run(&record, |(base, cues, mas)| {
            let cues = cues
                .into_iter()
                .map(|(hard, typed, fan, satisfied)| CueMatch {
                    cue: "c".into(),
                    kind: CueKind::Syntactic,
                    weight: typed.then_some(if hard { Weight::Hard } else { Weight::Soft }),
                    f: 1.0,
                    fan,
                    satisfied,
                })
                .collect();
            let rec = ActivationRecord::new("r", ObjectKind::Construction, base, cues);
            let params = ActivationParams { mas, ..ActivationParams::default() };
            let (x, y) = (total_activation(&rec, &params), plain_activation(&rec, &params));
            prop_assert_eq!(x.to_bits(), y.to_bits(), "{} vs {}", x, y);
            checked.set(checked.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("hand values within {tol:e}; {} records bit-identical with F = 1", checked.get()))
}

fn property_oracle() -> Outcome {
    let started = Instant::now();
    let mut verdicts = 0u64;
    let mut assignments = 0u64;
    let mut failure = None;
    for n in 1..=6 {
        for k in 1..=4u32 {
            let mut constraints = Vec::new();
            for kind in PropertyKind::ALL {
                for a in 1..=k {
                    for b in 1..=k {
                        if a != b {
                            constraints.push(PropertyConstraint::new(kind, a, b, Weight::Hard));
                        }
                    }
                }
            }
            for_each_assignment(n, k as usize, |asg, chosen| {
                if failure.is_some() {
                    return;
                }
                assignments += 1;
                let overlap = overlapping(chosen);
                if evaluate(&constraints, asg).is_err() != overlap {
                    failure = Some(format!("n={n} {chosen:?}: overlap={overlap} but evaluate disagrees"));
                    return;
                }
                for c in &constraints {
                    let [a, b] = c.participants;
                    let got = verdict(c, asg);
                    let want = oracle_verdict(c.kind, chosen[a as usize - 1], chosen[b as usize - 1]);
                    verdicts += 1;
                    if got != want {
                        failure = Some(format!("n={n} {:?}({a},{b}) on {chosen:?}: {got:?} vs {want:?}", c.kind));
                        return;
                    }
                }
            });
        }
    }
    let elapsed = started.elapsed();
    if let Some(f) = failure {
        return Err(f);
    }
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("{verdicts} verdicts over {assignments} assignments agree, {elapsed:.2?}"))
}

fn student_read() -> Outcome {
    let (g, vs) = (grammar(), vectors());
    let p = ActivationParams::default();
    let out = Processor::new(&g, &vs, p)
        .map_err(|e| e.to_string())?
        .interpret_text("students read")
        .map_err(|e| e.to_string())?;
    let mut got = out.activated.clone();
    got.sort();
    let mut want = vec![
        "book-fr",
        "read-lexeme-cx",
        "reading-fr",
        "student-fr",
        "student-lexeme-cx",
        "student-read-event",
        "subject-predicate-cx",
    ];
    want.sort();
    ensure!(got == want, "activated {got:?}");

    let frame = out.frame("reading-fr").ok_or("no reading-fr in meaning")?;
    let reader = frame.root().get("reader").ok_or("reader unbound")?;
    ensure!(reader.provenance() == Provenance::Observed(0), "reader provenance {:?}", reader.provenance());
    let rv = reader.get("ds-vector").and_then(|v| v.vector()).ok_or("reader has no vector")?;
    ensure!(rv.key == "student" && rv.role == VectorRole::Lexical, "reader vector {rv:?}");

    let text = frame.root().get("text").ok_or("text slot missing")?;
    ensure!(text.provenance() == Provenance::Expected, "text provenance {:?}", text.provenance());
    let tf = text.resolve(&["frames", "0"]).and_then(|f| f.type_tag());
    ensure!(tf == Some("book-fr"), "text frame {tf:?}");

    let theta = out.scores["read-lexeme-cx"].theta.ok_or("no coherence score")?;
    let want_theta = hand_cosine("student", "reader");
    ensure!(close(theta, want_theta, 1e-9), "theta {theta} vs {want_theta}");
    Ok(format!("7 objects activated, reader=student (token 0), text=book-fr expected, theta={theta:.4}"))
}

fn idiom() -> Outcome {
    let (g, vs) = (grammar(), vectors());
    let proc = Processor::new(&g, &vs, ActivationParams::default()).map_err(|e| e.to_string())?;
    let name = "put-all-eggs-in-one-basket-cx";

    let mut state = proc.start();
    let mut first = None;
    for t in tokenize("put all eggs in one basket") {
        let i = t.index;
        proc.step(&mut state, t);
        if first.is_none() && !state.recognitions.is_empty() {
            first = Some(i);
        }
    }
    ensure!(first == Some(2), "first recognition after token {first:?}");

    let out = proc.interpret_text("put all eggs in one basket").map_err(|e| e.to_string())?;
    ensure!(out.recognitions.len() == 1, "{} recognitions", out.recognitions.len());
    let rec = &out.recognitions[0];
    ensure!(rec.construction == name && rec.token == 2, "recognized {} at {}", rec.construction, rec.token);
    ensure!(out.route_of(name) == Some(Route::Direct), "route {:?}", out.route_of(name));

    let (expanded, _) = g.expanded(name).ok_or("idiom not in grammar")?;
    let stored = expanded.resolve_path(&["meaning", "sem", "frames", "0"]).ok_or("idiom has no frame")?;
    let stored = expanded.subgraph(stored.id());
    let frames = out.frames();
    ensure!(frames.len() == 1, "{} frames in meaning", frames.len());
    ensure!(frames[0] == stored, "meaning {} differs from stored {}", frames[0], stored);
    let text = out.meaning.to_json().to_string();
    ensure!(!text.contains("egg-fr") && !text.contains("container-fr"), "daughter meaning leaked: {text}");

    for prefix in ["put", "put all"] {
        let o = proc.interpret_text(prefix).map_err(|e| e.to_string())?;
        ensure!(o.recognitions.is_empty(), "{prefix:?} was recognized");
    }
    Ok("recognized at token 2 via the direct route; meaning equals stored take-a-risk-fr; prefixes unrecognized".into())
}

fn ditransitive() -> Outcome {
    let (g, vs) = (grammar(), vectors());
    let proc = Processor::new(&g, &vs, ActivationParams::default()).map_err(|e| e.to_string())?;
    let name = "ditransitive-cx";
    let cx = g.construction(name).ok_or("no ditransitive")?;

    let mut state = proc.start();
    for t in tokenize("Mary gives John a book") {
        proc.step(&mut state, t);
    }
    let cand = state.candidate(name).ok_or("no candidate")?;
    let ev = evaluate(&cx.properties, &cand.assignment).map_err(|e| e.to_string())?;
    ensure!(ev.hard_violations == 0 && ev.soft_violations == 0, "violations {ev:?}");
    for (c, v) in cx.properties.iter().zip(&ev.verdicts) {
        if matches!(c.kind, PropertyKind::Linearity | PropertyKind::Adjacency) {
            ensure!(*v == Verdict::Satisfied, "{:?} {:?} is {v:?}", c.kind, c.participants);
        }
    }
    ensure!(cand.recognized, "not recognized");

    let out = proc.interpret_text("Mary gives John a book").map_err(|e| e.to_string())?;
    ensure!(out.route_of(name) == Some(Route::Direct), "route {:?}", out.route_of(name));
    let frame = out.frame("transfer-fr").ok_or("no transfer-fr")?;
    for (role, word, token) in [("agent", "mary", 0), ("recipient", "john", 2), ("theme", "book", 4)] {
        let filler = frame.root().get(role).ok_or(format!("{role} missing"))?;
        let v = filler.get("ds-vector").and_then(|v| v.vector()).map(|v| v.key.as_str());
        ensure!(v == Some(word), "{role} bound to {v:?}");
        ensure!(filler.provenance() == Provenance::Observed(token), "{role} provenance {:?}", filler.provenance());
    }

    let mut state = proc.start();
    for t in tokenize("Mary gives a book John") {
        proc.step(&mut state, t);
    }
    let cand = state.candidate(name).ok_or("no candidate")?;
    let ev = evaluate(&cx.properties, &cand.assignment).map_err(|e| e.to_string())?;
    let lin_violated = cx
        .properties
        .iter()
        .zip(&ev.verdicts)
        .any(|(c, v)| c.kind == PropertyKind::Linearity && *v == Verdict::Violated);
    ensure!(lin_violated, "swapped order violates no linearity: {ev:?}");
    ensure!(!cand.record.hard_cues_satisfied(), "all hard cues satisfied on swapped order");
    ensure!(!cand.recognized && state.recognitions.is_empty(), "swapped order was recognized");
    Ok(format!(
        "agent/recipient/theme bound; swapped order has {} hard violation(s), A={:.2}",
        ev.hard_violations, cand.record.a
    ))
}

fn similarity_gate() -> Outcome {
    let (g, vs) = (grammar(), vectors());
    let cos = hand_cosine("magazine", "theme");
    let slot = FeatureStructure::from_json(&json!({"ds-vector": {"vec": "theme", "role": "prototype"}})).unwrap();
    let filler = FeatureStructure::from_json(&json!({"ds-vector": {"vec": "magazine"}})).unwrap();

    let mut report = Vec::new();
    for t in [cos - 0.05, cos + 0.05] {
        let accept = cos >= t;
        let direct = loose_unify(&slot, &filler, &g.hierarchy, &vs, t);
        ensure!(direct.is_ok() == accept, "loose unification at {t}: {direct:?}");

        let p = ActivationParams { sim_threshold: t, ..ActivationParams::default() };
        let out = Processor::new(&g, &vs, p)
            .map_err(|e| e.to_string())?
            .interpret_text("john read a magazine")
            .map_err(|e| e.to_string())?;
        let filled = out.merges.iter().any(|m| {
            out.trace.of_kind(TraceKind::Compose).any(|r| {
                r.payload["result"] == m.result
                    && r.payload["construction"] == "read-lexeme-cx"
                    && r.payload["span"] == json!([0, 3])
            })
        });
        let rejected = out.trace.of_kind(TraceKind::Clash).find(|r| r.payload["kind"] == "similarity-below-threshold");
        ensure!(filled == accept, "threshold {t}: object slot filled = {filled}");
        if !accept {
            let r = rejected.ok_or(format!("threshold {t}: no similarity clash traced"))?;
            let score = r.payload["score"].as_f64().unwrap_or(f64::NAN);
            ensure!(close(score, cos, 1e-9), "traced score {score} vs {cos}");
        }
        report.push(format!("{t:.3}: {}", if accept { "accepted" } else { "rejected" }));
    }
    Ok(format!("cos(magazine, theme) = {cos:.6}; {}", report.join(", ")))
}

fn determinism() -> Outcome {
    let (g, vs) = (grammar(), vectors());
    let p = ActivationParams::default();
    let sentences = corpus();
    ensure!(sentences.len() >= 20, "corpus has {} sentences", sentences.len());
    let dump = |threads: usize| -> Result<String, String> {
        let results = interpret_batch(&sentences, &g, &vs, &p, threads).map_err(|e| e.to_string())?;
        let mut text = String::new();
        for r in results {
            let i = r.map_err(|e| e.to_string())?;
            text.push_str(&i.trace.to_lines());
            text.push('\n');
            text.push_str(&i.to_json().to_string());
            text.push('\n');
        }
        Ok(text)
    };
    let first = dump(1)?;
    let second = dump(1)?;
    let parallel = dump(4)?;
    ensure!(first == second, "two sequential runs differ");
    ensure!(first == parallel, "1-thread and 4-thread runs differ");
    Ok(format!("{} sentences, {} trace bytes identical across runs and thread counts", sentences.len(), first.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("unification laws", unification_laws),
        ("activation arithmetic", activation_arithmetic),
        ("property constraint oracle", property_oracle),
        ("students read walkthrough", student_read),
        ("idiom recognition point", idiom),
        ("ditransitive", ditransitive),
        ("similarity gate", similarity_gate),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("PASS {}. {name}: {detail}", n + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", n + 1);
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {}. {name}: panicked", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
