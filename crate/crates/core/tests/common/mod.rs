//! Shared fixtures, generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use dcxg_core::fs::{subsumes, unify, FeatureStructure, Node, NodeId, TypeHierarchy};
use dcxg_core::properties::{PropertyKind, Span, SpanAssignment, Verdict};
use dcxg_core::{load_grammar_path, Grammar, VectorStore};
use proptest::prelude::*;
use serde_json::{json, Map, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn grammar() -> Grammar {
    load_grammar_path(fixture("grammar.json")).expect("fixture grammar loads")
}

pub fn vectors() -> VectorStore {
    VectorStore::load_path(fixture("vectors.txt")).expect("fixture vectors load")
}

pub fn corpus() -> Vec<String> {
    std::fs::read_to_string(fixture("corpus.txt"))
        .expect("corpus")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// Raw rows of the fixture vector file, parsed without the library.
pub fn raw_vectors() -> BTreeMap<String, Vec<f64>> {
    let text = std::fs::read_to_string(fixture("vectors.txt")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split_whitespace();
            let w = it.next().unwrap().to_string();
            (w, it.map(|x| x.parse().unwrap()).collect())
        })
        .collect()
}

/// Cosine computed by hand from the raw file rows.
pub fn hand_cosine(a: &str, b: &str) -> f64 {
    let rows = raw_vectors();
    let (u, v) = (&rows[a], &rows[b]);
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    dot / (nu.sqrt() * nv.sqrt())
}

// ---- random feature structures ----

pub fn law_hierarchy() -> TypeHierarchy {
    TypeHierarchy::new([("a", vec![]), ("b", vec!["a"]), ("c", vec!["a"]), ("d", vec!["b", "c"]), ("e", vec![])])
        .unwrap()
}

const TYPES: [&str; 5] = ["a", "b", "c", "d", "e"];
const FEATURES: [&str; 4] = ["f", "g", "h", "i"];
const ATOMS: [&str; 8] = ["x", "y", "z", "u", "v", "w", "p", "q"];

fn leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        3 => Just(Value::Null),
        2 => prop::sample::select(&ATOMS[..]).prop_map(|a| json!(a)),
        2 => prop::sample::select(&TYPES[..]).prop_map(|t| json!({"$type": t})),
        1 => prop::sample::select(&["#1", "#2"][..]).prop_map(|t| json!(t)),
        1 => (prop::sample::select(&["#1", "#2"][..]), prop::sample::select(&TYPES[..]), prop::sample::select(&ATOMS[..]))
            .prop_map(|(tag, t, a)| json!({"$tag": tag, "$type": t, "f": a})),
    ]
}

/// AVMs of depth at most 4 and fan-out at most 4, with up to two shared nodes.
pub fn avm() -> impl Strategy<Value = Value> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        (
            prop::option::of(prop::sample::select(&TYPES[..])),
            prop::collection::btree_map(prop::sample::select(&FEATURES[..]), inner, 1..=4),
        )
            .prop_map(|(ty, feats)| {
                let mut obj = Map::new();
                if let Some(t) = ty {
                    obj.insert("$type".into(), json!(t));
                }
                for (k, v) in feats {
                    obj.insert(k.to_string(), v);
                }
                Value::Object(obj)
            })
    })
}

/// Keeps the first definition of each tag and turns later ones into references.
fn dedupe_tags(v: &mut Value, seen: &mut Vec<String>) {
    match v {
        Value::Object(obj) => {
            if let Some(Value::String(tag)) = obj.get("$tag").cloned() {
                if seen.contains(&tag) {
                    *v = Value::String(tag);
                    return;
                }
                seen.push(tag);
            }
            for (_, child) in obj.iter_mut() {
                dedupe_tags(child, seen);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|c| dedupe_tags(c, seen)),
        _ => {}
    }
}

pub fn to_fs(mut v: Value) -> FeatureStructure {
    dedupe_tags(&mut v, &mut Vec::new());
    FeatureStructure::from_json(&v).expect("generated AVM parses")
}

pub fn feature_structure() -> impl Strategy<Value = FeatureStructure> {
    avm().prop_map(to_fs)
}

/// All root paths of every node, for sharing checks.
pub fn paths_by_node(fs: &FeatureStructure) -> BTreeMap<NodeId, Vec<Vec<String>>> {
    fn walk(fs: &FeatureStructure, id: NodeId, path: &mut Vec<String>, out: &mut BTreeMap<NodeId, Vec<Vec<String>>>) {
        out.entry(id).or_default().push(path.clone());
        match fs.node(id).content() {
            Node::Struct(s) => {
                for (k, &c) in &s.features {
                    path.push(k.clone());
                    walk(fs, c, path, out);
                    path.pop();
                }
            }
            Node::List(items) => {
                for (i, &c) in items.iter().enumerate() {
                    path.push(i.to_string());
                    walk(fs, c, path, out);
                    path.pop();
                }
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    walk(fs, fs.root_id(), &mut Vec::new(), &mut out);
    out
}

/// Every pair of paths sharing a node in `a` still shares one in `b`.
pub fn sharing_preserved(a: &FeatureStructure, b: &FeatureStructure) -> bool {
    paths_by_node(a).values().filter(|ps| ps.len() > 1).all(|ps| {
        let ids: Vec<Option<NodeId>> = ps.iter().map(|p| b.resolve_path(p).map(|n| n.id())).collect();
        ids.iter().all(|id| id.is_some() && *id == ids[0])
    })
}

// ---- unification laws, as plain predicates ----

pub fn law_idempotent(a: &FeatureStructure, h: &TypeHierarchy) -> Result<(), String> {
    match unify(a, a, h) {
        Ok(u) if u == *a => Ok(()),
        Ok(u) => Err(format!("a ⊔ a = {u} differs from a = {a}")),
        Err(e) => Err(format!("a ⊔ a failed: {e}")),
    }
}

pub fn law_commutative(a: &FeatureStructure, b: &FeatureStructure, h: &TypeHierarchy) -> Result<(), String> {
    match (unify(a, b, h), unify(b, a, h)) {
        (Ok(x), Ok(y)) if x == y => Ok(()),
        (Err(x), Err(y)) if x.path() == y.path() => Ok(()),
        (x, y) => Err(format!("a ⊔ b = {x:?}, b ⊔ a = {y:?}")),
    }
}

pub fn law_associative(
    a: &FeatureStructure,
    b: &FeatureStructure,
    c: &FeatureStructure,
    h: &TypeHierarchy,
) -> Result<bool, String> {
    let left = unify(a, b, h).and_then(|ab| unify(&ab, c, h));
    let right = unify(b, c, h).and_then(|bc| unify(a, &bc, h));
    match (left, right) {
        (Ok(x), Ok(y)) if x == y => Ok(true),
        (Err(_), Err(_)) => Ok(false),
        (x, y) => Err(format!("(a ⊔ b) ⊔ c = {x:?}, a ⊔ (b ⊔ c) = {y:?}")),
    }
}

pub fn law_monotone(a: &FeatureStructure, b: &FeatureStructure, h: &TypeHierarchy) -> Result<(), String> {
    let Ok(u) = unify(a, b, h) else { return Ok(()) };
    if !subsumes(a, &u, h) || !subsumes(b, &u, h) {
        return Err(format!("{u} is not subsumed by both inputs"));
    }
    if subsumes(a, b, h) && unify(a, b, h).map(|x| x != *b).unwrap_or(true) {
        return Err("a ⊑ b but a ⊔ b differs from b".into());
    }
    Ok(())
}

pub fn law_reentrancy(a: &FeatureStructure, b: &FeatureStructure, h: &TypeHierarchy) -> Result<(), String> {
    let Ok(u) = unify(a, b, h) else { return Ok(()) };
    if sharing_preserved(a, &u) && sharing_preserved(b, &u) {
        Ok(())
    } else {
        Err(format!("sharing lost in {u}"))
    }
}

// ---- property constraint oracle ----

/// All spans of a sentence of length `n`.
pub fn spans(n: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for s in 0..n {
        for e in s..n {
            out.push(Span::new(s, e));
        }
    }
    out
}

/// Verdict by enumerating token positions rather than comparing span ends.
pub fn oracle_verdict(kind: PropertyKind, a: Option<Span>, b: Option<Span>) -> Verdict {
    let positions = |s: Span| (s.start..=s.end).collect::<Vec<_>>();
    let ok = |b: bool| if b { Verdict::Satisfied } else { Verdict::Violated };
    match kind {
        PropertyKind::Dependency => Verdict::Inapplicable,
        PropertyKind::Linearity | PropertyKind::Adjacency => {
            let (Some(a), Some(b)) = (a, b) else { return Verdict::Inapplicable };
            let (pa, pb) = (positions(a), positions(b));
            let before = pa.iter().all(|i| pb.iter().all(|j| i < j));
            if kind == PropertyKind::Linearity {
                ok(before)
            } else {
                ok(before && pa.iter().any(|i| pb.iter().any(|j| *j == i + 1)))
            }
        }
        PropertyKind::Cooccurrence => ok(a.is_some() == b.is_some()),
        PropertyKind::Exclusion => ok(!(a.is_some() && b.is_some())),
        PropertyKind::Requirement => ok(a.is_none() || b.is_some()),
    }
}

/// Every assignment of `k` participants (tags 1..=k) over a sentence of
/// length `n`, overlapping ones included.
pub fn for_each_assignment(n: usize, k: usize, mut f: impl FnMut(&SpanAssignment, &[Option<Span>])) {
    let options: Vec<Option<Span>> = std::iter::once(None).chain(spans(n).into_iter().map(Some)).collect();
    let mut idx = vec![0usize; k];
    loop {
        let chosen: Vec<Option<Span>> = idx.iter().map(|&i| options[i]).collect();
        let mut asg = SpanAssignment::new();
        for (t, s) in chosen.iter().enumerate() {
            if let Some(s) = s {
                asg.set(t as u32 + 1, *s);
            }
        }
        f(&asg, &chosen);
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            idx[pos] += 1;
            if idx[pos] < options.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn overlapping(chosen: &[Option<Span>]) -> bool {
    let set: Vec<Span> = chosen.iter().flatten().copied().collect();
    (0..set.len()).any(|i| (i + 1..set.len()).any(|j| set[i].overlaps(&set[j])))
}
