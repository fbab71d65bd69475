use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;
use serde_json::{Map, Value};

use super::{
    expand_inheritance, Construction, CueSet, Event, Frame, FrameRelation, Grammar, GrammarError, History, LexCueSpec,
    SynCue, SynCueSpec, TargetKind, ValidationIssue, ARG_ST, DS_VECTOR_PATH, FORM, MEANING, SURFACE_FORM_PATH,
    SURFACE_PATH, VAL_PATH,
};
use crate::activation::LexicalCue;
use crate::fs::{
    loose_unify_traced, parse_tag, FeaturePath, FeatureStructure, Node, NodeId, Provenance, TagTable, TypeHierarchy,
    VectorGate, VectorRole,
};
use crate::properties::{PropertyConstraint, PropertyKind, Weight};
use crate::vectors::VectorStore;

pub fn load_grammar<R: Read>(mut source: R) -> Result<Grammar, GrammarError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| GrammarError::Parse { location: "<input>".into(), reason: e.to_string() })?;
    load_grammar_str(&text)
}

pub fn load_grammar_path(path: impl AsRef<Path>) -> Result<Grammar, GrammarError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GrammarError::Parse { location: path.display().to_string(), reason: e.to_string() })?;
    load_grammar_str(&text).map_err(|e| match e {
        GrammarError::Parse { location, reason } => {
            GrammarError::Parse { location: format!("{}: {location}", path.display()), reason }
        }
        other => other,
    })
}

pub fn load_grammar_str(text: &str) -> Result<Grammar, GrammarError> {
    let value: Value = serde_json::from_str(text).map_err(|e| GrammarError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let raw = parse_document(&value)?;
    build(raw)
}

fn parse_err(location: impl Into<String>, reason: impl Into<String>) -> GrammarError {
    GrammarError::Parse { location: location.into(), reason: reason.into() }
}

fn expect_object<'v>(v: &'v Value, loc: &str) -> Result<&'v Map<String, Value>, GrammarError> {
    v.as_object().ok_or_else(|| parse_err(loc, "expected an object"))
}

fn expect_str<'v>(v: &'v Value, loc: &str) -> Result<&'v str, GrammarError> {
    v.as_str().ok_or_else(|| parse_err(loc, "expected a string"))
}

fn string_list(v: &Value, loc: &str) -> Result<Vec<String>, GrammarError> {
    let items = v.as_array().ok_or_else(|| parse_err(loc, "expected an array of strings"))?;
    items.iter().enumerate().map(|(i, s)| expect_str(s, &format!("{loc}[{i}]")).map(str::to_string)).collect()
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], loc: &str) -> Result<(), GrammarError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(parse_err(loc, format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}

fn tag_of(v: &Value, loc: &str) -> Result<u32, GrammarError> {
    let s = expect_str(v, loc)?;
    parse_tag(s).ok_or_else(|| parse_err(loc, format!("malformed tag `{s}`")))
}

fn weight_of(obj: &Map<String, Value>, loc: &str) -> Result<Option<Weight>, GrammarError> {
    match obj.get("weight") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s == "hard" => Ok(Some(Weight::Hard)),
        Some(Value::String(s)) if s == "soft" => Ok(Some(Weight::Soft)),
        Some(other) => Err(parse_err(format!("{loc}.weight"), format!("expected \"hard\" or \"soft\", got {other}"))),
    }
}

fn history_of(v: Option<&Value>, loc: &str) -> Result<History, GrammarError> {
    let Some(v) = v else { return Ok(History::default()) };
    let obj = expect_object(v, loc)?;
    check_keys(obj, &["count", "time"], loc)?;
    let num = |key: &str, default: f64| -> Result<f64, GrammarError> {
        match obj.get(key) {
            None => Ok(default),
            Some(n) => n.as_f64().ok_or_else(|| parse_err(format!("{loc}.{key}"), "expected a number")),
        }
    };
    let history = History { count: num("count", 0.0)?, time: num("time", 1.0)? };
    if !(history.count >= 0.0 && history.count.is_finite()) || !(history.time > 0.0 && history.time.is_finite()) {
        return Err(parse_err(loc, "count must be >= 0 and time > 0"));
    }
    Ok(history)
}

/// A lexical cue before tag resolution.
#[derive(Clone, Debug)]
enum RawLexCue {
    Direct(LexicalCue),
    Tag(u32),
}

#[derive(Clone, Debug)]
struct RawLex {
    cue: RawLexCue,
    weight: Option<Weight>,
}

fn parse_lex_cues(v: &Value, loc: &str, allow_tags: bool) -> Result<Vec<RawLex>, GrammarError> {
    let items = v.as_array().ok_or_else(|| parse_err(loc, "expected an array of cues"))?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let at = format!("{loc}[{i}]");
        let obj = expect_object(item, &at)?;
        check_keys(obj, &["form", "vec", "tag", "weight"], &at)?;
        let weight = weight_of(obj, &at)?;
        let present: Vec<&str> = ["form", "vec", "tag"].into_iter().filter(|k| obj.contains_key(*k)).collect();
        if present.len() != 1 {
            return Err(parse_err(&at, "a lexical cue has exactly one of `form`, `vec`, `tag`"));
        }
        let cue = match present[0] {
            "form" => RawLexCue::Direct(LexicalCue::Form(expect_str(&obj["form"], &at)?.to_lowercase())),
            "vec" => RawLexCue::Direct(LexicalCue::Vec(expect_str(&obj["vec"], &at)?.to_lowercase())),
            _ if !allow_tags => return Err(parse_err(&at, "tag cues are not allowed here")),
            _ => RawLexCue::Tag(tag_of(&obj["tag"], &format!("{at}.tag"))?),
        };
        out.push(RawLex { cue, weight });
    }
    Ok(out)
}

fn parse_syn_cues(v: &Value, loc: &str) -> Result<Vec<SynCueSpec>, GrammarError> {
    let items = v.as_array().ok_or_else(|| parse_err(loc, "expected an array of cues"))?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let at = format!("{loc}[{i}]");
        let obj = expect_object(item, &at)?;
        let weight = weight_of(obj, &at)?;
        let cue = if obj.contains_key("prop") {
            check_keys(obj, &["prop", "index", "weight"], &at)?;
            let key = expect_str(&obj["prop"], &at)?;
            let kind =
                PropertyKind::from_key(key).ok_or_else(|| parse_err(&at, format!("unknown property kind `{key}`")))?;
            let index = match obj.get("index") {
                None => 0,
                Some(n) => n.as_u64().ok_or_else(|| parse_err(&at, "`index` must be a non-negative integer"))? as usize,
            };
            SynCue::Property { kind, index }
        } else if obj.contains_key("path") {
            check_keys(obj, &["path", "value", "weight"], &at)?;
            let path = FeaturePath::parse(expect_str(&obj["path"], &at)?);
            if path.is_empty() {
                return Err(parse_err(&at, "empty feature path"));
            }
            let value = obj.get("value").unwrap_or(&Value::Null);
            let value =
                FeatureStructure::from_json(value).map_err(|e| parse_err(format!("{at}.value"), e.to_string()))?;
            SynCue::Feature { path, value }
        } else if obj.contains_key("tag") {
            check_keys(obj, &["tag", "weight"], &at)?;
            SynCue::Tag(tag_of(&obj["tag"], &format!("{at}.tag"))?)
        } else {
            return Err(parse_err(&at, "a syntactic cue needs `prop`, `path` or `tag`"));
        };
        out.push(SynCueSpec { cue, weight });
    }
    Ok(out)
}

struct RawCues {
    lexical: Vec<RawLex>,
    syntactic: Vec<SynCueSpec>,
}

fn parse_cue_set(v: Option<&Value>, loc: &str) -> Result<RawCues, GrammarError> {
    let Some(v) = v else { return Ok(RawCues { lexical: Vec::new(), syntactic: Vec::new() }) };
    let obj = expect_object(v, loc)?;
    check_keys(obj, &["lex", "syn"], loc)?;
    let lexical = match obj.get("lex") {
        Some(l) => parse_lex_cues(l, &format!("{loc}.lex"), true)?,
        None => Vec::new(),
    };
    let syntactic = match obj.get("syn") {
        Some(s) => parse_syn_cues(s, &format!("{loc}.syn"))?,
        None => Vec::new(),
    };
    Ok(RawCues { lexical, syntactic })
}

/// Joins `form`, `meaning` and `arg_st` into one sign so tags are shared.
fn sign_json(obj: &Map<String, Value>, loc: &str) -> Result<Value, GrammarError> {
    let mut sign = Map::new();
    if let Some(f) = obj.get("form") {
        sign.insert(FORM.into(), f.clone());
    }
    if let Some(m) = obj.get("meaning") {
        sign.insert(MEANING.into(), m.clone());
    }
    if let Some(a) = obj.get("arg_st") {
        if !a.is_array() {
            return Err(parse_err(format!("{loc}.arg_st"), "expected an array"));
        }
        sign.insert(ARG_ST.into(), a.clone());
    }
    Ok(Value::Object(sign))
}

struct RawConstruction {
    name: String,
    sign: FeatureStructure,
    tags: TagTable,
    words: Vec<String>,
    properties: Vec<PropertyConstraint>,
    cues: RawCues,
    supertypes: Vec<String>,
    participants: Vec<String>,
    opaque_meaning: bool,
    covert_args: bool,
    history: History,
}

struct RawFrame {
    frame: Frame,
    lex: Vec<RawLex>,
}

struct RawEvent {
    event: Event,
    trigger: RawCues,
}

struct RawGrammar {
    declared: IndexMap<String, Vec<String>>,
    constructions: Vec<RawConstruction>,
    frames: Vec<RawFrame>,
    events: Vec<RawEvent>,
}

fn parse_document(v: &Value) -> Result<RawGrammar, GrammarError> {
    let top = expect_object(v, "<root>")?;
    check_keys(top, &["hierarchy", "constructions", "frames", "events"], "<root>")?;
    let mut declared = IndexMap::new();
    if let Some(h) = top.get("hierarchy") {
        for (ty, sups) in expect_object(h, "hierarchy")? {
            declared.insert(ty.clone(), string_list(sups, &format!("hierarchy.{ty}"))?);
        }
    }
    let section = |key: &str| -> Result<Vec<(&String, &Value)>, GrammarError> {
        match top.get(key) {
            None => Ok(Vec::new()),
            Some(s) => Ok(expect_object(s, key)?.iter().collect()),
        }
    };
    let constructions =
        section("constructions")?.into_iter().map(|(n, v)| parse_construction(n, v)).collect::<Result<_, _>>()?;
    let frames = section("frames")?.into_iter().map(|(n, v)| parse_frame(n, v)).collect::<Result<_, _>>()?;
    let events = section("events")?.into_iter().map(|(n, v)| parse_event(n, v)).collect::<Result<_, _>>()?;
    Ok(RawGrammar { declared, constructions, frames, events })
}

fn parse_properties(v: Option<&Value>, loc: &str) -> Result<Vec<PropertyConstraint>, GrammarError> {
    let Some(v) = v else { return Ok(Vec::new()) };
    let obj = expect_object(v, loc)?;
    let mut out = Vec::new();
    // grouped by kind in the fixed kind order, so indices do not depend on key order
    for kind in PropertyKind::ALL {
        let Some(list) = obj.get(kind.key()) else { continue };
        let at = format!("{loc}.{kind}");
        let pairs = list.as_array().ok_or_else(|| parse_err(&at, "expected an array of tag pairs"))?;
        for (i, pair) in pairs.iter().enumerate() {
            let pat = format!("{at}[{i}]");
            match pair.as_array().map(Vec::as_slice) {
                Some([a, b]) => {
                    out.push(PropertyConstraint::new(kind, tag_of(a, &pat)?, tag_of(b, &pat)?, Weight::Hard))
                }
                _ => return Err(parse_err(&pat, "expected a pair of tags")),
            }
        }
    }
    if let Some(k) = obj.keys().find(|k| PropertyKind::from_key(k).is_none()) {
        return Err(parse_err(loc, format!("unknown property kind `{k}`")));
    }
    Ok(out)
}

fn parse_bool(obj: &Map<String, Value>, key: &str, loc: &str) -> Result<bool, GrammarError> {
    match obj.get(key) {
        None => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(parse_err(format!("{loc}.{key}"), "expected a boolean")),
    }
}

fn parse_construction(name: &str, v: &Value) -> Result<RawConstruction, GrammarError> {
    let loc = format!("constructions.{name}");
    let obj = expect_object(v, &loc)?;
    check_keys(
        obj,
        &[
            "supertypes",
            "words",
            "form",
            "meaning",
            "arg_st",
            "properties",
            "cues",
            "participants",
            "opaque_meaning",
            "covert_args",
            "history",
        ],
        &loc,
    )?;
    let parsed = FeatureStructure::parse_avm(&sign_json(obj, &loc)?).map_err(|e| parse_err(&loc, e.to_string()))?;
    let list = |key: &str| -> Result<Vec<String>, GrammarError> {
        obj.get(key).map_or(Ok(Vec::new()), |l| string_list(l, &format!("{loc}.{key}")))
    };
    let mut words: Vec<String> = Vec::new();
    for w in list("words")? {
        let w = w.to_lowercase();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    Ok(RawConstruction {
        name: name.to_string(),
        sign: parsed.fs,
        tags: parsed.tags,
        words,
        properties: parse_properties(obj.get("properties"), &format!("{loc}.properties"))?,
        cues: parse_cue_set(obj.get("cues"), &format!("{loc}.cues"))?,
        supertypes: list("supertypes")?,
        participants: list("participants")?,
        opaque_meaning: parse_bool(obj, "opaque_meaning", &loc)?,
        covert_args: parse_bool(obj, "covert_args", &loc)?,
        history: history_of(obj.get("history"), &format!("{loc}.history"))?,
    })
}

fn parse_frame(name: &str, v: &Value) -> Result<RawFrame, GrammarError> {
    let loc = format!("frames.{name}");
    let obj = expect_object(v, &loc)?;
    check_keys(obj, &["elements", "lex_cues", "relations", "prototypes", "history"], &loc)?;
    let mut structure = Map::new();
    structure.insert("$type".into(), Value::from(name));
    if let Some(e) = obj.get("elements") {
        for (role, value) in expect_object(e, &format!("{loc}.elements"))? {
            if role.starts_with('$') {
                return Err(parse_err(format!("{loc}.elements"), format!("invalid role name `{role}`")));
            }
            structure.insert(role.clone(), value.clone());
        }
    }
    let parsed = FeatureStructure::parse_avm(&Value::Object(structure)).map_err(|e| parse_err(&loc, e.to_string()))?;
    let lex = match obj.get("lex_cues") {
        Some(l) => parse_lex_cues(l, &format!("{loc}.lex_cues"), false)?,
        None => Vec::new(),
    };
    let mut relations = Vec::new();
    if let Some(r) = obj.get("relations") {
        let items = r.as_array().ok_or_else(|| parse_err(format!("{loc}.relations"), "expected an array"))?;
        for (i, item) in items.iter().enumerate() {
            let at = format!("{loc}.relations[{i}]");
            let rel = expect_object(item, &at)?;
            check_keys(rel, &["kind", "target"], &at)?;
            let field = |k: &str| rel.get(k).ok_or_else(|| parse_err(&at, format!("missing `{k}`")));
            relations.push(FrameRelation {
                kind: expect_str(field("kind")?, &at)?.to_string(),
                target: expect_str(field("target")?, &at)?.to_string(),
            });
        }
    }
    let mut prototypes = BTreeMap::new();
    if let Some(p) = obj.get("prototypes") {
        for (role, fillers) in expect_object(p, &format!("{loc}.prototypes"))? {
            let at = format!("{loc}.prototypes.{role}");
            let items = fillers.as_array().ok_or_else(|| parse_err(&at, "expected an array of fillers"))?;
            let mut list = Vec::new();
            for (i, f) in items.iter().enumerate() {
                let fat = format!("{at}[{i}]");
                let entry = match f {
                    Value::String(w) => (w.to_lowercase(), 1.0),
                    Value::Object(o) => {
                        check_keys(o, &["word", "weight"], &fat)?;
                        let word = expect_str(o.get("word").unwrap_or(&Value::Null), &fat)?.to_lowercase();
                        let weight = match o.get("weight") {
                            None => 1.0,
                            Some(w) => w.as_f64().ok_or_else(|| parse_err(&fat, "weight must be a number"))?,
                        };
                        (word, weight)
                    }
                    _ => return Err(parse_err(&fat, "expected a word or {word, weight}")),
                };
                list.push(entry);
            }
            prototypes.insert(role.clone(), list);
        }
    }
    Ok(RawFrame {
        frame: Frame {
            name: name.to_string(),
            structure: parsed.fs,
            tags: parsed.tags,
            lex_cues: Vec::new(),
            relations,
            prototypes,
            history: history_of(obj.get("history"), &format!("{loc}.history"))?,
        },
        lex,
    })
}

/// Marks every struct below `roots` as expected and every vector as an expectation.
fn mark_expected(fs: &FeatureStructure, roots: &[NodeId]) -> FeatureStructure {
    let slots: BTreeSet<NodeId> = roots.iter().flat_map(|&r| fs.reachable_from(r)).collect();
    fs.map_nodes(|id, node| match node {
        Node::Struct(s) if slots.contains(&id) => s.provenance = s.provenance.merge(Provenance::Expected),
        Node::Vector(v) => v.role = VectorRole::Expected,
        _ => {}
    })
}

fn parse_event(name: &str, v: &Value) -> Result<RawEvent, GrammarError> {
    let loc = format!("events.{name}");
    let obj = expect_object(v, &loc)?;
    check_keys(obj, &["specialize", "form", "meaning", "arg_st", "frame", "trigger", "history"], &loc)?;
    let specialize =
        expect_str(obj.get("specialize").ok_or_else(|| parse_err(&loc, "missing `specialize`"))?, &loc)?.to_string();
    let (target_kind, parsed) = if let Some(frame) = obj.get("frame") {
        if ["form", "meaning", "arg_st"].iter().any(|k| obj.contains_key(*k)) {
            return Err(parse_err(&loc, "`frame` cannot be combined with `form`, `meaning` or `arg_st`"));
        }
        let mut structure = expect_object(frame, &format!("{loc}.frame"))?.clone();
        structure.insert("$type".into(), Value::from(specialize.as_str()));
        let parsed =
            FeatureStructure::parse_avm(&Value::Object(structure)).map_err(|e| parse_err(&loc, e.to_string()))?;
        let roles: Vec<NodeId> = parsed.fs.root().features().into_iter().map(|(_, n)| n.id()).collect();
        (TargetKind::Frame, (mark_expected(&parsed.fs, &roles), parsed.tags))
    } else {
        let parsed = FeatureStructure::parse_avm(&sign_json(obj, &loc)?).map_err(|e| parse_err(&loc, e.to_string()))?;
        let args: Vec<NodeId> =
            parsed.fs.root().get(ARG_ST).map(|a| a.items().iter().map(|n| n.id()).collect()).unwrap_or_default();
        (TargetKind::Construction, (mark_expected(&parsed.fs, &args), parsed.tags))
    };
    Ok(RawEvent {
        event: Event {
            name: name.to_string(),
            specialize,
            target_kind,
            refinement: parsed.0,
            tags: parsed.1,
            trigger: CueSet::default(),
            history: history_of(obj.get("history"), &format!("{loc}.history"))?,
        },
        trigger: parse_cue_set(obj.get("trigger"), &format!("{loc}.trigger"))?,
    })
}

/// Lexical content of a tagged node: an atom is a form, a vector or a sign's
/// `ds-vector` is a vector cue, otherwise the first surface word.
fn cue_from_node(fs: &FeatureStructure, id: NodeId) -> Option<LexicalCue> {
    let node = fs.node(id);
    if let Some(a) = node.atom() {
        return Some(LexicalCue::Form(a.to_lowercase()));
    }
    if let Some(v) = node.vector() {
        return Some(LexicalCue::Vec(v.key.clone()));
    }
    if let Some(v) = node.resolve(&DS_VECTOR_PATH).and_then(|n| n.vector()) {
        return Some(LexicalCue::Vec(v.key.clone()));
    }
    [&SURFACE_PATH[..], &SURFACE_FORM_PATH[..]]
        .iter()
        .find_map(|p| node.resolve(p)?.items().first()?.word().map(|w| LexicalCue::Form(w.to_lowercase())))
}

struct Issues(Vec<ValidationIssue>);

impl Issues {
    fn push(&mut self, object: &str, rule: impl Into<String>) {
        self.0.push(ValidationIssue { object: object.to_string(), rule: rule.into() });
    }
}

fn resolve_lex(
    raw: &[RawLex],
    fs: &FeatureStructure,
    tags: &TagTable,
    owner: &str,
    issues: &mut Issues,
) -> Vec<LexCueSpec> {
    let mut out = Vec::new();
    for r in raw {
        match &r.cue {
            RawLexCue::Direct(cue) => out.push(LexCueSpec { cue: cue.clone(), tag: None, weight: r.weight }),
            RawLexCue::Tag(t) => match tags.get(*t) {
                None => issues.push(owner, format!("lexical cue references unknown tag #{t}")),
                Some(id) => match cue_from_node(fs, id) {
                    Some(cue) => out.push(LexCueSpec { cue, tag: Some(*t), weight: r.weight }),
                    None => issues.push(owner, format!("tag #{t} has no lexical content to use as a cue")),
                },
            },
        }
    }
    out
}

fn build(raw: RawGrammar) -> Result<Grammar, GrammarError> {
    let mut issues = Issues(Vec::new());

    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    let names = raw
        .constructions
        .iter()
        .map(|c| (c.name.as_str(), "construction"))
        .chain(raw.frames.iter().map(|f| (f.frame.name.as_str(), "frame")))
        .chain(raw.events.iter().map(|e| (e.event.name.as_str(), "event")));
    for (name, kind) in names {
        if let Some(prev) = seen.insert(name, kind) {
            issues.push(name, format!("name is used by both a {prev} and a {kind}"));
        }
    }

    // hierarchy: declared types, construction supertypes, frame inheritance
    let frame_names: BTreeSet<String> = raw.frames.iter().map(|f| f.frame.name.clone()).collect();
    let cx_names: BTreeSet<String> = raw.constructions.iter().map(|c| c.name.clone()).collect();
    let mut decl: IndexMap<String, Vec<String>> = raw.declared.clone();
    for c in &raw.constructions {
        for s in &c.supertypes {
            if !cx_names.contains(s.as_str()) && !raw.declared.contains_key(s) && s != crate::fs::TOP {
                issues.push(&c.name, format!("unknown supertype `{s}`"));
            }
        }
        let known: Vec<String> = c
            .supertypes
            .iter()
            .filter(|s| cx_names.contains(s.as_str()) || raw.declared.contains_key(*s) || *s == crate::fs::TOP)
            .cloned()
            .collect();
        decl.entry(c.name.clone()).or_default().extend(known);
    }
    for f in &raw.frames {
        let entry = decl.entry(f.frame.name.clone()).or_default();
        for r in &f.frame.relations {
            if !frame_names.contains(r.target.as_str()) {
                issues.push(&f.frame.name, format!("{} relation targets unknown frame `{}`", r.kind, r.target));
            } else if r.kind == "inheritance" {
                entry.push(r.target.clone());
            }
        }
    }
    let hierarchy = match TypeHierarchy::new(decl.iter().map(|(k, v)| (k.clone(), v.clone()))) {
        Ok(h) => h,
        Err(e) => {
            issues.push("hierarchy", e.to_string());
            TypeHierarchy::default()
        }
    };

    let mut constructions = IndexMap::new();
    for c in raw.constructions {
        let lexical = resolve_lex(&c.cues.lexical, &c.sign, &c.tags, &c.name, &mut issues);
        let mut properties = c.properties;
        for p in &properties {
            for t in p.participants {
                if !c.tags.contains(t) {
                    issues.push(&c.name, format!("property {p} references unknown tag #{t}"));
                }
            }
        }
        for s in &c.cues.syntactic {
            match &s.cue {
                SynCue::Property { kind, index } => {
                    match properties.iter_mut().filter(|p| p.kind == *kind).nth(*index) {
                        Some(p) => p.weight = s.weight.unwrap_or(Weight::Hard),
                        None => {
                            issues.push(&c.name, format!("cue names {kind} property {index}, which does not exist"))
                        }
                    }
                }
                SynCue::Tag(t) if !c.tags.contains(*t) => {
                    issues.push(&c.name, format!("syntactic cue references unknown tag #{t}"))
                }
                _ => {}
            }
        }
        for p in &c.participants {
            if !cx_names.contains(p.as_str()) {
                issues.push(&c.name, format!("participant `{p}` is not a construction"));
            }
        }
        if !c.covert_args {
            check_valence(&c.sign, &c.name, &mut issues);
        }
        let cx = Construction {
            name: c.name.clone(),
            sign: c.sign,
            tags: c.tags,
            words: c.words,
            properties,
            cues: CueSet { lexical, syntactic: c.cues.syntactic },
            supertypes: c.supertypes,
            participants: c.participants,
            opaque_meaning: c.opaque_meaning,
            covert_args: c.covert_args,
            history: c.history,
        };
        constructions.insert(c.name, cx);
    }

    let mut frames = IndexMap::new();
    for f in raw.frames {
        let mut frame = f.frame;
        frame.lex_cues = resolve_lex(&f.lex, &frame.structure, &frame.tags, &frame.name, &mut issues);
        let roles: Vec<String> = frame.roles().iter().map(|r| r.to_string()).collect();
        for role in frame.prototypes.keys() {
            if !roles.contains(role) {
                issues.push(&frame.name, format!("prototype given for unknown role `{role}`"));
            }
        }
        for (role, fillers) in &frame.prototypes {
            if fillers.is_empty() {
                issues.push(&frame.name, format!("prototype for `{role}` has no fillers"));
            }
            if let Some((w, x)) = fillers.iter().find(|(_, x)| !(x.is_finite() && *x > 0.0)) {
                issues.push(&frame.name, format!("prototype filler `{w}` has non-positive weight {x}"));
            }
        }
        frames.insert(frame.name.clone(), frame);
    }

    let mut events = IndexMap::new();
    for e in raw.events {
        let mut event = e.event;
        let lexical = resolve_lex(&e.trigger.lexical, &event.refinement, &event.tags, &event.name, &mut issues);
        for s in &e.trigger.syntactic {
            match &s.cue {
                SynCue::Property { .. } => issues.push(&event.name, "event triggers cannot use property cues"),
                SynCue::Tag(t) if !event.tags.contains(*t) => {
                    issues.push(&event.name, format!("trigger references unknown tag #{t}"))
                }
                _ => {}
            }
        }
        event.trigger = CueSet { lexical, syntactic: e.trigger.syntactic };
        if event.trigger.is_empty() {
            issues.push(&event.name, "an event needs at least one trigger cue");
        }
        events.insert(event.name.clone(), event);
    }

    let mut grammar = Grammar {
        hierarchy,
        declared_types: raw.declared,
        constructions,
        frames,
        events,
        expanded: IndexMap::new(),
        fans: BTreeMap::new(),
        lexicon: BTreeMap::new(),
    };

    let mut expanded = IndexMap::new();
    for c in grammar.constructions.values() {
        match expand_inheritance(c, &grammar) {
            Ok(x) => {
                expanded.insert(c.name.clone(), (x.sign, x.tags));
            }
            Err(e) => issues.push(&c.name, e.to_string()),
        }
    }
    grammar.expanded = expanded;

    for e in grammar.events.values() {
        check_event(e, &grammar, &mut issues);
    }
    check_frame_roles(&grammar, &mut issues);

    if !issues.0.is_empty() {
        return Err(GrammarError::Validation(issues.0));
    }
    grammar.fans = compute_fans(&grammar);
    grammar.lexicon = compute_lexicon(&grammar);
    Ok(grammar)
}

/// VAL and ARG-ST must agree element by element.
fn check_valence(sign: &FeatureStructure, name: &str, issues: &mut Issues) {
    let (Some(val), Some(args)) = (sign.resolve_path(&VAL_PATH), sign.root().get(ARG_ST)) else {
        return;
    };
    let (Some(v), Some(a)) = (val.list(), args.list()) else {
        return;
    };
    if v.len() != a.len() {
        issues.push(name, format!("val has {} elements but arg-st has {}", v.len(), a.len()));
        return;
    }
    let h = TypeHierarchy::default();
    for (i, (&x, &y)) in v.iter().zip(a).enumerate() {
        if x == y {
            continue;
        }
        if let Err(e) = loose_unify_traced(&sign.subgraph(x), &sign.subgraph(y), &h, VectorGate::Permissive) {
            issues.push(name, format!("val element {i} does not unify with arg-st element {i}: {e}"));
        }
    }
}

fn check_event(e: &Event, g: &Grammar, issues: &mut Issues) {
    let target = match e.target_kind {
        TargetKind::Construction => g.expanded(&e.specialize).map(|(fs, _)| fs.clone()),
        TargetKind::Frame => g.frame(&e.specialize).map(|f| f.structure.clone()),
    };
    let Some(target) = target else {
        let expected = match e.target_kind {
            TargetKind::Construction => "construction",
            TargetKind::Frame => "frame",
        };
        issues.push(&e.name, format!("specialize target `{}` is not a known {expected}", e.specialize));
        return;
    };
    if let Err(err) = loose_unify_traced(&target, &e.refinement, &g.hierarchy, VectorGate::Permissive) {
        issues.push(&e.name, format!("refinement contradicts `{}`: {err}", e.specialize));
    }
}

/// Features of frame-typed nodes must be roles of that frame or an ancestor frame.
fn check_frame_roles(g: &Grammar, issues: &mut Issues) {
    let roles_of = |frame: &str| -> BTreeSet<String> {
        g.frames
            .values()
            .filter(|f| g.hierarchy.is_subtype(frame, &f.name))
            .flat_map(|f| f.roles().into_iter().map(str::to_string))
            .collect()
    };
    let mut check = |owner: &str, fs: &FeatureStructure| {
        for id in fs.reachable() {
            let node = fs.node(id);
            let Some(ty) = node.type_tag() else { continue };
            if !g.frames.contains_key(ty) {
                continue;
            }
            let allowed = roles_of(ty);
            for (feature, _) in node.features() {
                if !allowed.contains(feature) {
                    issues.push(owner, format!("`{feature}` is not a role of frame `{ty}`"));
                }
            }
        }
    };
    for c in g.constructions.values() {
        check(&c.name, &c.sign);
    }
    for e in g.events.values() {
        check(&e.name, &e.refinement);
    }
}

fn compute_fans(g: &Grammar) -> BTreeMap<String, usize> {
    let mut fans = BTreeMap::new();
    let mut count = |keys: BTreeSet<String>| {
        for k in keys {
            *fans.entry(k).or_insert(0) += 1;
        }
    };
    let lex_keys = |cues: &[LexCueSpec]| cues.iter().map(|c| Grammar::lex_cue_key(&c.cue)).collect::<BTreeSet<_>>();
    let syn_keys = |cues: &[SynCueSpec]| {
        cues.iter()
            .filter_map(|c| match &c.cue {
                SynCue::Feature { path, value } => Some(Grammar::feature_cue_key(path, value)),
                _ => None,
            })
            .collect::<BTreeSet<_>>()
    };
    for c in g.constructions.values() {
        count(lex_keys(&c.cues.lexical).into_iter().chain(syn_keys(&c.cues.syntactic)).collect());
    }
    for f in g.frames.values() {
        count(lex_keys(&f.lex_cues));
    }
    for e in g.events.values() {
        count(lex_keys(&e.trigger.lexical).into_iter().chain(syn_keys(&e.trigger.syntactic)).collect());
    }
    fans
}

fn compute_lexicon(g: &Grammar) -> BTreeMap<String, Vec<String>> {
    let mut lexicon: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for c in g.constructions.values() {
        for w in &c.words {
            lexicon.entry(w.clone()).or_default().push(c.name.clone());
        }
    }
    lexicon
}

impl Grammar {
    /// Checks that every vector the grammar names is in `vs`.
    pub fn check_vocabulary(&self, vs: &VectorStore) -> Result<(), GrammarError> {
        let mut issues = Issues(Vec::new());
        let check_cues = |owner: &str, cues: &[LexCueSpec], issues: &mut Issues| {
            for c in cues {
                if let LexicalCue::Vec(w) = &c.cue {
                    if !vs.contains(w) {
                        issues.push(owner, format!("cue vector `{w}` is out of vocabulary"));
                    }
                }
            }
        };
        let check_fs = |owner: &str, fs: &FeatureStructure, issues: &mut Issues| {
            for id in fs.reachable() {
                if let Some(v) = fs.node(id).vector() {
                    if !vs.contains(&v.key) {
                        issues.push(owner, format!("vector `{}` is out of vocabulary", v.key));
                    }
                }
            }
        };
        for c in self.constructions.values() {
            check_cues(&c.name, &c.cues.lexical, &mut issues);
            check_fs(&c.name, &c.sign, &mut issues);
        }
        for f in self.frames.values() {
            check_cues(&f.name, &f.lex_cues, &mut issues);
            check_fs(&f.name, &f.structure, &mut issues);
            for (role, fillers) in &f.prototypes {
                for (w, _) in fillers {
                    if !vs.contains(w) {
                        issues.push(&f.name, format!("prototype filler `{w}` for `{role}` is out of vocabulary"));
                    }
                }
            }
        }
        for e in self.events.values() {
            check_cues(&e.name, &e.trigger.lexical, &mut issues);
            check_fs(&e.name, &e.refinement, &mut issues);
        }
        if issues.0.is_empty() {
            Ok(())
        } else {
            Err(GrammarError::Validation(issues.0))
        }
    }
}
