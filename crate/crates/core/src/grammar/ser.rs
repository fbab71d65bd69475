use serde_json::{json, Map, Value};

use super::{CueSet, Grammar, History, LexCueSpec, SynCue, TargetKind, ARG_ST, FORM, MEANING};
use crate::activation::LexicalCue;
use crate::fs::{FeatureStructure, TagTable};
use crate::properties::PropertyKind;

fn tag_str(t: u32) -> Value {
    Value::from(format!("#{t}"))
}

fn weighted(mut obj: Map<String, Value>, w: Option<crate::properties::Weight>) -> Value {
    if let Some(w) = w {
        obj.insert("weight".into(), Value::from(w.as_str()));
    }
    Value::Object(obj)
}

fn lex_cue_json(c: &LexCueSpec) -> Value {
    let mut obj = Map::new();
    match (c.tag, &c.cue) {
        (Some(t), _) => obj.insert("tag".into(), tag_str(t)),
        (None, LexicalCue::Form(f)) => obj.insert("form".into(), Value::from(f.as_str())),
        (None, LexicalCue::Vec(v)) => obj.insert("vec".into(), Value::from(v.as_str())),
    };
    weighted(obj, c.weight)
}

fn cues_json(cues: &CueSet) -> Value {
    let syn: Vec<Value> = cues
        .syntactic
        .iter()
        .map(|s| {
            let mut obj = Map::new();
            match &s.cue {
                SynCue::Property { kind, index } => {
                    obj.insert("prop".into(), Value::from(kind.key()));
                    obj.insert("index".into(), Value::from(*index));
                }
                SynCue::Feature { path, value } => {
                    obj.insert("path".into(), Value::from(path.to_string()));
                    obj.insert("value".into(), value.to_json());
                }
                SynCue::Tag(t) => {
                    obj.insert("tag".into(), tag_str(*t));
                }
            }
            weighted(obj, s.weight)
        })
        .collect();
    json!({ "lex": cues.lexical.iter().map(lex_cue_json).collect::<Vec<_>>(), "syn": syn })
}

fn history_json(h: &History) -> Value {
    json!({ "count": h.count, "time": h.time })
}

/// Splits a sign back into its `form`, `meaning` and `arg_st` entries.
fn sign_parts(fs: &FeatureStructure, tags: &TagTable, out: &mut Map<String, Value>) {
    if let Value::Object(sign) = fs.to_json_labeled(&tags.labels()) {
        for (key, target) in [(FORM, "form"), (MEANING, "meaning"), (ARG_ST, "arg_st")] {
            if let Some(v) = sign.get(key) {
                out.insert(target.into(), v.clone());
            }
        }
    }
}

impl Grammar {
    /// Canonical grammar file; loading it gives back an equal grammar.
    pub fn to_json(&self) -> Value {
        let hierarchy: Map<String, Value> = self.declared_types.iter().map(|(k, v)| (k.clone(), json!(v))).collect();

        let mut constructions = Map::new();
        for c in self.constructions.values() {
            let mut obj = Map::new();
            if !c.supertypes.is_empty() {
                obj.insert("supertypes".into(), json!(c.supertypes));
            }
            if !c.words.is_empty() {
                obj.insert("words".into(), json!(c.words));
            }
            sign_parts(&c.sign, &c.tags, &mut obj);
            if !c.properties.is_empty() {
                let mut props = Map::new();
                for kind in PropertyKind::ALL {
                    let pairs: Vec<Value> = c
                        .properties
                        .iter()
                        .filter(|p| p.kind == kind)
                        .map(|p| json!([tag_str(p.participants[0]), tag_str(p.participants[1])]))
                        .collect();
                    if !pairs.is_empty() {
                        props.insert(kind.key().into(), Value::Array(pairs));
                    }
                }
                obj.insert("properties".into(), Value::Object(props));
            }
            if !c.cues.is_empty() {
                obj.insert("cues".into(), cues_json(&c.cues));
            }
            if !c.participants.is_empty() {
                obj.insert("participants".into(), json!(c.participants));
            }
            if c.opaque_meaning {
                obj.insert("opaque_meaning".into(), Value::Bool(true));
            }
            if c.covert_args {
                obj.insert("covert_args".into(), Value::Bool(true));
            }
            obj.insert("history".into(), history_json(&c.history));
            constructions.insert(c.name.clone(), Value::Object(obj));
        }

        let mut frames = Map::new();
        for f in self.frames.values() {
            let mut obj = Map::new();
            let mut elements = match f.structure.to_json_labeled(&f.tags.labels()) {
                Value::Object(m) => m,
                _ => Map::new(),
            };
            elements.remove("$type");
            obj.insert("elements".into(), Value::Object(elements));
            if !f.lex_cues.is_empty() {
                obj.insert("lex_cues".into(), Value::Array(f.lex_cues.iter().map(lex_cue_json).collect()));
            }
            if !f.relations.is_empty() {
                let rels: Vec<Value> =
                    f.relations.iter().map(|r| json!({ "kind": r.kind, "target": r.target })).collect();
                obj.insert("relations".into(), Value::Array(rels));
            }
            if !f.prototypes.is_empty() {
                let protos: Map<String, Value> = f
                    .prototypes
                    .iter()
                    .map(|(role, fillers)| {
                        let list: Vec<Value> = fillers.iter().map(|(w, x)| json!({ "word": w, "weight": x })).collect();
                        (role.clone(), Value::Array(list))
                    })
                    .collect();
                obj.insert("prototypes".into(), Value::Object(protos));
            }
            obj.insert("history".into(), history_json(&f.history));
            frames.insert(f.name.clone(), Value::Object(obj));
        }

        let mut events = Map::new();
        for e in self.events.values() {
            let mut obj = Map::new();
            obj.insert("specialize".into(), Value::from(e.specialize.as_str()));
            match e.target_kind {
                TargetKind::Construction => sign_parts(&e.refinement, &e.tags, &mut obj),
                TargetKind::Frame => {
                    let mut frame = match e.refinement.to_json_labeled(&e.tags.labels()) {
                        Value::Object(m) => m,
                        _ => Map::new(),
                    };
                    frame.remove("$type");
                    obj.insert("frame".into(), Value::Object(frame));
                }
            }
            obj.insert("trigger".into(), cues_json(&e.trigger));
            obj.insert("history".into(), history_json(&e.history));
            events.insert(e.name.clone(), Value::Object(obj));
        }

        json!({
            "hierarchy": hierarchy,
            "constructions": constructions,
            "frames": frames,
            "events": events,
        })
    }
}
