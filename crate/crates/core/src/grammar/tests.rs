use serde_json::json;

use super::*;
use crate::fs::{subsumes, FeatureStructure};

fn load(v: serde_json::Value) -> Result<Grammar, GrammarError> {
    load_grammar_str(&v.to_string())
}

fn issues(err: GrammarError) -> Vec<ValidationIssue> {
    match err {
        GrammarError::Validation(v) => v,
        other => panic!("expected validation issues, got {other}"),
    }
}

fn small() -> serde_json::Value {
    json!({
        "hierarchy": {},
        "constructions": {
            "subject-predicate-cx": {
                "form": {"syn": {"cat": "V", "xarg": {"$tag": "#1", "form": {"syn": {"cat": "N", "val": []}}, "gf": "subj"}}},
                "cues": {"syn": [{"path": "form.syn.cat", "value": "V"}]}
            },
            "laughed": {
                "supertypes": ["subject-predicate-cx"],
                "words": ["laughed"],
                "form": {"syn": {"xarg": "#1", "val": [{"$tag": "#1", "meaning": {"sem": {"index": "#2"}}}]}},
                "meaning": {"sem": {"frames": [{"$type": "laughing-fr", "agt": "#2"}]}},
                "arg_st": ["#1"]
            }
        },
        "frames": {"laughing-fr": {"elements": {"agt": null}}},
        "events": {}
    })
}

#[test]
fn expansion_shares_the_subject_into_val() {
    let g = load(small()).unwrap();
    let (fs, _) = g.expanded("laughed").unwrap();
    let subj = fs.resolve_path(&["form", "syn", "val", "0"]).unwrap();
    assert_eq!(subj.resolve(&["form", "syn", "cat"]).and_then(|n| n.atom()), Some("N"));
    assert_eq!(subj.get("gf").and_then(|n| n.atom()), Some("subj"));
    assert_eq!(fs.resolve_path(&["form", "syn", "xarg"]).unwrap().id(), subj.id());
    let sp = g.construction("subject-predicate-cx").unwrap();
    assert!(subsumes(&sp.sign, fs, &g.hierarchy));
}

#[test]
fn expansion_is_idempotent() {
    let g = load(small()).unwrap();
    let once = expand_inheritance(g.construction("laughed").unwrap(), &g).unwrap();
    let twice = expand_inheritance(&once, &g).unwrap();
    assert_eq!(once.sign, twice.sign);
    assert_eq!(once.tags, twice.tags);
}

#[test]
fn root_construction_is_unchanged() {
    let g = load(small()).unwrap();
    let sp = g.construction("subject-predicate-cx").unwrap();
    assert_eq!(&expand_inheritance(sp, &g).unwrap(), sp);
}

#[test]
fn conflicting_ancestors_clash() {
    let v = json!({
        "constructions": {
            "noun-cx": {"form": {"syn": {"cat": "N"}}},
            "verb-cx": {"form": {"syn": {"cat": "V"}}},
            "odd-cx": {"supertypes": ["noun-cx", "verb-cx"]}
        }
    });
    let errs = issues(load(v).unwrap_err());
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].object, "odd-cx");
    assert!(errs[0].rule.contains("`noun-cx` and `verb-cx` at form.syn.cat"), "{}", errs[0].rule);
}

#[test]
fn inheritance_clash_names_both_ancestors() {
    let mut v = json!({
        "constructions": {
            "noun-cx": {"form": {"syn": {"cat": "N"}}},
            "verb-cx": {"form": {"syn": {"cat": "V"}}},
            "ok-cx": {}
        }
    });
    let g = load(v.clone()).unwrap();
    let mut odd = g.construction("ok-cx").unwrap().clone();
    odd.supertypes = vec!["noun-cx".into(), "verb-cx".into()];
    let err = expand_inheritance(&odd, &g).unwrap_err();
    assert_eq!(
        err,
        GrammarError::InheritanceClash {
            construction: "ok-cx".into(),
            first: "noun-cx".into(),
            second: "verb-cx".into(),
            path: FeaturePath::parse("form.syn.cat"),
        }
    );
    v["constructions"]["ok-cx"] = json!({"supertypes": ["noun-cx"], "form": {"syn": {"cat": "V"}}});
    let errs = issues(load(v).unwrap_err());
    assert!(errs[0].rule.contains("`noun-cx` and `ok-cx`"), "{}", errs[0].rule);
}

#[test]
fn unknown_cue_tag_is_reported() {
    let mut v = small();
    v["constructions"]["laughed"]["cues"] = json!({"lex": [{"tag": "#9"}]});
    let errs = issues(load(v).unwrap_err());
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].object, "laughed");
    assert!(errs[0].rule.contains("#9"));
}

#[test]
fn missing_event_target_is_reported() {
    let mut v = small();
    v["events"] = json!({"ghost-event": {"specialize": "nothing-cx", "trigger": {"lex": [{"form": "boo"}]}}});
    let errs = issues(load(v).unwrap_err());
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].object, "ghost-event");
}

#[test]
fn all_issues_are_collected() {
    let mut v = small();
    v["events"] = json!({"ghost-event": {"specialize": "nothing-cx", "trigger": {"lex": [{"form": "boo"}]}}});
    v["constructions"]["laughed"]["cues"] = json!({"syn": [{"tag": "#7"}, {"prop": "lin", "index": 0}]});
    v["frames"]["laughing-fr"]["relations"] = json!([{"kind": "inheritance", "target": "nowhere-fr"}]);
    let errs = issues(load(v).unwrap_err());
    let objects: Vec<&str> = errs.iter().map(|e| e.object.as_str()).collect();
    assert_eq!(objects, ["laughing-fr", "laughed", "laughed", "ghost-event"]);
}

#[test]
fn valence_and_arg_st_must_agree() {
    let mut v = small();
    v["constructions"]["laughed"]["arg_st"] = json!([{"form": {"syn": {"cat": "P"}}}]);
    v["constructions"]["laughed"]["form"]["syn"]["val"] = json!([{"form": {"syn": {"cat": "N"}}}]);
    v["constructions"]["laughed"]["form"]["syn"]["xarg"] = json!(null);
    let errs = issues(load(v.clone()).unwrap_err());
    assert!(errs[0].rule.contains("val element 0"), "{}", errs[0].rule);
    v["constructions"]["laughed"]["covert_args"] = json!(true);
    assert!(load(v).is_ok());
}

#[test]
fn contradictory_event_is_rejected() {
    let mut v = small();
    v["events"] = json!({"odd-event": {
        "specialize": "laughed",
        "form": {"syn": {"cat": "N"}},
        "trigger": {"lex": [{"form": "laughed"}]}
    }});
    let errs = issues(load(v).unwrap_err());
    assert_eq!(errs[0].object, "odd-event");
}

#[test]
fn unknown_frame_role_is_reported() {
    let mut v = small();
    v["constructions"]["laughed"]["meaning"]["sem"]["frames"][0]["patient"] = json!("x");
    let errs = issues(load(v).unwrap_err());
    assert!(errs[0].rule.contains("`patient` is not a role of frame `laughing-fr`"));
}

#[test]
fn names_must_be_disjoint() {
    let mut v = small();
    v["frames"]["laughed"] = json!({"elements": {}});
    let errs = issues(load(v).unwrap_err());
    assert_eq!(errs[0].object, "laughed");
}

#[test]
fn parse_errors_carry_a_location() {
    match load_grammar_str("{\"constructions\": {\n  \"x\": [}") {
        Err(GrammarError::Parse { location, .. }) => assert!(location.starts_with("line 2"), "{location}"),
        other => panic!("{other:?}"),
    }
    let v = json!({"constructions": {"x": {"form": {"a": "#x"}}}});
    match load(v) {
        Err(GrammarError::Parse { location, reason }) => {
            assert_eq!(location, "constructions.x");
            assert!(reason.contains("malformed tag"));
        }
        other => panic!("{other:?}"),
    }
    let v = json!({"constructions": {"x": {"colour": 1}}});
    assert!(matches!(load(v), Err(GrammarError::Parse { .. })));
}

#[test]
fn round_trip_is_stable() {
    let g = load(small()).unwrap();
    let again = load_grammar_str(&g.to_json().to_string()).unwrap();
    assert_eq!(g, again);
    assert_eq!(g.to_json(), again.to_json());
}

#[test]
fn event_refinements_are_expectations() {
    let mut v = small();
    v["events"] = json!({"laugh-event": {
        "specialize": "laughed",
        "arg_st": [{"meaning": {"sem": {"ds-vector": {"vec": "child"}}}}],
        "trigger": {"lex": [{"form": "laughed", "weight": "hard"}]}
    }});
    let g = load(v).unwrap();
    let e = g.event("laugh-event").unwrap();
    let arg = e.refinement.resolve_path(&["arg-st", "0"]).unwrap();
    assert_eq!(arg.provenance(), crate::fs::Provenance::Expected);
    let vec = arg.resolve(&["meaning", "sem", "ds-vector"]).unwrap().vector().unwrap();
    assert_eq!(vec.role, crate::fs::VectorRole::Expected);
    assert_eq!(e.target_kind, TargetKind::Construction);
    let target = g.expanded("laughed").unwrap().0;
    let vs = crate::vectors::VectorStore::parse_str("1 2\nchild 1 0\n").unwrap();
    let out = apply_event(e, target, &g.hierarchy, &vs, 0.6).unwrap();
    assert!(subsumes(target, &out, &g.hierarchy));
    assert_eq!(apply_event(e, &out, &g.hierarchy, &vs, 0.6).unwrap(), out);
}

#[test]
fn fans_count_objects_sharing_a_cue() {
    let mut v = small();
    v["frames"]["laughing-fr"]["lex_cues"] = json!([{"form": "laughed"}, {"form": "laughed"}]);
    v["constructions"]["laughed"]["cues"] = json!({"lex": [{"form": "laughed"}]});
    let g = load(v).unwrap();
    assert_eq!(g.fan("form:laughed"), 2);
    assert_eq!(g.fan("form:nothing"), 1);
    assert_eq!(g.lexical_entries("LAUGHED"), ["laughed".to_string()]);
    assert!(g.knows_surface("laughed"));
    assert!(!g.knows_surface("cried"));
    let _ = FeatureStructure::unspecified();
}
