//! The grammar: constructions, frames, events and the type hierarchy.
//!
//! Every construction is one feature structure (its *sign*) with the root
//! features `form`, `meaning` and `arg-st`, so reentrancy tags are shared
//! across the three. Frames are structures typed by the frame name whose
//! features are the frame elements.

mod event;
mod expand;
mod load;
mod ser;

use std::collections::BTreeMap;

use indexmap::IndexMap;
use thiserror::Error;

use crate::activation::{base_activation, ActivationParams, LexicalCue};
use crate::fs::{FeaturePath, FeatureStructure, NodeId, NodeRef, TagTable, TypeHierarchy};
use crate::properties::{PropertyConstraint, PropertyKind, Weight};

pub use event::{apply_event, apply_event_traced};
pub use expand::expand_inheritance;
pub use load::{load_grammar, load_grammar_path, load_grammar_str};

pub const FORM: &str = "form";
pub const MEANING: &str = "meaning";
pub const ARG_ST: &str = "arg-st";
pub const VAL_PATH: [&str; 3] = ["form", "syn", "val"];
pub const SURFACE_PATH: [&str; 2] = ["form", "surface"];
pub const SURFACE_FORM_PATH: [&str; 2] = ["form", "surface_form"];
pub const FRAMES_PATH: [&str; 3] = ["meaning", "sem", "frames"];
pub const DS_VECTOR_PATH: [&str; 3] = ["meaning", "sem", "ds-vector"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrammarError {
    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },
    #[error("{} validation error(s):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ValidationIssue>),
    #[error("inheritance clash in `{construction}` between `{first}` and `{second}` at {path}")]
    InheritanceClash { construction: String, first: String, second: String, path: FeaturePath },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub object: String,
    pub rule: String,
}

impl std::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.object, self.rule)
    }
}

/// A lexical cue as declared, optionally tied to a participant tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LexCueSpec {
    pub cue: LexicalCue,
    pub tag: Option<u32>,
    pub weight: Option<Weight>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynCue {
    /// The `index`-th constraint of kind `kind` in the construction's properties.
    Property { kind: PropertyKind, index: usize },
    /// Some instance carries, at `path`, a value subsumed by `value`.
    Feature { path: FeaturePath, value: FeatureStructure },
    /// The participant with this tag has been matched.
    Tag(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynCueSpec {
    pub cue: SynCue,
    pub weight: Option<Weight>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CueSet {
    pub lexical: Vec<LexCueSpec>,
    pub syntactic: Vec<SynCueSpec>,
}

impl CueSet {
    pub fn is_empty(&self) -> bool {
        self.lexical.is_empty() && self.syntactic.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lexical.len() + self.syntactic.len()
    }
}

/// Access history feeding base activation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct History {
    pub count: f64,
    pub time: f64,
}

impl Default for History {
    fn default() -> Self {
        History { count: 0.0, time: 1.0 }
    }
}

impl History {
    pub fn base(&self, params: &ActivationParams) -> f64 {
        base_activation(self.count, self.time, params).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Construction {
    pub name: String,
    /// `{form, meaning, arg-st}` as declared.
    pub sign: FeatureStructure,
    pub tags: TagTable,
    /// Surface variants instantiating this construction; the first is the lemma.
    pub words: Vec<String>,
    /// Flattened properties, grouped by kind in declaration order.
    pub properties: Vec<PropertyConstraint>,
    pub cues: CueSet,
    pub supertypes: Vec<String>,
    pub participants: Vec<String>,
    pub opaque_meaning: bool,
    pub covert_args: bool,
    pub history: History,
}

impl Construction {
    pub fn form(&self) -> Option<NodeRef<'_>> {
        self.sign.root().get(FORM)
    }

    pub fn meaning(&self) -> Option<NodeRef<'_>> {
        self.sign.root().get(MEANING)
    }

    pub fn arg_st(&self) -> Vec<NodeRef<'_>> {
        self.sign.root().get(ARG_ST).map(|n| n.items()).unwrap_or_default()
    }

    pub fn is_lexical(&self) -> bool {
        !self.words.is_empty()
    }

    pub fn lemma(&self) -> Option<&str> {
        self.words.first().map(String::as_str)
    }

    pub fn tag_node(&self, tag: u32) -> Option<NodeId> {
        self.tags.get(tag)
    }

    /// Index into `properties` of the `index`-th constraint of `kind`.
    pub fn property_index(&self, kind: PropertyKind, index: usize) -> Option<usize> {
        self.properties.iter().enumerate().filter(|(_, c)| c.kind == kind).nth(index).map(|(i, _)| i)
    }

    /// Participant tags: tags named by properties or lexical cues, first use first.
    pub fn participant_tags(&self) -> Vec<u32> {
        let mut out = Vec::new();
        let mut push = |t: u32| {
            if !out.contains(&t) {
                out.push(t);
            }
        };
        for c in &self.cues.lexical {
            if let Some(t) = c.tag {
                push(t);
            }
        }
        for c in &self.properties {
            c.participants.iter().for_each(|&t| push(t));
        }
        for c in &self.cues.syntactic {
            if let SynCue::Tag(t) = c.cue {
                push(t);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRelation {
    pub kind: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub name: String,
    /// Typed by the frame name; one feature per frame element.
    pub structure: FeatureStructure,
    pub tags: TagTable,
    pub lex_cues: Vec<LexCueSpec>,
    pub relations: Vec<FrameRelation>,
    /// Role to weighted prototype fillers.
    pub prototypes: BTreeMap<String, Vec<(String, f64)>>,
    pub history: History,
}

impl Frame {
    pub fn roles(&self) -> Vec<&str> {
        self.structure.root().features().into_iter().map(|(k, _)| k).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Construction,
    Frame,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub name: String,
    pub specialize: String,
    pub target_kind: TargetKind,
    /// Shaped like the target (a sign or a frame structure). Slots are
    /// marked expected and vectors carry the expected role.
    pub refinement: FeatureStructure,
    pub tags: TagTable,
    pub trigger: CueSet,
    pub history: History,
}

/// Reference to any grammar object.
#[derive(Clone, Copy, Debug)]
pub enum GrammarObject<'g> {
    Construction(&'g Construction),
    Frame(&'g Frame),
    Event(&'g Event),
}

#[derive(Clone, Debug)]
pub struct Grammar {
    pub hierarchy: TypeHierarchy,
    /// Hierarchy section exactly as declared, for serialization.
    pub declared_types: IndexMap<String, Vec<String>>,
    pub constructions: IndexMap<String, Construction>,
    pub frames: IndexMap<String, Frame>,
    pub events: IndexMap<String, Event>,
    expanded: IndexMap<String, (FeatureStructure, TagTable)>,
    fans: BTreeMap<String, usize>,
    lexicon: BTreeMap<String, Vec<String>>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.to_json() == other.to_json()
    }
}

impl Grammar {
    pub fn construction(&self, name: &str) -> Option<&Construction> {
        self.constructions.get(name)
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.get(name)
    }

    pub fn event(&self, name: &str) -> Option<&Event> {
        self.events.get(name)
    }

    pub fn object(&self, name: &str) -> Option<GrammarObject<'_>> {
        if let Some(c) = self.constructions.get(name) {
            return Some(GrammarObject::Construction(c));
        }
        if let Some(f) = self.frames.get(name) {
            return Some(GrammarObject::Frame(f));
        }
        self.events.get(name).map(GrammarObject::Event)
    }

    /// The construction's sign with all ancestors folded in, and its tags.
    pub fn expanded(&self, name: &str) -> Option<(&FeatureStructure, &TagTable)> {
        self.expanded.get(name).map(|(fs, t)| (fs, t))
    }

    /// Number of grammar objects listing a cue with this key (at least 1).
    pub fn fan(&self, cue_key: &str) -> usize {
        self.fans.get(cue_key).copied().unwrap_or(1).max(1)
    }

    /// Lexical constructions listing `word` (case-folded), in declaration order.
    pub fn lexical_entries(&self, word: &str) -> &[String] {
        self.lexicon.get(&word.to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True if `word` occurs anywhere in the grammar as a surface form.
    pub fn knows_surface(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        if self.lexicon.contains_key(&w) {
            return true;
        }
        let in_cues = |cues: &[LexCueSpec]| cues.iter().any(|c| matches!(&c.cue, LexicalCue::Form(f) if *f == w));
        self.constructions.values().any(|c| {
            in_cues(&c.cues.lexical)
                || c.sign
                    .resolve_path(&SURFACE_FORM_PATH)
                    .is_some_and(|n| n.items().iter().any(|i| i.word().is_some_and(|x| x.to_lowercase() == w)))
        }) || self.frames.values().any(|f| in_cues(&f.lex_cues))
            || self.events.values().any(|e| in_cues(&e.trigger.lexical))
    }

    /// Key under which fans are counted.
    pub fn lex_cue_key(cue: &LexicalCue) -> String {
        match cue {
            LexicalCue::Form(f) => format!("form:{}", f.to_lowercase()),
            LexicalCue::Vec(v) => format!("vec:{}", v.to_lowercase()),
        }
    }

    pub fn feature_cue_key(path: &FeaturePath, value: &FeatureStructure) -> String {
        format!("path:{path}={}", value.to_json())
    }
}

#[cfg(test)]
mod tests;
