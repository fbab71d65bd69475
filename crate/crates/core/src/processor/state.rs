use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::{Processor, Token, Trace};
use crate::activation::{ActivationRecord, CueKind, CueMatch, ObjectKind};
use crate::fs::{FeaturePath, FeatureStructure};
use crate::grammar::{Grammar, SynCue, VAL_PATH};
use crate::properties::{Span, SpanAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Compositional,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Compositional => "compositional",
        }
    }
}

/// A sign built from input: a scanned word, a composition or a direct recognition.
#[derive(Clone, Debug)]
pub struct Instance {
    pub uid: usize,
    /// `None` for words the grammar mentions but has no lexical entry for.
    pub construction: Option<String>,
    pub sign: FeatureStructure,
    pub span: Span,
    pub route: Route,
    pub alive: bool,
    /// Surface words an opaque recognition still absorbs, in order.
    pub(crate) remaining: VecDeque<String>,
}

impl Instance {
    pub fn is_bare(&self) -> bool {
        self.construction.is_none()
    }

    /// True when the valence list is absent or empty.
    pub fn is_saturated(&self) -> bool {
        self.sign.resolve_path(&VAL_PATH).and_then(|v| v.list().map(<[_]>::is_empty)).unwrap_or(true)
    }
}

/// A participant bound to part of the input.
#[derive(Clone, Debug)]
pub(crate) struct Binding {
    pub span: Span,
    /// Sign of the instance that matched, as it was when matched.
    pub sign: Option<FeatureStructure>,
}

/// Running evidence for one grammar object.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub record: ActivationRecord,
    pub assignment: SpanAssignment,
    pub(crate) bindings: BTreeMap<u32, Binding>,
    pub recognized: bool,
    pub fired: bool,
    pub activated: bool,
}

impl Candidate {
    pub fn name(&self) -> &str {
        &self.record.name
    }

    pub fn kind(&self) -> ObjectKind {
        self.record.kind
    }
}

/// One successful compositional step, kept for replay.
#[derive(Clone, Debug, Serialize)]
pub struct Merge {
    pub token: usize,
    pub head: usize,
    pub dependent: usize,
    pub result: usize,
    /// The head as unified (after any expectation was set aside).
    #[serde(skip)]
    pub host: FeatureStructure,
    pub slot: FeaturePath,
    #[serde(skip)]
    pub guest: FeatureStructure,
}

#[derive(Clone, Debug, Serialize)]
pub struct Recognition {
    pub construction: String,
    pub token: usize,
    pub span: Span,
    pub instance: usize,
    pub a: f64,
    pub cues: Vec<CueMatch>,
}

#[derive(Clone, Debug)]
pub struct ParseState {
    pub tokens: Vec<Token>,
    pub instances: Vec<Instance>,
    /// Constructions, frames, then events, each in declaration order.
    pub candidates: Vec<Candidate>,
    pub recognitions: Vec<Recognition>,
    pub merges: Vec<Merge>,
    /// Indices of tokens known neither to the grammar nor to the vectors.
    pub oov: Vec<usize>,
    pub trace: Trace,
    pub(crate) tried: BTreeSet<(usize, usize)>,
    pub(crate) event_tried: BTreeSet<(usize, usize)>,
    /// Event refinements applied to fresh copies of their targets at the end.
    pub expectations: Vec<(String, FeatureStructure)>,
}

fn cue_matches(
    g: &Grammar,
    lexical: &[crate::grammar::LexCueSpec],
    syntactic: &[crate::grammar::SynCueSpec],
) -> Vec<CueMatch> {
    let mut out: Vec<CueMatch> = lexical
        .iter()
        .map(|c| CueMatch {
            cue: match c.tag {
                Some(t) => format!("#{t}:{}", c.cue.describe()),
                None => c.cue.describe(),
            },
            kind: CueKind::Lexical,
            weight: c.weight,
            f: 0.0,
            fan: g.fan(&Grammar::lex_cue_key(&c.cue)),
            satisfied: false,
        })
        .collect();
    out.extend(syntactic.iter().map(|s| {
        let (cue, fan) = match &s.cue {
            SynCue::Property { kind, index } => (format!("prop:{kind}[{index}]"), 1),
            SynCue::Feature { path, value } => {
                let key = Grammar::feature_cue_key(path, value);
                let fan = g.fan(&key);
                (key, fan)
            }
            SynCue::Tag(t) => (format!("tag:#{t}"), 1),
        };
        CueMatch { cue, kind: CueKind::Syntactic, weight: s.weight, f: 0.0, fan, satisfied: false }
    }));
    out
}

impl ParseState {
    pub(crate) fn new(p: &Processor<'_>) -> Self {
        let g = p.grammar;
        let candidate = |name: &str, kind, base, cues| Candidate {
            record: ActivationRecord::new(name, kind, base, cues),
            assignment: SpanAssignment::new(),
            bindings: BTreeMap::new(),
            recognized: false,
            fired: false,
            activated: false,
        };
        let mut candidates = Vec::new();
        for c in g.constructions.values() {
            let cues = cue_matches(g, &c.cues.lexical, &c.cues.syntactic);
            candidates.push(candidate(&c.name, ObjectKind::Construction, c.history.base(&p.params), cues));
        }
        for f in g.frames.values() {
            let cues = cue_matches(g, &f.lex_cues, &[]);
            candidates.push(candidate(&f.name, ObjectKind::Frame, f.history.base(&p.params), cues));
        }
        for e in g.events.values() {
            let cues = cue_matches(g, &e.trigger.lexical, &e.trigger.syntactic);
            candidates.push(candidate(&e.name, ObjectKind::Event, e.history.base(&p.params), cues));
        }
        ParseState {
            tokens: Vec::new(),
            instances: Vec::new(),
            candidates,
            recognitions: Vec::new(),
            merges: Vec::new(),
            oov: Vec::new(),
            trace: Trace::default(),
            tried: BTreeSet::new(),
            event_tried: BTreeSet::new(),
            expectations: Vec::new(),
        }
    }

    /// Index of the token being processed.
    pub fn position(&self) -> usize {
        self.tokens.len().saturating_sub(1)
    }

    pub fn candidate(&self, name: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.record.name == name)
    }

    pub fn instance(&self, uid: usize) -> Option<&Instance> {
        self.instances.get(uid)
    }

    pub fn alive(&self) -> impl Iterator<Item = &Instance> {
        self.instances.iter().filter(|i| i.alive)
    }

    pub(crate) fn add_instance(
        &mut self,
        construction: Option<String>,
        sign: FeatureStructure,
        span: Span,
        route: Route,
    ) -> usize {
        let uid = self.instances.len();
        self.instances.push(Instance { uid, construction, sign, span, route, alive: true, remaining: VecDeque::new() });
        uid
    }

    /// Names of activated objects, in activation order.
    pub fn activated(&self) -> Vec<String> {
        let mut out: Vec<(usize, String)> = Vec::new();
        for r in self.trace.of_kind(super::TraceKind::Activate) {
            if let Some(name) = r.payload.get("object").and_then(|v| v.as_str()) {
                out.push((out.len(), name.to_string()));
            }
        }
        out.into_iter().map(|(_, n)| n).collect()
    }
}
