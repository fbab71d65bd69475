use indexmap::IndexMap;
use serde::Serialize;
use serde_json::{json, Value};

use super::state::Route;
use super::{Merge, ParseState, Processor, Recognition, Trace, TraceKind};
use crate::activation::{semantic_coherence, ObjectKind};
use crate::fs::{FeatureStructure, NodeId, Provenance, VectorRole};
use crate::grammar::{TargetKind, DS_VECTOR_PATH, FRAMES_PATH, SURFACE_PATH};
use crate::properties::Span;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub kind: ObjectKind,
    pub a: f64,
    pub theta: Option<f64>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub uid: usize,
    pub construction: String,
    pub span: Span,
    pub route: Route,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueToken {
    pub index: usize,
    pub surface: String,
    /// `unknown` for out-of-vocabulary words, `unintegrated` otherwise.
    pub reason: &'static str,
}

/// Final result of processing one sentence.
#[derive(Clone, Debug)]
pub struct Interpretation {
    pub tokens: Vec<String>,
    /// `{frames: [...]}` gathered from the surviving instances, then from
    /// expectations that never met their target.
    pub meaning: FeatureStructure,
    pub instances: Vec<InstanceSummary>,
    pub recognitions: Vec<Recognition>,
    pub merges: Vec<Merge>,
    pub scores: IndexMap<String, Scores>,
    pub activated: Vec<String>,
    /// Frames activated by cues or instances, whether or not bound in `meaning`.
    pub activated_frames: Vec<String>,
    pub expectations: Vec<String>,
    pub residue: Vec<ResidueToken>,
    pub trace: Trace,
    /// Signs of the surviving instances, by uid.
    pub signs: IndexMap<usize, FeatureStructure>,
}

impl Interpretation {
    /// Frame structures listed in `meaning`.
    pub fn frames(&self) -> Vec<FeatureStructure> {
        self.meaning
            .resolve_path(&["frames"])
            .map(|l| l.items().iter().map(|n| self.meaning.subgraph(n.id())).collect())
            .unwrap_or_default()
    }

    /// The first frame of type `name` in `meaning`.
    pub fn frame(&self, name: &str) -> Option<FeatureStructure> {
        self.frames().into_iter().find(|f| f.root().type_tag() == Some(name))
    }

    pub fn route_of(&self, construction: &str) -> Option<Route> {
        self.instances.iter().find(|i| i.construction == construction).map(|i| i.route)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tokens": self.tokens,
            "meaning": self.meaning.to_json(),
            "instances": self.instances,
            "recognitions": self.recognitions,
            "merges": self.merges,
            "scores": self.scores,
            "activated": self.activated,
            "activated_frames": self.activated_frames,
            "expectations": self.expectations,
            "residue": self.residue,
            "trace": self.trace,
        })
    }

    /// Short human-readable report.
    pub fn summary(&self) -> String {
        let mut out = format!("sentence: {}\n", self.tokens.join(" "));
        out.push_str("activated:\n");
        for name in &self.activated {
            let s = &self.scores[name];
            let theta = s.theta.map_or("-".to_string(), |t| format!("{t:.4}"));
            out.push_str(&format!(
                "  {:<12} {name:<32} A={:.4} theta={theta} sigma={:.4}\n",
                s.kind.as_str(),
                s.a,
                s.sigma
            ));
        }
        out.push_str("instances:\n");
        for i in &self.instances {
            out.push_str(&format!("  [{}-{}] {} ({})\n", i.span.start, i.span.end, i.construction, i.route.as_str()));
        }
        out.push_str(&format!("meaning: {}\n", self.meaning.to_json()));
        if !self.residue.is_empty() {
            let words: Vec<String> =
                self.residue.iter().map(|r| format!("{}:{} ({})", r.index, r.surface, r.reason)).collect();
            out.push_str(&format!("residue: {}\n", words.join(", ")));
        }
        out
    }
}

fn frame_items(fs: &FeatureStructure) -> Vec<NodeId> {
    fs.resolve_path(&FRAMES_PATH).map(|l| l.items().iter().map(|n| n.id()).collect()).unwrap_or_default()
}

impl Processor<'_> {
    /// (role, filler word) pairs of the frame at `id`, skipping expected fillers.
    fn fillers(&self, fs: &FeatureStructure, id: NodeId) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (role, filler) in fs.node(id).features() {
            if filler.provenance() == Provenance::Expected {
                continue;
            }
            let vector = filler.resolve(&DS_VECTOR_PATH[2..]).and_then(|v| v.vector()).or_else(|| filler.vector());
            if vector.is_some_and(|v| v.role == VectorRole::Prototype) {
                // an open slot still holding the grammar's prototype
                continue;
            }
            let word = vector
                .map(|v| v.key.clone())
                .or_else(|| filler.resolve(&SURFACE_PATH).and_then(|s| s.items().first()?.word().map(str::to_string)));
            if let Some(w) = word {
                out.push((role.to_string(), w));
            }
        }
        out
    }

    /// θ for every frame instance found in `fs`, by frame name (first wins).
    fn coherence(&self, fs: &FeatureStructure, out: &mut IndexMap<String, f64>) -> Option<f64> {
        let mut first = None;
        for id in fs.reachable() {
            let Some(ty) = fs.node(id).type_tag() else { continue };
            let Some(protos) = self.prototypes(ty) else { continue };
            if let Ok(theta) = semantic_coherence(&self.fillers(fs, id), protos, self.vectors) {
                out.entry(ty.to_string()).or_insert(theta);
                first.get_or_insert(theta);
            }
        }
        first
    }

    pub(crate) fn finish(&self, mut state: ParseState) -> Interpretation {
        let g = self.grammar;
        let last = state.position();

        // triggered events that never met a target become free-standing expectations
        let offset = g.constructions.len() + g.frames.len();
        let mut expectations = Vec::new();
        for (j, e) in g.events.values().enumerate() {
            let cand = &state.candidates[offset + j];
            if cand.fired || !cand.record.hard_cues_satisfied() {
                continue;
            }
            let target = match e.target_kind {
                TargetKind::Construction => g.expanded(&e.specialize).map(|(fs, _)| fs.clone()),
                TargetKind::Frame => g.frame(&e.specialize).map(|f| f.structure.clone()),
            };
            let Some(target) = target else { continue };
            match crate::fs::loose_unify_traced(&target, &e.refinement, &g.hierarchy, self.gate()) {
                Ok(u) => {
                    state.candidates[offset + j].fired = true;
                    state.trace.push(last, TraceKind::Expect, json!({"event": e.name, "target": e.specialize}));
                    state.expectations.push((e.name.clone(), u.fs));
                    expectations.push(e.name.clone());
                }
                Err(err) => state.trace.push(
                    last,
                    TraceKind::Clash,
                    json!({"event": e.name, "target": e.specialize, "path": err.path().to_string(), "reason": err.to_string()}),
                ),
            }
        }
        self.note_activations(&mut state);

        let mut alive: Vec<&super::Instance> = state.alive().filter(|i| !i.is_bare()).collect();
        alive.sort_by_key(|i| (i.span.start, i.span.end, i.uid));

        let mut parts: Vec<(&FeatureStructure, Vec<NodeId>)> =
            alive.iter().map(|i| (&i.sign, frame_items(&i.sign))).collect();
        for (name, fs) in &state.expectations {
            let ids = match g.event(name).map(|e| e.target_kind) {
                Some(TargetKind::Frame) => vec![fs.root_id()],
                _ => frame_items(fs),
            };
            parts.push((fs, ids));
        }
        let meaning = FeatureStructure::gather("frames", &parts);

        let mut thetas = IndexMap::new();
        for inst in &alive {
            if let Some(theta) = self.coherence(&inst.sign, &mut thetas) {
                if let Some(c) = &inst.construction {
                    thetas.entry(c.clone()).or_insert(theta);
                }
            }
        }

        let mut covered = vec![false; state.tokens.len()];
        for inst in &alive {
            for i in inst.span.start..=inst.span.end.min(covered.len().saturating_sub(1)) {
                covered[i] = true;
            }
        }
        let residue = state
            .tokens
            .iter()
            .enumerate()
            .filter(|(i, _)| !covered[*i])
            .map(|(i, t)| ResidueToken {
                index: i,
                surface: t.surface.clone(),
                reason: if state.oov.contains(&i) { "unknown" } else { "unintegrated" },
            })
            .collect();

        let activated = state.activated();
        let mut scores = IndexMap::new();
        for name in &activated {
            if let Some(c) = state.candidate(name) {
                scores.insert(
                    name.clone(),
                    Scores { kind: c.kind(), a: c.record.a, theta: thetas.get(name).copied(), sigma: c.record.sigma },
                );
            }
        }
        let activated_frames = activated.iter().filter(|n| g.frame(n).is_some()).cloned().collect();
        let instances = alive
            .iter()
            .map(|i| InstanceSummary {
                uid: i.uid,
                construction: i.construction.clone().unwrap_or_default(),
                span: i.span,
                route: i.route,
            })
            .collect();
        let signs = alive.iter().map(|i| (i.uid, i.sign.clone())).collect();

        Interpretation {
            tokens: state.tokens.iter().map(|t| t.surface.clone()).collect(),
            meaning,
            instances,
            recognitions: state.recognitions.clone(),
            merges: state.merges.clone(),
            scores,
            activated,
            activated_frames,
            expectations,
            residue,
            trace: state.trace,
            signs,
        }
    }
}
