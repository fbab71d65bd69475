use serde_json::json;

use super::state::{Merge, Route};
use super::{ParseState, Processor, TraceKind};
use crate::fs::{unify_at_node, FeaturePath, FeatureStructure, Node, NodeId, Provenance, Unified, UnifyError};
use crate::grammar::VAL_PATH;
use crate::properties::Span;

/// Upper bound on expectations set aside for a single merge.
const MAX_OVERRIDES: usize = 8;

/// The node an expectation put at the clash site: the clashing struct itself
/// when it is expected, or a clashing leaf whose parent struct is expected.
fn expected_at(fs: &FeatureStructure, path: &FeaturePath) -> Option<NodeId> {
    let segs = path.segments();
    let (last, parent_path) = segs.split_last()?;
    let parent = fs.resolve_path(parent_path)?;
    let node = parent.get(last)?;
    let expected =
        |n: crate::fs::NodeRef<'_>| matches!(n.content(), Node::Struct(s) if s.provenance == Provenance::Expected);
    match node.content() {
        Node::Struct(_) => expected(node).then_some(node.id()),
        _ => expected(parent).then_some(node.id()),
    }
}

impl Processor<'_> {
    /// Performs at most one merge of a saturated neighbour into the first
    /// open valence slot of a head. Returns whether a merge happened.
    pub(crate) fn compose(&self, state: &mut ParseState) -> bool {
        let heads: Vec<usize> = state.alive().filter(|h| !h.is_bare() && !h.is_saturated()).map(|h| h.uid).collect();
        for head in heads {
            let span = state.instances[head].span;
            let left = span.start.checked_sub(1).and_then(|end| self.neighbour(state, |s| s.end == end));
            let right = self.neighbour(state, |s| s.start == span.end + 1);
            for dep in [left, right].into_iter().flatten() {
                if state.tried.insert((head, dep)) && self.merge(state, head, dep) {
                    return true;
                }
            }
        }
        false
    }

    /// Most recent alive, saturated, non-bare instance whose span satisfies `at`.
    fn neighbour(&self, state: &ParseState, at: impl Fn(&Span) -> bool) -> Option<usize> {
        state.alive().filter(|d| !d.is_bare() && d.is_saturated() && at(&d.span)).map(|d| d.uid).max()
    }

    fn merge(&self, state: &mut ParseState, head: usize, dep: usize) -> bool {
        let g = self.grammar;
        let i = state.position();
        let guest = state.instances[dep].sign.clone();
        let mut host = state.instances[head].sign.clone();
        let slot_path = FeaturePath::new(VAL_PATH.iter().copied().chain(["0"]));
        let mut overridden = Vec::new();
        let outcome: Result<Unified, UnifyError> = loop {
            let Some(slot) = host.resolve_path(slot_path.segments()).map(|n| n.id()) else {
                return false;
            };
            match unify_at_node(&host, slot, &guest, &g.hierarchy, self.gate()) {
                Ok(u) => break Ok(u),
                Err(err) => {
                    let reset = (overridden.len() < MAX_OVERRIDES)
                        .then(|| expected_at(&host, err.path()))
                        .flatten()
                        .and_then(|id| host.with_node(id, Node::Unspecified).ok().map(|fs| (id, fs)));
                    match reset {
                        Some((id, fs)) => {
                            let at = host.path_to(id).map(|p| p.to_string()).unwrap_or_default();
                            state.trace.push(
                                i,
                                TraceKind::Expect,
                                json!({"status": "set-aside", "head": head, "dependent": dep, "path": at, "reason": err.to_string()}),
                            );
                            overridden.push(at);
                            host = fs;
                        }
                        None => break Err(err),
                    }
                }
            }
        };
        let (h, d) = (&state.instances[head], &state.instances[dep]);
        match outcome {
            Err(err) => {
                let kind = match err {
                    UnifyError::Clash { .. } => "clash",
                    UnifyError::SimilarityBelowThreshold { .. } => "similarity-below-threshold",
                };
                let mut payload = json!({
                    "head": head,
                    "head_construction": h.construction,
                    "dependent": dep,
                    "dependent_construction": d.construction,
                    "kind": kind,
                    "path": err.path().to_string(),
                    "reason": err.to_string(),
                });
                if let UnifyError::SimilarityBelowThreshold { score, threshold, .. } = &err {
                    payload["score"] = json!(score);
                    payload["threshold"] = json!(threshold);
                }
                state.trace.push(i, TraceKind::Clash, payload);
                false
            }
            Ok(u) => {
                let sign = u.fs.pop_list_front(&VAL_PATH).unwrap_or(u.fs);
                let span = Span::new(h.span.start.min(d.span.start), h.span.end.max(d.span.end));
                let construction = h.construction.clone();
                let soft: Vec<_> = u
                    .soft_mismatches
                    .iter()
                    .map(|m| json!({"path": m.path.to_string(), "expected": m.expected, "observed": m.observed, "score": m.score}))
                    .collect();
                let sims: Vec<_> =
                    u.similarities.iter().map(|(p, s)| json!({"path": p.to_string(), "score": s})).collect();
                state.instances[head].alive = false;
                state.instances[dep].alive = false;
                let result = state.add_instance(construction.clone(), sign, span, Route::Compositional);
                state.merges.push(Merge {
                    token: i,
                    head,
                    dependent: dep,
                    result,
                    host: host.clone(),
                    slot: slot_path.clone(),
                    guest,
                });
                state.trace.push(
                    i,
                    TraceKind::Compose,
                    json!({
                        "head": head,
                        "construction": construction,
                        "dependent": dep,
                        "result": result,
                        "slot": slot_path.to_string(),
                        "span": [span.start, span.end],
                        "similarities": sims,
                        "soft_mismatches": soft,
                        "expectations_set_aside": overridden,
                    }),
                );
                true
            }
        }
    }
}
