use std::collections::VecDeque;

use serde_json::json;

use super::state::Route;
use super::{ParseState, Processor, Recognition, TraceKind};
use crate::fs::unify_mapped;
use crate::grammar::{Construction, SURFACE_FORM_PATH};
use crate::properties::Span;

impl Processor<'_> {
    /// Recognizes every construction whose hard cues are all satisfied and
    /// whose activation reaches the threshold, best first.
    pub(crate) fn try_direct_route(&self, state: &mut ParseState) -> Vec<Recognition> {
        let g = self.grammar;
        let mut ready: Vec<(usize, &Construction)> = Vec::new();
        for (k, c) in g.constructions.values().enumerate() {
            let cand = &state.candidates[k];
            if cand.recognized
                || cand.record.cues.is_empty()
                || c.participant_tags().is_empty()
                || cand.bindings.is_empty()
            {
                continue;
            }
            if cand.record.hard_cues_satisfied() && cand.record.a >= self.params.recognition_threshold {
                ready.push((k, c));
            }
        }
        ready.sort_by(|(x, _), (y, _)| {
            let (a, b) = (&state.candidates[*x].record, &state.candidates[*y].record);
            b.a.total_cmp(&a.a).then(b.satisfied_count().cmp(&a.satisfied_count())).then(x.cmp(y))
        });

        let mut out = Vec::new();
        let mut taken: Vec<Span> = Vec::new();
        for (k, c) in ready {
            let spans: Vec<Span> = state.candidates[k].bindings.values().map(|b| b.span).collect();
            let span = Span::new(
                spans.iter().map(|s| s.start).min().expect("bound"),
                spans.iter().map(|s| s.end).max().expect("bound"),
            );
            if taken.iter().any(|t| t.overlaps(&span)) {
                continue;
            }
            taken.push(span);
            out.push(self.recognize(state, k, c, span));
        }
        out
    }

    fn recognize(&self, state: &mut ParseState, k: usize, c: &Construction, span: Span) -> Recognition {
        let g = self.grammar;
        let i = state.position();
        let (expanded, tags) = g.expanded(&c.name).expect("constructions are expanded");
        let mut sign = expanded.clone();
        let mut remaining = VecDeque::new();
        if c.opaque_meaning {
            // the stored sign is kept as is; only the rest of the fixed form is awaited
            if let Some(words) = expanded.resolve_path(&SURFACE_FORM_PATH) {
                let items = words.items();
                let last = state.candidates[k]
                    .bindings
                    .keys()
                    .filter_map(|&t| tags.get(t))
                    .filter_map(|id| items.iter().position(|n| n.id() == id))
                    .max();
                if let Some(last) = last {
                    remaining = items[last + 1..].iter().filter_map(|n| n.word().map(str::to_lowercase)).collect();
                }
            }
        } else {
            let mut table = tags.clone();
            let bindings: Vec<(u32, Option<crate::fs::FeatureStructure>)> =
                state.candidates[k].bindings.iter().map(|(t, b)| (*t, b.sign.clone())).collect();
            for (tag, part) in bindings {
                let (Some(part), Some(at)) = (part, table.get(tag)) else { continue };
                match unify_mapped(&sign, Some(at), &part, &g.hierarchy, self.gate()) {
                    Ok((u, map, _)) => {
                        sign = u.fs;
                        table = table.remap(&map);
                    }
                    Err(err) => state.trace.push(
                        i,
                        TraceKind::Clash,
                        json!({"object": c.name, "participant": format!("#{tag}"), "path": err.path().to_string(), "reason": err.to_string()}),
                    ),
                }
            }
        }

        for inst in state.instances.iter_mut().filter(|x| x.alive && x.span.overlaps(&span)) {
            inst.alive = false;
        }
        let uid = state.add_instance(Some(c.name.clone()), sign, span, Route::Direct);
        state.instances[uid].remaining = remaining;

        let cand = &mut state.candidates[k];
        cand.recognized = true;
        let rec = Recognition {
            construction: c.name.clone(),
            token: i,
            span,
            instance: uid,
            a: cand.record.a,
            cues: cand.record.cues.clone(),
        };
        state.trace.push(
            i,
            TraceKind::Direct,
            json!({
                "object": c.name,
                "instance": uid,
                "span": [span.start, span.end],
                "a": rec.a,
                "base": cand.record.base,
                "threshold": self.params.recognition_threshold,
                "opaque": c.opaque_meaning,
                "cues": rec.cues,
            }),
        );
        state.recognitions.push(rec.clone());
        rec
    }
}
