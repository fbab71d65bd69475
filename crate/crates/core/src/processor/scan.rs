use serde_json::json;

use super::state::{Binding, Route};
use super::{ParseState, Processor, Token, TraceKind};
use crate::activation::{lexical_f, ObjectKind};
use crate::fs::{subsumes_at, unify_at_node, FeatureStructure, Node, NodeId, Provenance, StructNode, VectorGate, TOP};
use crate::grammar::{apply_event_traced, SynCue, TargetKind, ARG_ST, SURFACE_PATH, VAL_PATH};
use crate::properties::{verdict, Span, Verdict};

/// `{form: {surface: [word]}}`
pub(crate) fn surface_sign(word: &str) -> FeatureStructure {
    let mut form = StructNode::new(TOP);
    form.features.insert(SURFACE_PATH[1].to_string(), 1);
    let mut root = StructNode::new(TOP);
    root.features.insert(SURFACE_PATH[0].to_string(), 2);
    let nodes = vec![Node::Atom(word.to_string()), Node::List(vec![0]), Node::Struct(form), Node::Struct(root)];
    FeatureStructure::from_parts(nodes, 3).expect("surface sign is acyclic")
}

/// Marks every struct of a freshly scanned sign as observed at `token`,
/// except the argument descriptions it is still waiting for.
fn mark_observed(fs: &FeatureStructure, token: usize) -> FeatureStructure {
    let mut waiting = vec![false; fs.node_count()];
    let mut open = Vec::new();
    if let Some(val) = fs.resolve_path(&VAL_PATH) {
        open.extend(val.items().iter().map(|n| n.id()));
    }
    if let Some(args) = fs.root().get(ARG_ST) {
        open.extend(args.items().iter().map(|n| n.id()));
    }
    for id in open {
        for n in fs.reachable_from(id) {
            waiting[n] = true;
        }
    }
    let mut keep = vec![false; fs.node_count()];
    for n in fs.reachable() {
        keep[n] = !waiting[n];
    }
    fs.map_nodes(|id, node| {
        if let Node::Struct(s) = node {
            if keep[id] {
                s.provenance = Provenance::Observed(token);
            }
        }
    })
}

impl Processor<'_> {
    pub(crate) fn gate(&self) -> VectorGate<'_> {
        VectorGate::Similarity { store: self.vectors, threshold: self.params.sim_threshold }
    }

    fn lemma(&self, surface: &str) -> Option<String> {
        let entry = self.grammar.lexical_entries(surface).first()?;
        self.grammar.construction(entry)?.lemma().map(str::to_string)
    }

    /// Reads one token: absorbs it into an idiom in progress, or instantiates
    /// its lexical entry, then updates lexical cue evidence.
    pub(crate) fn scan(&self, state: &mut ParseState, token: Token) {
        let g = self.grammar;
        let i = token.index;
        let surface = token.surface.to_lowercase();
        state.tokens.push(token.clone());

        let absorbing = state.instances.iter().position(|inst| {
            inst.alive && inst.span.end + 1 == i && inst.remaining.front().is_some_and(|w| *w == surface)
        });
        let status;
        if let Some(k) = absorbing {
            let inst = &mut state.instances[k];
            inst.remaining.pop_front();
            inst.span.end = i;
            status = json!({"status": "absorbed", "into": inst.construction, "instance": inst.uid});
        } else if let Some(name) = g.lexical_entries(&surface).first() {
            let (expanded, _) = g.expanded(name).expect("lexical entries are expanded");
            let sign =
                match unify_at_node(expanded, expanded.root_id(), &surface_sign(&surface), &g.hierarchy, self.gate()) {
                    Ok(u) => u.fs,
                    Err(_) => expanded.clone(),
                };
            let uid =
                state.add_instance(Some(name.clone()), mark_observed(&sign, i), Span::single(i), Route::Compositional);
            status = json!({"status": "lexical", "construction": name, "instance": uid});
        } else if g.knows_surface(&surface) {
            let uid = state.add_instance(
                None,
                mark_observed(&surface_sign(&surface), i),
                Span::single(i),
                Route::Compositional,
            );
            status = json!({"status": "bare", "instance": uid});
        } else if self.vectors.contains(&surface) {
            status = json!({"status": "vector-only"});
        } else {
            state.oov.push(i);
            status = json!({"status": "unknown"});
        }
        let mut payload = json!({"surface": surface});
        if let (Some(p), Some(s)) = (payload.as_object_mut(), status.as_object()) {
            p.extend(s.clone());
        }
        if token.surprisal_multiplier != 1.0 {
            payload["surprisal_multiplier"] = json!(token.surprisal_multiplier);
        }
        state.trace.push(i, TraceKind::Scan, payload);

        self.update_lexical_cues(state, &surface, token.surprisal_multiplier);
        self.refresh(state);
    }

    fn update_lexical_cues(&self, state: &mut ParseState, surface: &str, multiplier: f64) {
        let g = self.grammar;
        let lemma = self.lemma(surface);
        let i = state.position();
        let mut k = 0;
        let raw = |cue: &crate::activation::LexicalCue| {
            let mut f = lexical_f(surface, cue, self.vectors);
            if let Some(l) = &lemma {
                f = f.max(lexical_f(l, cue, self.vectors));
            }
            f
        };
        let mut specs = Vec::new();
        for c in g.constructions.values() {
            specs.push(&c.cues.lexical);
        }
        for f in g.frames.values() {
            specs.push(&f.lex_cues);
        }
        for e in g.events.values() {
            specs.push(&e.trigger.lexical);
        }
        for lexical in specs {
            let cand = &mut state.candidates[k];
            k += 1;
            let mut changed = false;
            for (j, spec) in lexical.iter().enumerate() {
                let r = raw(&spec.cue);
                let hit = match spec.cue {
                    crate::activation::LexicalCue::Form(_) => r >= 1.0,
                    crate::activation::LexicalCue::Vec(_) => r >= self.params.sim_threshold,
                };
                if !hit {
                    continue;
                }
                let f = (r * multiplier).clamp(0.0, 1.0);
                let cm = &mut cand.record.cues[j];
                if !cm.satisfied || f > cm.f {
                    cm.satisfied = true;
                    cm.f = cm.f.max(f);
                    changed = true;
                    state.trace.push(
                        i,
                        TraceKind::Cue,
                        json!({"object": cand.record.name, "cue": cm.cue, "f": cm.f, "fan": cm.fan}),
                    );
                }
            }
            if changed {
                cand.record.recompute(&self.params);
            }
        }
    }

    /// Re-derives participant bindings, syntactic cues and event firing from
    /// the current instances. Returns whether anything changed.
    pub(crate) fn refresh(&self, state: &mut ParseState) -> bool {
        let mut changed = false;
        for (k, c) in self.grammar.constructions.values().enumerate() {
            if state.candidates[k].recognized {
                continue;
            }
            changed |= self.match_participants(state, k, c);
            changed |= self.update_syntactic_cues(state, k, &c.cues.syntactic, None);
        }
        let offset = self.grammar.constructions.len() + self.grammar.frames.len();
        for (j, e) in self.grammar.events.values().enumerate() {
            let k = offset + j;
            if state.candidates[k].fired {
                continue;
            }
            changed |= self.update_syntactic_cues(state, k, &e.trigger.syntactic, Some(e));
            changed |= self.try_fire(state, k, e);
        }
        changed
    }

    fn match_participants(&self, state: &mut ParseState, k: usize, c: &crate::grammar::Construction) -> bool {
        let g = self.grammar;
        let tags = c.participant_tags();
        if tags.is_empty() {
            return false;
        }
        let (sign, table) = g.expanded(&c.name).expect("constructions are expanded");
        let mut changed = false;
        for tag in tags {
            if state.candidates[k].bindings.contains_key(&tag) {
                continue;
            }
            let Some(node) = table.get(tag) else { continue };
            let taken: Vec<Span> = state.candidates[k].bindings.values().map(|b| b.span).collect();
            let free = |s: &Span| !taken.iter().any(|t| t.overlaps(s));
            let binding = if let Some(word) = sign.node(node).word() {
                let word = word.to_lowercase();
                state
                    .tokens
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.surface == word || self.lemma(&t.surface).is_some_and(|l| l == word))
                    .map(|(i, _)| Span::single(i))
                    .find(|s| free(s))
                    .map(|span| Binding { span, sign: None })
            } else {
                let mut best: Option<(f64, Span, &FeatureStructure)> = None;
                for inst in state.alive().filter(|i| !i.is_bare() && i.is_saturated() && free(&i.span)) {
                    let Ok(u) = unify_at_node(sign, node, &inst.sign, &g.hierarchy, self.gate()) else { continue };
                    let sim = u.similarities.iter().map(|(_, s)| *s).fold(1.0, f64::min);
                    let better = match &best {
                        None => true,
                        Some((bs, bspan, _)) => {
                            (sim, std::cmp::Reverse(inst.span.width()), std::cmp::Reverse(inst.span.start))
                                > (*bs, std::cmp::Reverse(bspan.width()), std::cmp::Reverse(bspan.start))
                        }
                    };
                    if better {
                        best = Some((sim, inst.span, &inst.sign));
                    }
                }
                best.map(|(_, span, s)| Binding { span, sign: Some(s.clone()) })
            };
            if let Some(b) = binding {
                let cand = &mut state.candidates[k];
                cand.assignment.set(tag, b.span);
                state.trace.push(
                    state.tokens.len() - 1,
                    TraceKind::Cue,
                    json!({"object": cand.record.name, "participant": format!("#{tag}"), "span": [b.span.start, b.span.end]}),
                );
                cand.bindings.insert(tag, b);
                changed = true;
            }
        }
        changed
    }

    fn update_syntactic_cues(
        &self,
        state: &mut ParseState,
        k: usize,
        syntactic: &[crate::grammar::SynCueSpec],
        event: Option<&crate::grammar::Event>,
    ) -> bool {
        let g = self.grammar;
        let lex_len = state.candidates[k].record.cues.len() - syntactic.len();
        let construction = match state.candidates[k].kind() {
            ObjectKind::Construction => g.construction(state.candidates[k].name()),
            _ => None,
        };
        let mut changed = false;
        for (j, spec) in syntactic.iter().enumerate() {
            if state.candidates[k].record.cues[lex_len + j].satisfied {
                continue;
            }
            let hit = match &spec.cue {
                SynCue::Property { kind, index } => construction
                    .and_then(|c| c.property_index(*kind, *index).map(|p| &c.properties[p]))
                    .is_some_and(|pc| {
                        let a = &state.candidates[k].assignment;
                        verdict(pc, a) == Verdict::Satisfied
                    }),
                SynCue::Feature { path, value } => state.alive().any(|inst| {
                    inst.sign
                        .resolve_path(path.segments())
                        .is_some_and(|n| subsumes_at(value, &inst.sign, n.id(), &g.hierarchy, self.gate()))
                }),
                SynCue::Tag(t) => match event {
                    None => state.candidates[k].assignment.is_matched(*t),
                    Some(e) => self.event_slot_observed(state, e, *t),
                },
            };
            if hit {
                let i = state.position();
                let cand = &mut state.candidates[k];
                let cm = &mut cand.record.cues[lex_len + j];
                cm.satisfied = true;
                cm.f = 1.0;
                state.trace.push(
                    i,
                    TraceKind::Cue,
                    json!({"object": cand.record.name, "cue": cm.cue, "f": 1.0, "fan": cm.fan}),
                );
                cand.record.recompute(&self.params);
                changed = true;
            }
        }
        changed
    }

    /// True when the refinement slot tagged `t` corresponds to observed
    /// content in the latest target instance.
    fn event_slot_observed(&self, state: &ParseState, e: &crate::grammar::Event, t: u32) -> bool {
        let Some(path) = e.tags.get(t).and_then(|id| e.refinement.path_to(id)) else { return false };
        self.targets(state, e).into_iter().any(|(uid, at)| {
            let inst = &state.instances[uid];
            inst.sign.node(at).resolve(path.segments()).is_some_and(|n| n.provenance().is_observed())
        })
    }

    /// Alive instances (latest first) with the node the event applies at.
    fn targets(&self, state: &ParseState, e: &crate::grammar::Event) -> Vec<(usize, NodeId)> {
        let h = &self.grammar.hierarchy;
        let mut out = Vec::new();
        for inst in state.instances.iter().rev().filter(|i| i.alive) {
            match e.target_kind {
                TargetKind::Construction => {
                    if inst.construction.as_deref().is_some_and(|c| h.is_subtype(c, &e.specialize)) {
                        out.push((inst.uid, inst.sign.root_id()));
                    }
                }
                TargetKind::Frame => {
                    for id in inst.sign.reachable() {
                        if inst.sign.node(id).type_tag().is_some_and(|ty| ty != TOP && h.is_subtype(ty, &e.specialize))
                        {
                            out.push((inst.uid, id));
                        }
                    }
                }
            }
        }
        out
    }

    fn try_fire(&self, state: &mut ParseState, k: usize, e: &crate::grammar::Event) -> bool {
        if !state.candidates[k].record.hard_cues_satisfied() {
            return false;
        }
        let i = state.position();
        for (uid, at) in self.targets(state, e) {
            if state.event_tried.contains(&(k, uid)) {
                continue;
            }
            state.event_tried.insert((k, uid));
            let inst = &state.instances[uid];
            let result = match e.target_kind {
                TargetKind::Construction => apply_event_traced(e, &inst.sign, &self.grammar.hierarchy, self.gate()),
                TargetKind::Frame => unify_at_node(&inst.sign, at, &e.refinement, &self.grammar.hierarchy, self.gate()),
            };
            match result {
                Ok(u) => {
                    state.instances[uid].sign = u.fs;
                    let cand = &mut state.candidates[k];
                    cand.fired = true;
                    state.trace.push(
                        i,
                        TraceKind::FireEvent,
                        json!({"event": e.name, "target": e.specialize, "instance": uid, "a": cand.record.a}),
                    );
                    return true;
                }
                Err(err) => {
                    state.trace.push(
                        i,
                        TraceKind::Clash,
                        json!({"event": e.name, "instance": uid, "path": err.path().to_string(), "reason": err.to_string()}),
                    );
                }
            }
        }
        false
    }

    /// Emits ACTIVATE the first time an object counts as active.
    pub(crate) fn note_activations(&self, state: &mut ParseState) {
        let i = state.position();
        let mut frames_seen = std::collections::BTreeSet::new();
        for inst in state.alive() {
            for id in inst.sign.reachable() {
                if let Some(ty) = inst.sign.node(id).type_tag() {
                    frames_seen.insert(ty.to_string());
                }
            }
        }
        for (_, fs) in &state.expectations {
            for id in fs.reachable() {
                if let Some(ty) = fs.node(id).type_tag() {
                    frames_seen.insert(ty.to_string());
                }
            }
        }
        let instantiated: std::collections::BTreeSet<&str> =
            state.instances.iter().filter_map(|inst| inst.construction.as_deref()).collect();
        let mut newly = Vec::new();
        for (k, cand) in state.candidates.iter().enumerate() {
            if cand.activated {
                continue;
            }
            let name = cand.name();
            let active = match cand.kind() {
                ObjectKind::Construction => cand.record.sigma > 0.0 || cand.recognized || instantiated.contains(name),
                ObjectKind::Frame => cand.record.sigma > 0.0 || frames_seen.contains(name),
                ObjectKind::Event => cand.fired,
            };
            if active {
                newly.push(k);
            }
        }
        for k in newly {
            let cand = &mut state.candidates[k];
            cand.activated = true;
            state.trace.push(
                i,
                TraceKind::Activate,
                json!({"object": cand.record.name, "kind": cand.kind().as_str(), "a": cand.record.a, "sigma": cand.record.sigma}),
            );
        }
    }
}
