use super::{FeatureStructure, Node, NodeId, TypeHierarchy, VectorGate};
use crate::vectors::VectorStore;

/// `general ⊑ specific`: every path, value and sharing in `general` is present in `specific`.
pub fn subsumes(general: &FeatureStructure, specific: &FeatureStructure, h: &TypeHierarchy) -> bool {
    check(general, specific, h, VectorGate::Strict)
}

/// Subsumption where vector references match by cosine similarity.
pub fn subsumes_loose(
    general: &FeatureStructure,
    specific: &FeatureStructure,
    h: &TypeHierarchy,
    vs: &VectorStore,
    sim_threshold: f64,
) -> bool {
    check(general, specific, h, VectorGate::Similarity { store: vs, threshold: sim_threshold })
}

pub(crate) fn subsumes_at(
    general: &FeatureStructure,
    specific: &FeatureStructure,
    at: NodeId,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
) -> bool {
    let mut map = vec![usize::MAX; general.node_count()];
    walk(general, general.root_id(), specific, at, h, gate, &mut map)
}

fn check(general: &FeatureStructure, specific: &FeatureStructure, h: &TypeHierarchy, gate: VectorGate<'_>) -> bool {
    subsumes_at(general, specific, specific.root_id(), h, gate)
}

fn walk(
    g: &FeatureStructure,
    x: NodeId,
    s: &FeatureStructure,
    y: NodeId,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
    map: &mut [NodeId],
) -> bool {
    if map[x] != usize::MAX {
        // shared in the general structure, so it must be shared in the specific one
        return map[x] == y;
    }
    map[x] = y;
    match (&g.nodes()[x], &s.nodes()[y]) {
        (Node::Unspecified, _) => true,
        (Node::Atom(p), Node::Atom(q)) | (Node::Text(p), Node::Text(q)) => p == q,
        (Node::Number(p), Node::Number(q)) => p == q,
        (Node::Vector(p), Node::Vector(q)) => {
            p.key == q.key
                || match gate {
                    VectorGate::Strict => false,
                    VectorGate::Permissive => true,
                    VectorGate::Similarity { store, threshold } => {
                        store.similarity(&p.key, &q.key).is_some_and(|c| c >= threshold)
                    }
                }
        }
        (Node::List(p), Node::List(q)) => {
            p.len() == q.len() && p.iter().zip(q).all(|(&c, &d)| walk(g, c, s, d, h, gate, map))
        }
        (Node::Struct(p), Node::Struct(q)) => {
            h.is_subtype(&q.type_tag, &p.type_tag)
                && p.features.iter().all(|(name, &c)| match q.features.get(name) {
                    Some(&d) => walk(g, c, s, d, h, gate, map),
                    None => false,
                })
        }
        _ => false,
    }
}
