use thiserror::Error;

use super::{FeaturePath, FeatureStructure, Node, NodeId, StructNode, TypeHierarchy, VectorRef, VectorRole, TOP};
use crate::vectors::VectorStore;

/// How vector-valued features are compared during unification.
#[derive(Clone, Copy, Debug)]
pub enum VectorGate<'a> {
    /// Vector references unify only when they name the same entry.
    Strict,
    /// Vector references unify when their cosine reaches `threshold`.
    Similarity { store: &'a VectorStore, threshold: f64 },
    /// Any two vector references unify; used to check structure when no
    /// vectors are loaded.
    Permissive,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnifyError {
    #[error("unification clash at {path}: {left} vs {right}")]
    Clash { path: FeaturePath, left: String, right: String },
    #[error("similarity {score:.6} of ->{left} and ->{right} below threshold {threshold} at {path}")]
    SimilarityBelowThreshold { path: FeaturePath, left: String, right: String, score: f64, threshold: f64 },
}

impl UnifyError {
    pub fn path(&self) -> &FeaturePath {
        match self {
            UnifyError::Clash { path, .. } | UnifyError::SimilarityBelowThreshold { path, .. } => path,
        }
    }

    fn with_prefix(self, prefix: &FeaturePath) -> Self {
        let join = |p: FeaturePath| FeaturePath(prefix.0.iter().cloned().chain(p.0).collect());
        match self {
            UnifyError::Clash { path, left, right } => UnifyError::Clash { path: join(path), left, right },
            UnifyError::SimilarityBelowThreshold { path, left, right, score, threshold } => {
                UnifyError::SimilarityBelowThreshold { path: join(path), left, right, score, threshold }
            }
        }
    }
}

/// An expectation that disagreed with an observation; the observation was kept.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMismatch {
    pub path: FeaturePath,
    pub expected: String,
    pub observed: String,
    pub score: f64,
}

/// Result of a traced unification.
#[derive(Clone, Debug)]
pub struct Unified {
    pub fs: FeatureStructure,
    pub soft_mismatches: Vec<SoftMismatch>,
    /// Every vector comparison made by the gate, with its cosine.
    pub similarities: Vec<(FeaturePath, f64)>,
}

/// Most general unifier of `a` and `b`.
pub fn unify(a: &FeatureStructure, b: &FeatureStructure, h: &TypeHierarchy) -> Result<FeatureStructure, UnifyError> {
    unify_mapped(a, None, b, h, VectorGate::Strict).map(|(u, _, _)| u.fs)
}

/// Unification where vector references match by cosine similarity.
pub fn loose_unify(
    a: &FeatureStructure,
    b: &FeatureStructure,
    h: &TypeHierarchy,
    vs: &VectorStore,
    sim_threshold: f64,
) -> Result<FeatureStructure, UnifyError> {
    loose_unify_traced(a, b, h, VectorGate::Similarity { store: vs, threshold: sim_threshold }).map(|u| u.fs)
}

pub fn loose_unify_traced(
    a: &FeatureStructure,
    b: &FeatureStructure,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
) -> Result<Unified, UnifyError> {
    unify_mapped(a, None, b, h, gate).map(|(u, _, _)| u)
}

/// Unifies `guest` into the node `at` of `host`; the result keeps `host`'s root.
/// The guest is the left operand, so its vectors win ties.
pub fn unify_at_node(
    host: &FeatureStructure,
    at: NodeId,
    guest: &FeatureStructure,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
) -> Result<Unified, UnifyError> {
    let prefix = host.path_to(at).unwrap_or_default();
    let mut ws = Workspace::new(Some(h), gate);
    let host_base = ws.import(host);
    let guest_base = ws.import(guest);
    let mut path = Vec::new();
    ws.unify(guest_base + guest.root_id(), host_base + at, &mut path).map_err(|e| e.with_prefix(&prefix))?;
    let (fs, _) = ws.extract(host_base + host.root_id())?;
    Ok(Unified { fs, soft_mismatches: ws.soft, similarities: ws.similarities })
}

/// Unifies `a` (or its node `a_at`) with `b`, returning id maps from both inputs
/// into the result (`usize::MAX` for nodes that did not survive).
pub(crate) fn unify_mapped(
    a: &FeatureStructure,
    a_at: Option<NodeId>,
    b: &FeatureStructure,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
) -> Result<(Unified, Vec<NodeId>, Vec<NodeId>), UnifyError> {
    let mut ws = Workspace::new(Some(h), gate);
    let a_base = ws.import(a);
    let b_base = ws.import(b);
    let mut path = Vec::new();
    ws.unify(a_base + a_at.unwrap_or(a.root_id()), b_base + b.root_id(), &mut path)?;
    let (fs, map) = ws.extract(a_base + a.root_id())?;
    let a_map = (0..a.node_count()).map(|i| map[ws.find(a_base + i)]).collect();
    let b_map = (0..b.node_count()).map(|i| map[ws.find(b_base + i)]).collect();
    Ok((Unified { fs, soft_mismatches: ws.soft, similarities: ws.similarities }, a_map, b_map))
}

/// Union-find arena used for destructive unification on copies.
pub(crate) struct Workspace<'a> {
    nodes: Vec<Node>,
    parent: Vec<usize>,
    hierarchy: Option<&'a TypeHierarchy>,
    gate: VectorGate<'a>,
    soft: Vec<SoftMismatch>,
    similarities: Vec<(FeaturePath, f64)>,
}

impl<'a> Workspace<'a> {
    pub(crate) fn new(hierarchy: Option<&'a TypeHierarchy>, gate: VectorGate<'a>) -> Self {
        Workspace { nodes: Vec::new(), parent: Vec::new(), hierarchy, gate, soft: Vec::new(), similarities: Vec::new() }
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        let mut ws = Workspace::new(None, VectorGate::Strict);
        ws.parent = (0..nodes.len()).collect();
        ws.nodes = nodes;
        ws
    }

    /// Copies `fs` into the arena and returns the offset of its node 0.
    pub(crate) fn import(&mut self, fs: &FeatureStructure) -> usize {
        let base = self.nodes.len();
        for node in fs.nodes() {
            let shifted = match node {
                Node::Struct(s) => Node::Struct(StructNode {
                    type_tag: s.type_tag.clone(),
                    features: s.features.iter().map(|(k, &v)| (k.clone(), v + base)).collect(),
                    provenance: s.provenance,
                }),
                Node::List(items) => Node::List(items.iter().map(|&i| i + base).collect()),
                other => other.clone(),
            };
            self.parent.push(self.nodes.len());
            self.nodes.push(shifted);
        }
        base
    }

    pub(crate) fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.parent.push(self.parent.len());
        self.nodes.len() - 1
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn meet(&self, a: &str, b: &str) -> Option<String> {
        match self.hierarchy {
            Some(h) => h.meet(a, b),
            None if a == b || b == TOP => Some(a.to_string()),
            None if a == TOP => Some(b.to_string()),
            None => None,
        }
    }

    fn clash(path: &[String], left: &Node, right: &Node) -> UnifyError {
        UnifyError::Clash { path: FeaturePath(path.to_vec()), left: left.describe(), right: right.describe() }
    }

    /// Destructively unifies nodes `left` and `right`; `left` wins ties.
    pub(crate) fn unify(&mut self, left: usize, right: usize, path: &mut Vec<String>) -> Result<(), UnifyError> {
        let x = self.find(left);
        let y = self.find(right);
        if x == y {
            return Ok(());
        }
        match (&self.nodes[x], &self.nodes[y]) {
            (Node::Unspecified, _) => {
                self.parent[x] = y;
                Ok(())
            }
            (_, Node::Unspecified) => {
                self.parent[y] = x;
                Ok(())
            }
            (Node::Atom(p), Node::Atom(q)) | (Node::Text(p), Node::Text(q)) if p == q => {
                self.parent[y] = x;
                Ok(())
            }
            (Node::Number(p), Node::Number(q)) if p == q => {
                self.parent[y] = x;
                Ok(())
            }
            (Node::Vector(p), Node::Vector(q)) => {
                let merged = self.merge_vectors(p.clone(), q.clone(), path)?;
                self.nodes[x] = Node::Vector(merged);
                self.parent[y] = x;
                Ok(())
            }
            (Node::List(p), Node::List(q)) => {
                if p.len() != q.len() {
                    return Err(Self::clash(path, &self.nodes[x], &self.nodes[y]));
                }
                let pairs: Vec<(usize, usize)> = p.iter().copied().zip(q.iter().copied()).collect();
                self.parent[y] = x;
                for (i, (cx, cy)) in pairs.into_iter().enumerate() {
                    path.push(i.to_string());
                    self.unify(cx, cy, path)?;
                    path.pop();
                }
                Ok(())
            }
            (Node::Struct(p), Node::Struct(q)) => {
                let Some(type_tag) = self.meet(&p.type_tag, &q.type_tag) else {
                    return Err(Self::clash(path, &self.nodes[x], &self.nodes[y]));
                };
                let provenance = p.provenance.merge(q.provenance);
                let mut features = p.features.clone();
                let mut shared = Vec::new();
                for (name, &cy) in &q.features {
                    match features.get(name) {
                        Some(&cx) => shared.push((name.clone(), cx, cy)),
                        None => {
                            features.insert(name.clone(), cy);
                        }
                    }
                }
                self.nodes[x] = Node::Struct(StructNode { type_tag, features, provenance });
                self.parent[y] = x;
                for (name, cx, cy) in shared {
                    path.push(name);
                    self.unify(cx, cy, path)?;
                    path.pop();
                }
                Ok(())
            }
            (l, r) => Err(Self::clash(path, l, r)),
        }
    }

    fn merge_vectors(&mut self, left: VectorRef, right: VectorRef, path: &[String]) -> Result<VectorRef, UnifyError> {
        let winner = |l: VectorRef, r: VectorRef| if r.role > l.role { r } else { l };
        if left.key == right.key {
            return Ok(winner(left, right));
        }
        match self.gate {
            VectorGate::Strict => Err(UnifyError::Clash {
                path: FeaturePath(path.to_vec()),
                left: format!("->{}", left.key),
                right: format!("->{}", right.key),
            }),
            VectorGate::Permissive => Ok(winner(left, right)),
            VectorGate::Similarity { store, threshold } => {
                let Some(score) = store.similarity(&left.key, &right.key) else {
                    return Err(UnifyError::Clash {
                        path: FeaturePath(path.to_vec()),
                        left: format!("->{}", left.key),
                        right: format!("->{} (no vector for one side)", right.key),
                    });
                };
                self.similarities.push((FeaturePath(path.to_vec()), score));
                if score >= threshold {
                    return Ok(winner(left, right));
                }
                let roles = (left.role, right.role);
                match roles {
                    (VectorRole::Expected, VectorRole::Lexical) | (VectorRole::Lexical, VectorRole::Expected) => {
                        let (expected, observed) =
                            if left.role == VectorRole::Expected { (left, right) } else { (right, left) };
                        self.soft.push(SoftMismatch {
                            path: FeaturePath(path.to_vec()),
                            expected: expected.key,
                            observed: observed.key.clone(),
                            score,
                        });
                        Ok(observed)
                    }
                    _ => Err(UnifyError::SimilarityBelowThreshold {
                        path: FeaturePath(path.to_vec()),
                        left: left.key,
                        right: right.key,
                        score,
                        threshold,
                    }),
                }
            }
        }
    }

    /// Copies the structure reachable from `root` into a compact arena.
    /// Returns the structure and a map from representative ids to new ids.
    pub(crate) fn extract(&mut self, root: usize) -> Result<(FeatureStructure, Vec<NodeId>), UnifyError> {
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut map = vec![usize::MAX; n];
        let mut out = Vec::new();
        let mut path = Vec::new();
        let new_root = self.extract_node(root, &mut state, &mut map, &mut out, &mut path)?;
        // every ws id resolves to its representative's new id
        let full: Vec<NodeId> = (0..n).map(|i| map[self.find(i)]).collect();
        Ok((FeatureStructure::from_compact(out, new_root), full))
    }

    fn extract_node(
        &mut self,
        id: usize,
        state: &mut [u8],
        map: &mut [usize],
        out: &mut Vec<Node>,
        path: &mut Vec<String>,
    ) -> Result<usize, UnifyError> {
        let r = self.find(id);
        match state[r] {
            2 => return Ok(map[r]),
            1 => {
                return Err(UnifyError::Clash {
                    path: FeaturePath(path.clone()),
                    left: "cyclic structure".to_string(),
                    right: self.nodes[r].describe(),
                })
            }
            _ => {}
        }
        state[r] = 1;
        let new = out.len();
        out.push(Node::Unspecified);
        map[r] = new;
        let content = match self.nodes[r].clone() {
            Node::Struct(s) => {
                let mut features = std::collections::BTreeMap::new();
                for (name, child) in s.features {
                    path.push(name.clone());
                    let c = self.extract_node(child, state, map, out, path)?;
                    path.pop();
                    features.insert(name, c);
                }
                Node::Struct(StructNode { type_tag: s.type_tag, features, provenance: s.provenance })
            }
            Node::List(items) => {
                let mut new_items = Vec::with_capacity(items.len());
                for (i, child) in items.into_iter().enumerate() {
                    path.push(i.to_string());
                    new_items.push(self.extract_node(child, state, map, out, path)?);
                    path.pop();
                }
                Node::List(new_items)
            }
            other => other,
        };
        out[new] = content;
        state[r] = 2;
        Ok(new)
    }
}
