//! Typed feature structures with reentrancy.
//!
//! A [`FeatureStructure`] is an immutable rooted DAG stored in an arena. Two
//! paths share a value exactly when they reach the same [`NodeId`]. All
//! operations (unification, subsumption, editing) return fresh structures.

mod avm;
mod hierarchy;
mod subsume;
mod unify;

use std::collections::BTreeMap;
use std::fmt;

pub use avm::{parse_tag, AvmError, ParsedAvm, TagTable};
pub use hierarchy::{HierarchyError, TypeHierarchy, TOP};
pub(crate) use subsume::subsumes_at;
pub use subsume::{subsumes, subsumes_loose};
pub use unify::{loose_unify, loose_unify_traced, unify, unify_at_node, SoftMismatch, Unified, UnifyError, VectorGate};

pub(crate) use unify::{unify_mapped, Workspace};

/// Index of a node inside one structure's arena.
pub type NodeId = usize;

/// Provenance of a struct node: where its content came from during processing.
///
/// Grammar content is `Neutral`; event refinements mark their slots
/// `Expected`; signs instantiated from input tokens are `Observed`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    #[default]
    Neutral,
    Expected,
    Observed(usize),
}

impl Provenance {
    /// Observed beats expected beats neutral; two observations keep the earlier token.
    pub fn merge(self, other: Provenance) -> Provenance {
        use Provenance::*;
        match (self, other) {
            (Observed(a), Observed(b)) => Observed(a.min(b)),
            (Observed(a), _) | (_, Observed(a)) => Observed(a),
            (Expected, _) | (_, Expected) => Expected,
            _ => Neutral,
        }
    }

    pub fn is_observed(self) -> bool {
        matches!(self, Provenance::Observed(_))
    }
}

/// Role of a vector reference, deciding which side survives a loose merge.
///
/// Ordered by specificity: a grammar prototype slot is the weakest, an event
/// expectation refines it, and a lexical (observed) vector wins over both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VectorRole {
    Prototype,
    Expected,
    #[default]
    Lexical,
}

impl VectorRole {
    pub fn as_str(self) -> &'static str {
        match self {
            VectorRole::Prototype => "prototype",
            VectorRole::Expected => "expected",
            VectorRole::Lexical => "lexical",
        }
    }
}

/// Pointer into a vector store (the `ds-vector` feature).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VectorRef {
    pub key: String,
    pub role: VectorRole,
}

impl VectorRef {
    pub fn lexical(key: impl Into<String>) -> Self {
        VectorRef { key: key.into(), role: VectorRole::Lexical }
    }

    pub fn prototype(key: impl Into<String>) -> Self {
        VectorRef { key: key.into(), role: VectorRole::Prototype }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructNode {
    pub type_tag: String,
    pub features: BTreeMap<String, NodeId>,
    pub provenance: Provenance,
}

impl StructNode {
    pub fn new(type_tag: impl Into<String>) -> Self {
        StructNode { type_tag: type_tag.into(), features: BTreeMap::new(), provenance: Provenance::Neutral }
    }
}

/// Content of one arena node.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Unspecified,
    Atom(String),
    Text(String),
    Number(f64),
    List(Vec<NodeId>),
    Vector(VectorRef),
    Struct(StructNode),
}

impl Node {
    pub(crate) fn describe(&self) -> String {
        match self {
            Node::Unspecified => "unspecified".to_string(),
            Node::Atom(a) => a.clone(),
            Node::Text(t) => format!("{t:?}"),
            Node::Number(n) => n.to_string(),
            Node::List(items) => format!("<list of {}>", items.len()),
            Node::Vector(v) => format!("->{}", v.key),
            Node::Struct(s) => format!("[{}]", s.type_tag),
        }
    }
}

/// A sequence of feature names (list positions are written as decimal indices).
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeaturePath(pub Vec<String>);

impl FeaturePath {
    pub fn new<I, S>(segments: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FeaturePath(segments.into_iter().map(Into::into).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    /// Splits a dotted path such as `form.syn.cat`.
    pub fn parse(dotted: &str) -> Self {
        if dotted.is_empty() {
            return FeaturePath::default();
        }
        FeaturePath::new(dotted.split('.'))
    }

    pub fn ends_with(&self, suffix: &[&str]) -> bool {
        self.0.len() >= suffix.len() && self.0[self.0.len() - suffix.len()..].iter().zip(suffix).all(|(a, b)| a == b)
    }
}

impl fmt::Display for FeaturePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("<root>")
        } else {
            f.write_str(&self.0.join("."))
        }
    }
}

impl serde::Serialize for FeaturePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl From<&[&str]> for FeaturePath {
    fn from(segments: &[&str]) -> Self {
        FeaturePath::new(segments.iter().copied())
    }
}

/// Immutable feature structure. Equality is isomorphism: node ids are ignored,
/// the sharing pattern is not.
#[derive(Clone, Debug)]
pub struct FeatureStructure {
    nodes: Vec<Node>,
    root: NodeId,
}

impl FeatureStructure {
    /// A structure consisting of a single unspecified node.
    pub fn unspecified() -> Self {
        FeatureStructure { nodes: vec![Node::Unspecified], root: 0 }
    }

    pub fn atom(value: impl Into<String>) -> Self {
        FeatureStructure { nodes: vec![Node::Atom(value.into())], root: 0 }
    }

    /// Builds a structure from raw arena parts, checking bounds and acyclicity.
    /// Unreachable nodes are dropped.
    pub fn from_parts(nodes: Vec<Node>, root: NodeId) -> Result<Self, UnifyError> {
        let mut ws = Workspace::from_nodes(nodes);
        let (fs, _) = ws.extract(root)?;
        Ok(fs)
    }

    pub(crate) fn from_compact(nodes: Vec<Node>, root: NodeId) -> Self {
        FeatureStructure { nodes, root }
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef { fs: self, id: self.root }
    }

    pub fn root_id(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> NodeRef<'_> {
        assert!(id < self.nodes.len(), "node id {id} out of range");
        NodeRef { fs: self, id }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Rewrites node contents in place; ids and structure are unchanged.
    pub(crate) fn map_nodes(&self, mut f: impl FnMut(NodeId, &mut Node)) -> FeatureStructure {
        let mut copy = self.clone();
        for (id, node) in copy.nodes.iter_mut().enumerate() {
            f(id, node);
        }
        copy
    }

    /// Node ids reachable from `from` (inclusive).
    pub fn reachable_from(&self, from: NodeId) -> Vec<NodeId> {
        FeatureStructure { nodes: Vec::new(), root: from }.reachable_in(&self.nodes)
    }

    fn reachable_in(&self, nodes: &[Node]) -> Vec<NodeId> {
        let mut seen = vec![false; nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                continue;
            }
            order.push(id);
            match &nodes[id] {
                Node::Struct(s) => stack.extend(s.features.values().rev()),
                Node::List(items) => stack.extend(items.iter().rev()),
                _ => {}
            }
        }
        order
    }

    /// Follows `path` from the root; `None` when a segment is missing.
    pub fn resolve_path<S: AsRef<str>>(&self, path: &[S]) -> Option<NodeRef<'_>> {
        self.root().resolve(path)
    }

    /// Copies the substructure rooted at `id` into a fresh structure.
    pub fn subgraph(&self, id: NodeId) -> FeatureStructure {
        let mut ws = Workspace::from_nodes(self.nodes.clone());
        ws.extract(id).expect("subgraph of an acyclic structure is acyclic").0
    }

    /// Some path from the root to `target`, preferring the first in traversal order.
    pub fn path_to(&self, target: NodeId) -> Option<FeaturePath> {
        fn walk(fs: &FeatureStructure, at: NodeId, target: NodeId, path: &mut Vec<String>) -> bool {
            if at == target {
                return true;
            }
            match &fs.nodes[at] {
                Node::Struct(s) => {
                    for (name, &child) in &s.features {
                        path.push(name.clone());
                        if walk(fs, child, target, path) {
                            return true;
                        }
                        path.pop();
                    }
                    false
                }
                Node::List(items) => {
                    for (i, &child) in items.iter().enumerate() {
                        path.push(i.to_string());
                        if walk(fs, child, target, path) {
                            return true;
                        }
                        path.pop();
                    }
                    false
                }
                _ => false,
            }
        }
        let mut path = Vec::new();
        walk(self, self.root, target, &mut path).then_some(FeaturePath(path))
    }

    /// Node ids in depth-first pre-order from the root, each visited once.
    pub fn reachable(&self) -> Vec<NodeId> {
        self.reachable_in(&self.nodes)
    }

    /// Returns a copy whose node `id` is replaced by `content`. Children
    /// referenced from `content` must be ids of this structure.
    pub fn with_node(&self, id: NodeId, content: Node) -> Result<FeatureStructure, UnifyError> {
        let mut nodes = self.nodes.clone();
        nodes[id] = content;
        FeatureStructure::from_parts(nodes, self.root)
    }

    /// Replaces the list found at `path` by its tail (drops the first element).
    pub fn pop_list_front<S: AsRef<str>>(&self, path: &[S]) -> Option<FeatureStructure> {
        let node = self.resolve_path(path)?;
        let items = node.list()?;
        let (_, rest) = items.split_first()?;
        let rest = rest.to_vec();
        self.with_node(node.id(), Node::List(rest)).ok()
    }

    /// Sets the provenance of a struct node; other node kinds are left untouched.
    pub fn with_provenance(&self, id: NodeId, provenance: Provenance) -> FeatureStructure {
        let mut copy = self.clone();
        if let Node::Struct(s) = &mut copy.nodes[id] {
            s.provenance = provenance;
        }
        copy
    }

    /// A fresh struct `{feature: [..]}` listing the given nodes, each copied
    /// together with the sharing it has in its own structure.
    pub fn gather(feature: &str, parts: &[(&FeatureStructure, Vec<NodeId>)]) -> FeatureStructure {
        let mut ws = Workspace::from_nodes(Vec::new());
        let mut items = Vec::new();
        for (fs, ids) in parts {
            let base = ws.import(fs);
            items.extend(ids.iter().map(|&id| base + id));
        }
        let list = ws.push(Node::List(items));
        let mut root = StructNode::new(TOP);
        root.features.insert(feature.to_string(), list);
        let root = ws.push(Node::Struct(root));
        ws.extract(root).expect("parts are acyclic").0
    }

    /// Depth of the structure (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn go(fs: &FeatureStructure, id: NodeId) -> usize {
            match &fs.nodes[id] {
                Node::Struct(s) => s.features.values().map(|&c| 1 + go(fs, c)).max().unwrap_or(0),
                Node::List(items) => items.iter().map(|&c| 1 + go(fs, c)).max().unwrap_or(0),
                _ => 0,
            }
        }
        go(self, self.root)
    }

    /// Number of nodes reached through more than one edge.
    pub fn shared_node_count(&self) -> usize {
        let mut indegree = vec![0usize; self.nodes.len()];
        for id in self.reachable() {
            match &self.nodes[id] {
                Node::Struct(s) => s.features.values().for_each(|&c| indegree[c] += 1),
                Node::List(items) => items.iter().for_each(|&c| indegree[c] += 1),
                _ => {}
            }
        }
        indegree.iter().filter(|&&d| d > 1).count()
    }

    /// Structural equality up to node renaming.
    pub fn isomorphic(&self, other: &FeatureStructure) -> bool {
        let mut fwd = vec![usize::MAX; self.nodes.len()];
        let mut back = vec![usize::MAX; other.nodes.len()];
        iso(self, self.root, other, other.root, &mut fwd, &mut back)
    }
}

fn iso(
    a: &FeatureStructure,
    x: NodeId,
    b: &FeatureStructure,
    y: NodeId,
    fwd: &mut [usize],
    back: &mut [usize],
) -> bool {
    if fwd[x] != usize::MAX || back[y] != usize::MAX {
        return fwd[x] == y && back[y] == x;
    }
    fwd[x] = y;
    back[y] = x;
    match (&a.nodes[x], &b.nodes[y]) {
        (Node::Unspecified, Node::Unspecified) => true,
        (Node::Atom(p), Node::Atom(q)) | (Node::Text(p), Node::Text(q)) => p == q,
        (Node::Number(p), Node::Number(q)) => p.to_bits() == q.to_bits(),
        (Node::Vector(p), Node::Vector(q)) => p == q,
        (Node::List(p), Node::List(q)) => {
            p.len() == q.len() && p.iter().zip(q).all(|(&c, &d)| iso(a, c, b, d, fwd, back))
        }
        (Node::Struct(p), Node::Struct(q)) => {
            p.type_tag == q.type_tag
                && p.provenance == q.provenance
                && p.features.len() == q.features.len()
                && p.features.iter().zip(&q.features).all(|((fp, &c), (fq, &d))| fp == fq && iso(a, c, b, d, fwd, back))
        }
        _ => false,
    }
}

impl PartialEq for FeatureStructure {
    fn eq(&self, other: &Self) -> bool {
        self.isomorphic(other)
    }
}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json().to_string())
    }
}

/// Borrowed view of one node.
#[derive(Clone, Copy, Debug)]
pub struct NodeRef<'a> {
    fs: &'a FeatureStructure,
    id: NodeId,
}

impl<'a> NodeRef<'a> {
    /// Node identity; equal ids from one structure mean structure sharing.
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn content(&self) -> &'a Node {
        &self.fs.nodes[self.id]
    }

    pub fn is_unspecified(&self) -> bool {
        matches!(self.content(), Node::Unspecified)
    }

    pub fn get(&self, feature: &str) -> Option<NodeRef<'a>> {
        match self.content() {
            Node::Struct(s) => s.features.get(feature).map(|&id| NodeRef { fs: self.fs, id }),
            Node::List(items) => {
                feature.parse::<usize>().ok().and_then(|i| items.get(i)).map(|&id| NodeRef { fs: self.fs, id })
            }
            _ => None,
        }
    }

    pub fn resolve<S: AsRef<str>>(&self, path: &[S]) -> Option<NodeRef<'a>> {
        path.iter().try_fold(*self, |node, seg| node.get(seg.as_ref()))
    }

    pub fn type_tag(&self) -> Option<&'a str> {
        match self.content() {
            Node::Struct(s) => Some(&s.type_tag),
            _ => None,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.content() {
            Node::Struct(s) => s.provenance,
            _ => Provenance::Neutral,
        }
    }

    pub fn atom(&self) -> Option<&'a str> {
        match self.content() {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Atom or text content.
    pub fn word(&self) -> Option<&'a str> {
        match self.content() {
            Node::Atom(a) | Node::Text(a) => Some(a),
            _ => None,
        }
    }

    pub fn number(&self) -> Option<f64> {
        match self.content() {
            Node::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn vector(&self) -> Option<&'a VectorRef> {
        match self.content() {
            Node::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&'a [NodeId]> {
        match self.content() {
            Node::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn items(&self) -> Vec<NodeRef<'a>> {
        self.list().map(|items| items.iter().map(|&id| NodeRef { fs: self.fs, id }).collect()).unwrap_or_default()
    }

    pub fn features(&self) -> Vec<(&'a str, NodeRef<'a>)> {
        match self.content() {
            Node::Struct(s) => s.features.iter().map(|(k, &id)| (k.as_str(), NodeRef { fs: self.fs, id })).collect(),
            _ => Vec::new(),
        }
    }

    pub fn structure(&self) -> &'a FeatureStructure {
        self.fs
    }
}
