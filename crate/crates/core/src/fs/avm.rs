//! JSON attribute-value notation.
//!
//! Objects are typed structs (`$type`, default the top sort) whose other keys
//! are features. A string `"#n"` is a reentrancy tag; any other string is an
//! atom. `null` is unspecified, arrays are lists, `{"vec": w}` is a vector
//! reference (optional `"role"`), `{"$text": s}` is free text. An object may
//! carry `"$tag": "#n"` to name itself; non-struct values are tagged with
//! `{"$tag": "#n", "$value": v}`. A tag's content is given at most once; every
//! other occurrence is the bare `"#n"`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use super::{FeatureStructure, Node, NodeId, Provenance, StructNode, VectorRef, VectorRole, Workspace, TOP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AvmError {
    #[error("{path}: malformed tag `{value}`")]
    BadTag { path: String, value: String },
    #[error("tag #{tag} is given content more than once")]
    DuplicateTag { tag: u32 },
    #[error("{path}: unknown key `{key}`")]
    UnknownKey { path: String, key: String },
    #[error("{path}: {reason}")]
    BadValue { path: String, reason: String },
    #[error("cyclic structure at {path}")]
    Cyclic { path: String },
}

/// Tag numbers of a parsed structure mapped to the nodes they name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagTable(BTreeMap<u32, NodeId>);

impl TagTable {
    pub fn get(&self, tag: u32) -> Option<NodeId> {
        self.0.get(&tag).copied()
    }

    pub fn contains(&self, tag: u32) -> bool {
        self.0.contains_key(&tag)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, NodeId)> + '_ {
        self.0.iter().map(|(&t, &n)| (t, n))
    }

    pub fn insert(&mut self, tag: u32, node: NodeId) {
        self.0.insert(tag, node);
    }

    /// Node to tag, keeping the smallest tag when several name one node.
    pub fn labels(&self) -> BTreeMap<NodeId, u32> {
        let mut out = BTreeMap::new();
        for (&t, &n) in self.0.iter().rev() {
            out.insert(n, t);
        }
        out
    }

    /// Rewrites node ids through `map`, dropping tags whose node vanished.
    pub(crate) fn remap(&self, map: &[NodeId]) -> TagTable {
        TagTable(
            self.0.iter().filter_map(|(&t, &n)| map.get(n).filter(|&&m| m != usize::MAX).map(|&m| (t, m))).collect(),
        )
    }
}

/// A structure together with the tag numbers used in its source text.
#[derive(Clone, Debug)]
pub struct ParsedAvm {
    pub fs: FeatureStructure,
    pub tags: TagTable,
}

/// Parses `"#12"` into 12.
pub fn parse_tag(s: &str) -> Option<u32> {
    let digits = s.strip_prefix('#')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Parser {
    nodes: Vec<Node>,
    tags: BTreeMap<u32, NodeId>,
    defined: BTreeSet<u32>,
}

fn path_str(path: &[String]) -> String {
    if path.is_empty() {
        "<root>".to_string()
    } else {
        path.join(".")
    }
}

impl Parser {
    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn tag_node(&mut self, tag: u32) -> NodeId {
        if let Some(&id) = self.tags.get(&tag) {
            return id;
        }
        let id = self.push(Node::Unspecified);
        self.tags.insert(tag, id);
        id
    }

    fn bad(path: &[String], reason: impl Into<String>) -> AvmError {
        AvmError::BadValue { path: path_str(path), reason: reason.into() }
    }

    fn parse(&mut self, v: &Value, path: &mut Vec<String>) -> Result<NodeId, AvmError> {
        if let Value::String(s) = v {
            if s.starts_with('#') {
                let tag = parse_tag(s).ok_or_else(|| AvmError::BadTag { path: path_str(path), value: s.clone() })?;
                return Ok(self.tag_node(tag));
            }
        }
        if let Some(tag_value) = v.as_object().and_then(|o| o.get("$tag")) {
            let tag = tag_value
                .as_str()
                .and_then(parse_tag)
                .ok_or_else(|| AvmError::BadTag { path: path_str(path), value: tag_value.to_string() })?;
            if !self.defined.insert(tag) {
                return Err(AvmError::DuplicateTag { tag });
            }
            let id = self.tag_node(tag);
            let content = self.content(v, path)?;
            self.nodes[id] = content;
            return Ok(id);
        }
        let content = self.content(v, path)?;
        Ok(self.push(content))
    }

    fn content(&mut self, v: &Value, path: &mut Vec<String>) -> Result<Node, AvmError> {
        Ok(match v {
            Value::Null => Node::Unspecified,
            Value::Bool(b) => Node::Atom(b.to_string()),
            Value::Number(n) => Node::Number(n.as_f64().ok_or_else(|| Self::bad(path, "number out of range"))?),
            Value::String(s) if s.starts_with('#') => {
                return Err(Self::bad(path, "a tag cannot be the value of another tag"))
            }
            Value::String(s) => Node::Atom(s.clone()),
            Value::Array(items) => {
                let mut ids = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    path.push(i.to_string());
                    ids.push(self.parse(item, path)?);
                    path.pop();
                }
                Node::List(ids)
            }
            Value::Object(obj) => return self.object(obj, path),
        })
    }

    fn object(&mut self, obj: &Map<String, Value>, path: &mut Vec<String>) -> Result<Node, AvmError> {
        let keys = || obj.keys().filter(|k| k.as_str() != "$tag");
        if let Some(inner) = obj.get("$value") {
            if let Some(k) = keys().find(|k| k.as_str() != "$value") {
                return Err(AvmError::UnknownKey { path: path_str(path), key: k.clone() });
            }
            if inner.is_object() && inner.get("$tag").is_some() {
                return Err(Self::bad(path, "`$value` cannot carry its own tag"));
            }
            return self.content(inner, path);
        }
        if let Some(Value::String(key)) = obj.get("vec") {
            if keys().all(|k| k == "vec" || k == "role") {
                let role = match obj.get("role") {
                    None => VectorRole::Lexical,
                    Some(Value::String(r)) => match r.as_str() {
                        "prototype" => VectorRole::Prototype,
                        "expected" => VectorRole::Expected,
                        "lexical" => VectorRole::Lexical,
                        other => return Err(Self::bad(path, format!("unknown vector role `{other}`"))),
                    },
                    Some(other) => return Err(Self::bad(path, format!("vector role must be a string, got {other}"))),
                };
                return Ok(Node::Vector(VectorRef { key: key.to_lowercase(), role }));
            }
        }
        if let Some(text) = obj.get("$text") {
            if let Some(k) = keys().find(|k| k.as_str() != "$text") {
                return Err(AvmError::UnknownKey { path: path_str(path), key: k.clone() });
            }
            let text = text.as_str().ok_or_else(|| Self::bad(path, "`$text` must be a string"))?;
            return Ok(Node::Text(text.to_string()));
        }

        let mut node = StructNode::new(TOP);
        for (key, value) in obj {
            match key.as_str() {
                "$tag" => {}
                "$type" => {
                    node.type_tag =
                        value.as_str().ok_or_else(|| Self::bad(path, "`$type` must be a string"))?.to_string();
                }
                "$provenance" => {
                    node.provenance = parse_provenance(value).ok_or_else(|| Self::bad(path, "bad `$provenance`"))?
                }
                k if k.starts_with('$') => return Err(AvmError::UnknownKey { path: path_str(path), key: key.clone() }),
                _ => {
                    path.push(key.clone());
                    let child = self.parse(value, path)?;
                    path.pop();
                    node.features.insert(key.clone(), child);
                }
            }
        }
        Ok(Node::Struct(node))
    }
}

fn parse_provenance(v: &Value) -> Option<Provenance> {
    match v {
        Value::String(s) if s == "expected" => Some(Provenance::Expected),
        Value::String(s) if s == "neutral" => Some(Provenance::Neutral),
        Value::Object(o) if o.len() == 1 => o.get("observed")?.as_u64().map(|t| Provenance::Observed(t as usize)),
        _ => None,
    }
}

fn provenance_json(p: Provenance) -> Option<Value> {
    match p {
        Provenance::Neutral => None,
        Provenance::Expected => Some(Value::from("expected")),
        Provenance::Observed(t) => Some(serde_json::json!({ "observed": t })),
    }
}

impl FeatureStructure {
    pub fn from_json(v: &Value) -> Result<FeatureStructure, AvmError> {
        Self::parse_avm(v).map(|p| p.fs)
    }

    /// Parses and keeps the source tag numbers.
    pub fn parse_avm(v: &Value) -> Result<ParsedAvm, AvmError> {
        let mut parser = Parser { nodes: Vec::new(), tags: BTreeMap::new(), defined: BTreeSet::new() };
        let mut path = Vec::new();
        let root = parser.parse(v, &mut path)?;
        let mut ws = Workspace::from_nodes(parser.nodes);
        let (fs, map) = ws.extract(root).map_err(|e| AvmError::Cyclic { path: e.path().to_string() })?;
        let tags = TagTable(parser.tags).remap(&map);
        Ok(ParsedAvm { fs, tags })
    }

    pub fn to_json(&self) -> Value {
        self.to_json_labeled(&BTreeMap::new())
    }

    /// Serializes with the given node labels as tag numbers. Shared nodes
    /// without a label get fresh numbers above the largest label.
    pub fn to_json_labeled(&self, labels: &BTreeMap<NodeId, u32>) -> Value {
        let order = self.reachable();
        let mut indegree = vec![0usize; self.node_count()];
        for &id in &order {
            match &self.nodes()[id] {
                Node::Struct(s) => s.features.values().for_each(|&c| indegree[c] += 1),
                Node::List(items) => items.iter().for_each(|&c| indegree[c] += 1),
                _ => {}
            }
        }
        let mut tags: BTreeMap<NodeId, u32> = BTreeMap::new();
        let mut next = labels.values().max().copied().unwrap_or(0) + 1;
        for &id in &order {
            if let Some(&l) = labels.get(&id) {
                tags.insert(id, l);
            } else if indegree[id] > 1 {
                tags.insert(id, next);
                next += 1;
            }
        }
        let mut emitted = BTreeSet::new();
        self.emit(self.root_id(), &tags, &mut emitted)
    }

    fn emit(&self, id: NodeId, tags: &BTreeMap<NodeId, u32>, emitted: &mut BTreeSet<NodeId>) -> Value {
        let tag = tags.get(&id).copied();
        if let Some(t) = tag {
            if !emitted.insert(id) {
                return Value::from(format!("#{t}"));
            }
        }
        let mut obj = Map::new();
        if let Some(t) = tag {
            obj.insert("$tag".into(), Value::from(format!("#{t}")));
        }
        let plain = match &self.nodes()[id] {
            Node::Unspecified => match tag {
                Some(t) => return Value::from(format!("#{t}")),
                None => Value::Null,
            },
            Node::Atom(a) => Value::from(a.clone()),
            Node::Number(n) => serde_json::Number::from_f64(*n).map(Value::Number).unwrap_or(Value::Null),
            Node::List(items) => Value::Array(items.iter().map(|&c| self.emit(c, tags, emitted)).collect()),
            Node::Text(t) => {
                obj.insert("$text".into(), Value::from(t.clone()));
                return Value::Object(obj);
            }
            Node::Vector(v) => {
                obj.insert("vec".into(), Value::from(v.key.clone()));
                if v.role != VectorRole::Lexical {
                    obj.insert("role".into(), Value::from(v.role.as_str()));
                }
                return Value::Object(obj);
            }
            Node::Struct(s) => {
                if s.type_tag != TOP {
                    obj.insert("$type".into(), Value::from(s.type_tag.clone()));
                }
                if let Some(p) = provenance_json(s.provenance) {
                    obj.insert("$provenance".into(), p);
                }
                for (name, &child) in &s.features {
                    obj.insert(name.clone(), self.emit(child, tags, emitted));
                }
                return Value::Object(obj);
            }
        };
        if tag.is_some() {
            obj.insert("$value".into(), plain);
            Value::Object(obj)
        } else {
            plain
        }
    }
}

impl Serialize for FeatureStructure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureStructure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(deserializer)?;
        FeatureStructure::from_json(&v).map_err(serde::de::Error::custom)
    }
}
