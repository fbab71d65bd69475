use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// The most general sort.
pub const TOP: &str = "*top*";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("type `{child}` names undeclared supertype `{parent}`")]
    UnknownSupertype { child: String, parent: String },
    #[error("type hierarchy has a cycle through `{0}`")]
    Cycle(String),
    #[error("`{TOP}` cannot have supertypes")]
    TopHasParents,
}

/// Partial order over type tags with multiple inheritance.
///
/// Types that were never declared behave as immediate subtypes of [`TOP`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, Vec<String>>,
    // every declared type mapped to its ancestors, itself included
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

impl TypeHierarchy {
    pub fn new<I, S, P>(declarations: I) -> Result<Self, HierarchyError>
    where
        I: IntoIterator<Item = (S, P)>,
        S: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        let mut parents: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (child, sups) in declarations {
            let child = child.into();
            let entry = parents.entry(child).or_default();
            for s in sups {
                let s = s.into();
                if !entry.contains(&s) {
                    entry.push(s);
                }
            }
        }
        if parents.get(TOP).is_some_and(|p| !p.is_empty()) {
            return Err(HierarchyError::TopHasParents);
        }
        parents.remove(TOP);
        for (child, sups) in &parents {
            for s in sups {
                if s != TOP && !parents.contains_key(s) {
                    return Err(HierarchyError::UnknownSupertype { child: child.clone(), parent: s.clone() });
                }
            }
        }

        let mut ancestors = BTreeMap::new();
        for name in parents.keys() {
            let mut on_path = BTreeSet::new();
            collect_ancestors(name, &parents, &mut ancestors, &mut on_path)?;
        }
        Ok(TypeHierarchy { parents, ancestors })
    }

    /// Adds `child ⊑ parent`, declaring either side if needed.
    pub fn with_edge(&self, child: &str, parent: &str) -> Result<Self, HierarchyError> {
        let mut decl = self.parents.clone();
        decl.entry(parent.to_string()).or_default();
        decl.entry(child.to_string()).or_default().push(parent.to_string());
        TypeHierarchy::new(decl)
    }

    pub fn is_declared(&self, ty: &str) -> bool {
        ty == TOP || self.parents.contains_key(ty)
    }

    pub fn declarations(&self) -> &BTreeMap<String, Vec<String>> {
        &self.parents
    }

    /// `specific ⊑ general`.
    pub fn is_subtype(&self, specific: &str, general: &str) -> bool {
        if general == TOP || specific == general {
            return true;
        }
        self.ancestors.get(specific).is_some_and(|a| a.contains(general))
    }

    /// Maximal common subtypes of `a` and `b`. Empty means incompatible.
    pub fn glb(&self, a: &str, b: &str) -> Vec<String> {
        if self.is_subtype(a, b) {
            return vec![a.to_string()];
        }
        if self.is_subtype(b, a) {
            return vec![b.to_string()];
        }
        let common: Vec<&String> =
            self.ancestors.iter().filter(|(_, anc)| anc.contains(a) && anc.contains(b)).map(|(t, _)| t).collect();
        common
            .iter()
            .filter(|t| !common.iter().any(|u| u != *t && self.is_subtype(u, t)))
            .map(|t| (*t).clone())
            .collect()
    }

    /// The unique greatest lower bound, if there is exactly one.
    pub fn meet(&self, a: &str, b: &str) -> Option<String> {
        let mut g = self.glb(a, b);
        (g.len() == 1).then(|| g.pop().unwrap())
    }
}

fn collect_ancestors(
    name: &str,
    parents: &BTreeMap<String, Vec<String>>,
    memo: &mut BTreeMap<String, BTreeSet<String>>,
    on_path: &mut BTreeSet<String>,
) -> Result<BTreeSet<String>, HierarchyError> {
    if let Some(done) = memo.get(name) {
        return Ok(done.clone());
    }
    if !on_path.insert(name.to_string()) {
        return Err(HierarchyError::Cycle(name.to_string()));
    }
    let mut set = BTreeSet::from([name.to_string(), TOP.to_string()]);
    for p in parents.get(name).into_iter().flatten() {
        if p == TOP {
            continue;
        }
        set.extend(collect_ancestors(p, parents, memo, on_path)?);
    }
    on_path.remove(name);
    memo.insert(name.to_string(), set.clone());
    Ok(set)
}
