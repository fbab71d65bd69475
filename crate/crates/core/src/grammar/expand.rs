use super::{Construction, Grammar, GrammarError};
use crate::fs::{unify, unify_mapped, FeaturePath, UnifyError, VectorGate};

/// Ancestor constructions of `c`, most generic first (depth-first post-order).
/// Supertypes that are only hierarchy types contribute nothing.
pub(crate) fn ancestors<'g>(c: &Construction, g: &'g Grammar) -> Vec<&'g Construction> {
    fn visit<'g>(name: &str, g: &'g Grammar, out: &mut Vec<&'g Construction>, stack: &mut Vec<String>) {
        let Some(cx) = g.construction(name) else { return };
        if out.iter().any(|o| o.name == name) || stack.iter().any(|s| s == name) {
            return;
        }
        stack.push(name.to_string());
        for s in &cx.supertypes {
            visit(s, g, out, stack);
        }
        stack.pop();
        out.push(cx);
    }
    let mut out = Vec::new();
    let mut stack = vec![c.name.clone()];
    for s in &c.supertypes {
        visit(s, g, &mut out, &mut stack);
    }
    out.retain(|a| a.name != c.name);
    out
}

/// Folds every ancestor's sign into `c`'s, most generic first and `c` last.
pub fn expand_inheritance(c: &Construction, g: &Grammar) -> Result<Construction, GrammarError> {
    let chain = ancestors(c, g);
    let Some((first, rest)) = chain.split_first() else {
        return Ok(c.clone());
    };
    let mut acc = first.sign.clone();
    let steps = rest.iter().map(|a| (a.name.as_str(), &a.sign)).chain(std::iter::once((c.name.as_str(), &c.sign)));
    let mut done: Vec<&Construction> = vec![first];
    for (name, sign) in steps {
        match unify_mapped(&acc, None, sign, &g.hierarchy, VectorGate::Strict) {
            Ok((u, _, b_map)) => {
                acc = u.fs;
                if name == c.name {
                    let mut out = c.clone();
                    out.sign = acc;
                    out.tags = c.tags.remap(&b_map);
                    return Ok(out);
                }
                done.extend(rest.iter().find(|a| a.name == name));
            }
            Err(err) => return Err(blame(c, &done, name, sign, g, err)),
        }
    }
    unreachable!("the fold always ends with the construction itself")
}

/// Names the earlier ancestor that clashes with `failing` on its own.
fn blame(
    c: &Construction,
    done: &[&Construction],
    failing: &str,
    sign: &crate::fs::FeatureStructure,
    g: &Grammar,
    fold_err: UnifyError,
) -> GrammarError {
    for earlier in done {
        if let Err(e) = unify(&earlier.sign, sign, &g.hierarchy) {
            return clash(c, &earlier.name, failing, e.path().clone());
        }
    }
    let last = done.last().map_or(failing, |d| d.name.as_str());
    clash(c, last, failing, fold_err.path().clone())
}

fn clash(c: &Construction, first: &str, second: &str, path: FeaturePath) -> GrammarError {
    GrammarError::InheritanceClash {
        construction: c.name.clone(),
        first: first.to_string(),
        second: second.to_string(),
        path,
    }
}
