//! Relational constraints over participant spans: linearity, adjacency,
//! cooccurrence, exclusion and requirement.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyKind {
    #[serde(rename = "lin")]
    Linearity,
    #[serde(rename = "adj")]
    Adjacency,
    #[serde(rename = "cooc")]
    Cooccurrence,
    #[serde(rename = "excl")]
    Exclusion,
    #[serde(rename = "req")]
    Requirement,
    /// Parsed and stored; never applicable, as no dependency graph is built.
    #[serde(rename = "dep")]
    Dependency,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 6] = [
        PropertyKind::Linearity,
        PropertyKind::Adjacency,
        PropertyKind::Cooccurrence,
        PropertyKind::Exclusion,
        PropertyKind::Requirement,
        PropertyKind::Dependency,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PropertyKind::Linearity => "lin",
            PropertyKind::Adjacency => "adj",
            PropertyKind::Cooccurrence => "cooc",
            PropertyKind::Exclusion => "excl",
            PropertyKind::Requirement => "req",
            PropertyKind::Dependency => "dep",
        }
    }

    pub fn from_key(key: &str) -> Option<PropertyKind> {
        PropertyKind::ALL.into_iter().find(|k| k.key() == key)
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Hard cues and constraints must hold; soft ones only add evidence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    #[default]
    Hard,
    Soft,
}

impl Weight {
    pub fn as_str(self) -> &'static str {
        match self {
            Weight::Hard => "hard",
            Weight::Soft => "soft",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyConstraint {
    pub kind: PropertyKind,
    /// Participant tags; for requirement, (antecedent, consequent).
    pub participants: [u32; 2],
    pub weight: Weight,
}

impl PropertyConstraint {
    pub fn new(kind: PropertyKind, a: u32, b: u32, weight: Weight) -> Self {
        PropertyConstraint { kind, participants: [a, b], weight }
    }
}

impl fmt::Display for PropertyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.participants;
        write!(f, "{}(#{a},#{b})/{}", self.kind, self.weight.as_str())
    }
}

/// Inclusive token span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "span start {start} after end {end}");
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span { start: i, end: i }
    }

    /// Number of tokens covered.
    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropertyError {
    #[error("span {span} of #{tag} lies outside a sentence of {len} tokens")]
    OutOfBounds { tag: u32, span: Span, len: usize },
    #[error("spans of #{a} and #{b} overlap")]
    Overlap { a: u32, b: u32 },
}

/// Participant tags mapped to token spans; absent tags are unmatched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpanAssignment {
    spans: BTreeMap<u32, Span>,
}

impl SpanAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, tag: u32, span: Span) -> Self {
        self.spans.insert(tag, span);
        self
    }

    pub fn set(&mut self, tag: u32, span: Span) {
        self.spans.insert(tag, span);
    }

    pub fn get(&self, tag: u32) -> Option<Span> {
        self.spans.get(&tag).copied()
    }

    pub fn is_matched(&self, tag: u32) -> bool {
        self.spans.contains_key(&tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Span)> + '_ {
        self.spans.iter().map(|(&t, &s)| (t, s))
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Checks sentence bounds and pairwise disjointness.
    pub fn validate(&self, sentence_len: usize) -> Result<(), PropertyError> {
        for (tag, span) in self.iter() {
            if span.end >= sentence_len {
                return Err(PropertyError::OutOfBounds { tag, span, len: sentence_len });
            }
        }
        self.check_disjoint()
    }

    fn check_disjoint(&self) -> Result<(), PropertyError> {
        let mut sorted: Vec<(u32, Span)> = self.iter().collect();
        sorted.sort_by_key(|&(t, s)| (s.start, t));
        for w in sorted.windows(2) {
            if w[0].1.overlaps(&w[1].1) {
                return Err(PropertyError::Overlap { a: w[0].0, b: w[1].0 });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inapplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inapplicable => "inapplicable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyEvaluation {
    pub verdicts: Vec<Verdict>,
    pub hard_violations: usize,
    pub soft_violations: usize,
}

/// Verdict of a single constraint.
pub fn verdict(c: &PropertyConstraint, assignment: &SpanAssignment) -> Verdict {
    let [a, b] = c.participants;
    let (sa, sb) = (assignment.get(a), assignment.get(b));
    let holds = match c.kind {
        PropertyKind::Dependency => return Verdict::Inapplicable,
        PropertyKind::Linearity | PropertyKind::Adjacency => {
            let (Some(sa), Some(sb)) = (sa, sb) else {
                return Verdict::Inapplicable;
            };
            if c.kind == PropertyKind::Linearity {
                sa.end < sb.start
            } else {
                sa.end + 1 == sb.start
            }
        }
        PropertyKind::Cooccurrence => sa.is_some() == sb.is_some(),
        PropertyKind::Exclusion => !(sa.is_some() && sb.is_some()),
        PropertyKind::Requirement => sa.is_none() || sb.is_some(),
    };
    if holds {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    }
}

pub fn evaluate(
    constraints: &[PropertyConstraint],
    assignment: &SpanAssignment,
) -> Result<PropertyEvaluation, PropertyError> {
    assignment.check_disjoint()?;
    let verdicts: Vec<Verdict> = constraints.iter().map(|c| verdict(c, assignment)).collect();
    let count = |w: Weight| {
        constraints.iter().zip(&verdicts).filter(|(c, v)| c.weight == w && **v == Verdict::Violated).count()
    };
    Ok(PropertyEvaluation { hard_violations: count(Weight::Hard), soft_violations: count(Weight::Soft), verdicts })
}

/// 0 on any hard violation, else `(1 - soft_penalty)` per soft violation.
pub fn relaxation_score(ev: &PropertyEvaluation, soft_penalty: f64) -> f64 {
    if ev.hard_violations > 0 {
        return 0.0;
    }
    (1.0 - soft_penalty).powi(ev.soft_violations as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PropertyKind::*;

    // tags: 1 subj, 2 verb, 3 obl, 4 obj
    fn ditransitive() -> Vec<PropertyConstraint> {
        vec![
            PropertyConstraint::new(Linearity, 1, 2, Weight::Hard),
            PropertyConstraint::new(Linearity, 2, 3, Weight::Hard),
            PropertyConstraint::new(Linearity, 3, 4, Weight::Hard),
            PropertyConstraint::new(Adjacency, 2, 3, Weight::Soft),
            PropertyConstraint::new(Adjacency, 3, 4, Weight::Soft),
        ]
    }

    #[test]
    fn ditransitive_order_satisfies_everything() {
        let a = SpanAssignment::new()
            .with(1, Span::single(0))
            .with(2, Span::single(1))
            .with(3, Span::single(2))
            .with(4, Span::new(3, 4));
        let ev = evaluate(&ditransitive(), &a).unwrap();
        assert!(ev.verdicts.iter().all(|v| *v == Verdict::Satisfied));
        assert_eq!(relaxation_score(&ev, 0.25), 1.0);
    }

    #[test]
    fn swapped_objects_violate_linearity() {
        let a = SpanAssignment::new()
            .with(1, Span::single(0))
            .with(2, Span::single(1))
            .with(4, Span::single(2))
            .with(3, Span::new(3, 4));
        let ev = evaluate(&ditransitive(), &a).unwrap();
        assert_eq!(ev.verdicts[2], Verdict::Violated);
        assert_eq!(ev.hard_violations, 1);
        assert_eq!(relaxation_score(&ev, 0.25), 0.0);
    }

    #[test]
    fn unmatched_participant_makes_order_inapplicable() {
        let a = SpanAssignment::new().with(1, Span::single(0));
        let c = PropertyConstraint::new(Linearity, 1, 2, Weight::Hard);
        assert_eq!(verdict(&c, &a), Verdict::Inapplicable);
        assert_eq!(verdict(&PropertyConstraint::new(Dependency, 1, 1, Weight::Hard), &a), Verdict::Inapplicable);
    }

    #[test]
    fn overlap_is_rejected() {
        let a = SpanAssignment::new().with(1, Span::new(0, 2)).with(2, Span::single(2));
        assert_eq!(evaluate(&ditransitive(), &a).unwrap_err(), PropertyError::Overlap { a: 1, b: 2 });
        assert!(matches!(a.validate(2), Err(PropertyError::OutOfBounds { tag: 1, .. })));
    }

    #[test]
    fn relaxation_examples() {
        let ev = |h, s| PropertyEvaluation { verdicts: vec![], hard_violations: h, soft_violations: s };
        assert_eq!(relaxation_score(&ev(0, 0), 0.25), 1.0);
        assert_eq!(relaxation_score(&ev(1, 0), 0.25), 0.0);
        assert!((relaxation_score(&ev(0, 2), 0.25) - 0.75 * 0.75).abs() < 1e-15);
    }
}
