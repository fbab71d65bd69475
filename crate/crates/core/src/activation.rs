//! Activation arithmetic: base activation, fan-attenuated associative
//! strength, the distributional factor of lexical cues, coherence and salience.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::properties::Weight;
use crate::vectors::{thematic_fit, Prototype, VectorStore};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActivationError {
    #[error("{0}")]
    Domain(String),
    #[error("no role has both a filler vector and a prototype")]
    NoScorableRoles,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationParams {
    /// Maximal associative strength.
    pub mas: f64,
    /// Weight of cues declared without a weight class.
    pub default_cue_weight: f64,
    pub hard_cue_weight: f64,
    pub soft_cue_weight: f64,
    pub recognition_threshold: f64,
    pub base_decay: f64,
    pub soft_penalty: f64,
    pub sim_threshold: f64,
}

impl Default for ActivationParams {
    fn default() -> Self {
        ActivationParams {
            mas: 2.0,
            default_cue_weight: 1.0,
            hard_cue_weight: 1.0,
            soft_cue_weight: 0.4,
            recognition_threshold: 1.5,
            base_decay: 0.5,
            soft_penalty: 0.25,
            sim_threshold: 0.6,
        }
    }
}

impl ActivationParams {
    pub fn validate(&self) -> Result<(), ActivationError> {
        let bad = |m: &str| Err(ActivationError::InvalidParams(m.to_string()));
        let all = [
            self.mas,
            self.default_cue_weight,
            self.hard_cue_weight,
            self.soft_cue_weight,
            self.recognition_threshold,
            self.base_decay,
            self.soft_penalty,
            self.sim_threshold,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.mas <= 0.0 {
            return bad("mas must be positive");
        }
        if self.default_cue_weight < 0.0 || self.soft_cue_weight < 0.0 || self.base_decay < 0.0 {
            return bad("cue weights and decay must be non-negative");
        }
        if self.hard_cue_weight < self.soft_cue_weight {
            return bad("hard_cue_weight must be at least soft_cue_weight");
        }
        if !(self.soft_penalty > 0.0 && self.soft_penalty <= 1.0) {
            return bad("soft_penalty must lie in (0, 1]");
        }
        if !(-1.0..=1.0).contains(&self.sim_threshold) {
            return bad("sim_threshold must lie in [-1, 1]");
        }
        Ok(())
    }

    /// W for a cue; `None` is a cue declared without a weight.
    pub fn cue_weight(&self, class: Option<Weight>) -> f64 {
        match class {
            None => self.default_cue_weight,
            Some(Weight::Hard) => self.hard_cue_weight,
            Some(Weight::Soft) => self.soft_cue_weight,
        }
    }
}

/// `MAS − ln(fan)`.
pub fn associative_strength(params: &ActivationParams, fan: usize) -> Result<f64, ActivationError> {
    if fan < 1 {
        return Err(ActivationError::Domain(format!("fan must be at least 1, got {fan}")));
    }
    Ok(params.mas - (fan as f64).ln())
}

/// `ln(1 + count) − d·ln(time)`. Counts are taken as reals so that smoothed
/// frequencies can be used.
pub fn base_activation(
    access_count: f64,
    time_since_last_access: f64,
    params: &ActivationParams,
) -> Result<f64, ActivationError> {
    if !(access_count >= 0.0 && access_count.is_finite()) {
        return Err(ActivationError::Domain(format!("access count must be non-negative, got {access_count}")));
    }
    if time_since_last_access.is_nan() || time_since_last_access <= 0.0 {
        return Err(ActivationError::Domain(format!(
            "time since last access must be positive, got {time_since_last_access}"
        )));
    }
    Ok((1.0 + access_count).ln() - params.base_decay * time_since_last_access.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CueKind {
    Lexical,
    Syntactic,
}

/// A lexical cue: an exact surface form or a vector to compare against.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexicalCue {
    Form(String),
    Vec(String),
}

impl LexicalCue {
    pub fn describe(&self) -> String {
        match self {
            LexicalCue::Form(f) => format!("form:{f}"),
            LexicalCue::Vec(v) => format!("vec:{v}"),
        }
    }
}

/// Distributional factor of a lexical cue for one token, in [0, 1].
/// Out-of-vocabulary words give 0.
pub fn lexical_f(token_form: &str, cue: &LexicalCue, vs: &VectorStore) -> f64 {
    match cue {
        LexicalCue::Form(form) => {
            if token_form.to_lowercase() == form.to_lowercase() {
                1.0
            } else {
                0.0
            }
        }
        LexicalCue::Vec(word) => vs.similarity(token_form, word).map_or(0.0, |c| c.max(0.0)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CueMatch {
    pub cue: String,
    pub kind: CueKind,
    /// `None` when the grammar left the weight unspecified (treated as hard).
    pub weight: Option<Weight>,
    pub f: f64,
    pub fan: usize,
    pub satisfied: bool,
}

impl CueMatch {
    pub fn is_hard(&self) -> bool {
        self.weight != Some(Weight::Soft)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Construction,
    Frame,
    Event,
}

impl ObjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectKind::Construction => "construction",
            ObjectKind::Frame => "frame",
            ObjectKind::Event => "event",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationRecord {
    pub name: String,
    pub kind: ObjectKind,
    pub base: f64,
    pub cues: Vec<CueMatch>,
    pub a: f64,
    pub theta: Option<f64>,
    pub sigma: f64,
}

impl ActivationRecord {
    pub fn new(name: impl Into<String>, kind: ObjectKind, base: f64, cues: Vec<CueMatch>) -> Self {
        ActivationRecord { name: name.into(), kind, base, cues, a: base, theta: None, sigma: 0.0 }
    }

    /// Recomputes `a` and `sigma` from the cue matches.
    pub fn recompute(&mut self, params: &ActivationParams) {
        self.a = total_activation(self, params);
        self.sigma = salience(self, params);
    }

    pub fn hard_cues_satisfied(&self) -> bool {
        self.cues.iter().filter(|c| c.is_hard()).all(|c| c.satisfied)
    }

    pub fn satisfied_count(&self) -> usize {
        self.cues.iter().filter(|c| c.satisfied).count()
    }
}

/// `A = B + Σ W·F·(MAS − ln fan)` over satisfied cues, summed in cue order.
pub fn total_activation(record: &ActivationRecord, params: &ActivationParams) -> f64 {
    let mut a = record.base;
    for c in record.cues.iter().filter(|c| c.satisfied) {
        a += params.cue_weight(c.weight) * c.f * (params.mas - (c.fan.max(1) as f64).ln());
    }
    a
}

/// Spreading activation without the distributional factor: `A = B + Σ W·S`.
pub fn plain_activation(record: &ActivationRecord, params: &ActivationParams) -> f64 {
    let mut a = record.base;
    for c in record.cues.iter().filter(|c| c.satisfied) {
        a += params.cue_weight(c.weight) * (params.mas - (c.fan.max(1) as f64).ln());
    }
    a
}

/// `σ = Σ W` over satisfied cues.
pub fn salience(record: &ActivationRecord, params: &ActivationParams) -> f64 {
    record.cues.iter().filter(|c| c.satisfied).map(|c| params.cue_weight(c.weight)).sum()
}

/// Mean thematic fit over `(role, filler word)` pairs that have a prototype
/// and an in-vocabulary filler.
pub fn semantic_coherence(
    fillers: &[(String, String)],
    prototypes: &BTreeMap<String, Prototype>,
    vs: &VectorStore,
) -> Result<f64, ActivationError> {
    let fits: Vec<f64> =
        fillers.iter().filter_map(|(role, word)| thematic_fit(word, prototypes.get(role)?, vs).ok()).collect();
    if fits.is_empty() {
        return Err(ActivationError::NoScorableRoles);
    }
    Ok(fits.iter().sum::<f64>() / fits.len() as f64)
}
