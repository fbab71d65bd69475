//! Incremental sentence processing.
//!
//! Each token is scanned into a lexical instance, then the direct route
//! (cue-driven recognition) and the compositional route (unification into
//! open valence slots) run until neither changes the state. Events whose
//! triggers are satisfied refine the instances they target.

mod batch;
mod compose;
mod direct;
mod interpret;
mod scan;
mod state;
mod trace;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::activation::{ActivationError, ActivationParams};
use crate::grammar::Grammar;
use crate::vectors::{build_prototype, Prototype, VectorError, VectorStore};

pub use batch::interpret_batch;
pub use interpret::{InstanceSummary, Interpretation, ResidueToken, Scores};
pub use state::{Candidate, Instance, Merge, ParseState, Recognition, Route};
pub use trace::{Trace, TraceKind, TraceRecord};

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameters: {0}")]
    Params(#[from] ActivationError),
    #[error("cannot build prototype for {frame}.{role}: {source}")]
    Prototype { frame: String, role: String, source: VectorError },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    pub surprisal_multiplier: f64,
}

impl Token {
    pub fn new(surface: impl Into<String>, index: usize) -> Self {
        Token { surface: surface.into(), index, surprisal_multiplier: 1.0 }
    }
}

/// Lowercases and splits on whitespace and punctuation (hyphens and
/// apostrophes inside words are kept).
pub fn tokenize(text: &str) -> Vec<Token> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for piece in lower.split(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '-' && c != '\'')) {
        let word = piece.trim_matches(|c| c == '-' || c == '\'');
        if !word.is_empty() {
            out.push(Token::new(word, out.len()));
        }
    }
    out
}

/// Shared, read-only processing context.
pub struct Processor<'a> {
    pub grammar: &'a Grammar,
    pub vectors: &'a VectorStore,
    pub params: ActivationParams,
    prototypes: BTreeMap<String, BTreeMap<String, Prototype>>,
}

impl<'a> Processor<'a> {
    pub fn new(grammar: &'a Grammar, vectors: &'a VectorStore, params: ActivationParams) -> Result<Self, ProcessError> {
        params.validate()?;
        let mut prototypes = BTreeMap::new();
        for f in grammar.frames.values() {
            let mut roles = BTreeMap::new();
            for (role, fillers) in &f.prototypes {
                let p = build_prototype(fillers, vectors).map_err(|source| ProcessError::Prototype {
                    frame: f.name.clone(),
                    role: role.clone(),
                    source,
                })?;
                roles.insert(role.clone(), p);
            }
            prototypes.insert(f.name.clone(), roles);
        }
        Ok(Processor { grammar, vectors, params, prototypes })
    }

    pub fn prototypes(&self, frame: &str) -> Option<&BTreeMap<String, Prototype>> {
        self.prototypes.get(frame)
    }

    pub fn start(&self) -> ParseState {
        ParseState::new(self)
    }

    /// Scans one token, then alternates the direct and compositional routes
    /// until the state settles.
    pub fn step(&self, state: &mut ParseState, token: Token) {
        self.scan(state, token);
        loop {
            let recognized = !self.try_direct_route(state).is_empty();
            let composed = self.compose(state);
            let refreshed = self.refresh(state);
            if !recognized && !composed && !refreshed {
                break;
            }
        }
        self.note_activations(state);
    }

    pub fn interpret(&self, sentence: &[Token]) -> Result<Interpretation, ProcessError> {
        if sentence.is_empty() {
            return Err(ProcessError::EmptyInput);
        }
        let mut state = self.start();
        for (i, t) in sentence.iter().enumerate() {
            self.step(&mut state, Token { index: i, ..t.clone() });
        }
        Ok(self.finish(state))
    }

    pub fn interpret_text(&self, text: &str) -> Result<Interpretation, ProcessError> {
        self.interpret(&tokenize(text))
    }
}

/// Runs a whole sentence with fresh state.
pub fn interpret(
    sentence: &[Token],
    g: &Grammar,
    vs: &VectorStore,
    p: &ActivationParams,
) -> Result<Interpretation, ProcessError> {
    Processor::new(g, vs, p.clone())?.interpret(sentence)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_folds_case_and_splits_punctuation() {
        let t: Vec<String> = tokenize("Mary gives John a book.").into_iter().map(|t| t.surface).collect();
        assert_eq!(t, ["mary", "gives", "john", "a", "book"]);
        let t: Vec<String> = tokenize("  put,all eggs;in-one 'basket' ").into_iter().map(|t| t.surface).collect();
        assert_eq!(t, ["put", "all", "eggs", "in-one", "basket"]);
        let idx: Vec<usize> = tokenize("a b c").iter().map(|t| t.index).collect();
        assert_eq!(idx, [0, 1, 2]);
        assert!(tokenize(" ... ").is_empty());
    }
}
