//! Distributional construction grammar engine.
//!
//! Constructions, frames and events are typed feature structures carrying
//! distributional vectors. Sentences are read token by token: constructions
//! whose cues are all satisfied are recognized directly, everything else is
//! assembled by (loose) unification into open valence slots.

pub mod activation;
pub mod fs;
pub mod grammar;
pub mod processor;
pub mod properties;
pub mod vectors;

pub use activation::{ActivationParams, ActivationRecord, CueMatch, LexicalCue};
pub use fs::{FeaturePath, FeatureStructure, TypeHierarchy, UnifyError, VectorGate};
pub use grammar::{load_grammar, load_grammar_path, load_grammar_str, Grammar, GrammarError};
pub use processor::{interpret, interpret_batch, tokenize, Interpretation, ProcessError, Processor, Token};
pub use properties::{PropertyConstraint, PropertyKind, Span, SpanAssignment, Weight};
pub use vectors::{VectorError, VectorStore};
