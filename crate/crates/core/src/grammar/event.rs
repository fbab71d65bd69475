use super::Event;
use crate::fs::{loose_unify_traced, FeatureStructure, TypeHierarchy, Unified, UnifyError, VectorGate};
use crate::vectors::VectorStore;

/// Unifies the event's refinement into an instance of its target. Slots the
/// refinement fills are marked expected; observed content keeps priority.
pub fn apply_event(
    e: &Event,
    target_instance: &FeatureStructure,
    h: &TypeHierarchy,
    vs: &VectorStore,
    sim_threshold: f64,
) -> Result<FeatureStructure, UnifyError> {
    apply_event_traced(e, target_instance, h, VectorGate::Similarity { store: vs, threshold: sim_threshold })
        .map(|u| u.fs)
}

pub fn apply_event_traced(
    e: &Event,
    target_instance: &FeatureStructure,
    h: &TypeHierarchy,
    gate: VectorGate<'_>,
) -> Result<Unified, UnifyError> {
    loose_unify_traced(target_instance, &e.refinement, h, gate)
}
