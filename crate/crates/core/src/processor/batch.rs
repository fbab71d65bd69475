use rayon::prelude::*;

use super::{tokenize, Interpretation, ProcessError, Processor};
use crate::activation::ActivationParams;
use crate::grammar::Grammar;
use crate::vectors::VectorStore;

/// Interprets sentences in parallel on `threads` workers; results keep input order.
pub fn interpret_batch(
    sentences: &[String],
    g: &Grammar,
    vs: &VectorStore,
    p: &ActivationParams,
    threads: usize,
) -> Result<Vec<Result<Interpretation, ProcessError>>, ProcessError> {
    let processor = Processor::new(g, vs, p.clone())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
    Ok(pool.install(|| sentences.par_iter().map(|s| processor.interpret(&tokenize(s))).collect()))
}
