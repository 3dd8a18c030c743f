//! A small reverse-mode gradient engine: dense stacks, an LSTM cell, Adam
//! and finite-difference gradient checking.

mod adam;
mod gradcheck;
mod lstm;
mod mlp;
pub mod ops;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, gradient_check_input, relative_error, GradCheckConfig, GradCheckReport, GradMismatch};
pub use lstm::{LstmCell, LstmState, SequenceTape};
pub use mlp::{Mlp, MlpShape, OpKind, Tape, TapeNode};
pub use ops::Activation;
pub use params::{ParameterSet, Tensor};

use rayon::prelude::*;

/// Fold `f` over `items` in fixed-size chunks, possibly in parallel, and
/// merge the chunk results in chunk order.
///
/// The chunk layout depends only on `items.len()` and `chunk`, so the result
/// is bit-identical regardless of thread count.
pub fn chunked_reduce<T, A, I, F, M>(items: &[T], chunk: usize, init: I, f: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &T) + Sync,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let parts: Vec<A> = items
        .par_chunks(chunk)
        .map(|c| {
            let mut acc = init();
            for item in c {
                f(&mut acc, item);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}
