//! Seeding and stream-splitting conventions.
//!
//! All stochastic entry points take an explicit `&mut Stream`. A [`Stream`]
//! is a counter-mode ChaCha generator, so disjoint substreams are obtained by
//! keeping the seed and varying the 64-bit stream number. Two conventions are
//! used throughout the crate:
//!
//! - *Component substreams*: a sampler that needs several mutually
//!   independent sources (for example the common/index/pair components of an
//!   exchangeable law) forks them from its input stream with [`fork`], one
//!   fixed tag per component.
//! - *Per-draw substreams*: batch drivers give draw `i` the stream
//!   `substream(seed, DRAW_STREAM_BASE + i)`, which makes every draw a pure
//!   function of `(seed, i)` independent of batch size or evaluation order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// The crate-wide random stream type.
pub type Stream = ChaCha12Rng;

/// Stream numbers `DRAW_STREAM_BASE..` are reserved for per-draw substreams;
/// numbers below it are available as component tags.
pub const DRAW_STREAM_BASE: u64 = 1 << 32;

/// Master stream for a seed (stream number 0).
pub fn master(seed: u64) -> Stream {
    substream(seed, 0)
}

/// Independent stream `stream_id` under `seed`.
pub fn substream(seed: u64, stream_id: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Per-draw stream for batch element `index` under `seed`.
pub fn draw_stream(seed: u64, index: u64) -> Stream {
    substream(seed, DRAW_STREAM_BASE + index)
}

/// Fork a child stream from `parent`, keyed by a fixed component tag.
///
/// Consumes one 64-bit word from the parent, so successive forks (and any
/// later direct use of the parent) remain independent; the tag separates
/// children forked from the same parent state.
pub fn fork(parent: &mut Stream, tag: u64) -> Stream {
    let entropy = parent.next_u64();
    substream(entropy, tag)
}
