//! Seed substreams.
//!
//! Every random draw in a sweep comes from a ChaCha stream whose 32-byte seed
//! packs the master seed together with the coordinates of the draw, so two
//! different coordinates never share a stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    Channel = 1,
    Payload = 2,
    Noise = 3,
}

/// Coordinates of one draw inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeedKey {
    pub case: u8,
    pub scheme: u8,
    pub point: u16,
    pub trial: u32,
}

/// Stream for `(master, stream, key)`.
pub fn keyed_stream(master: u64, stream: Stream, key: SeedKey) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8] = stream as u8;
    seed[9] = key.case;
    seed[10] = key.scheme;
    seed[11..13].copy_from_slice(&key.point.to_le_bytes());
    seed[13..17].copy_from_slice(&key.trial.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// A 64-bit seed derived from `(master, stream, key)`, for APIs that take a
/// plain seed (e.g. [`crate::channel::sample_paths`]).
pub fn derive_seed(master: u64, stream: Stream, key: SeedKey) -> u64 {
    keyed_stream(master, stream, key).next_u64()
}
