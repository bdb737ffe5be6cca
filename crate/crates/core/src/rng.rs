//! Counter-based random streams keyed by `(seed, replica, stream)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of stream slots reserved per replica.
pub const STREAMS_PER_REPLICA: u64 = 8;

/// Well-known stream slots within a replica.
pub mod slot {
    pub const WALKER_X: u8 = 0;
    pub const WALKER_Y: u8 = 1;
    pub const BASE_X: u8 = 2;
    pub const BASE_Y: u8 = 3;
    pub const CLOCK_X: u8 = 4;
    pub const CLOCK_Y: u8 = 5;
    pub const HOLD_X: u8 = 6;
    pub const HOLD_Y: u8 = 7;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub replica: u64,
    pub stream: u8,
}

impl RngStream {
    pub fn new(seed: u64, replica: u64, stream: u8) -> Self {
        assert!(
            (stream as u64) < STREAMS_PER_REPLICA,
            "stream slot out of range"
        );
        RngStream {
            seed,
            replica,
            stream,
        }
    }

    /// ChaCha8 keyed by the seed, with the 64-bit stream id encoding the
    /// replica and slot. Same triple, same sequence.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replica * STREAMS_PER_REPLICA + self.stream as u64);
        rng
    }
}

/// Maps a uniform 64-bit word onto `0..n` by multiply-shift.
#[inline(always)]
pub fn pick(word: u64, n: u64) -> u64 {
    ((word as u128 * n as u128) >> 64) as u64
}
