//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by a path of
//! integers (sweep point, realization, process, ...) below a master seed. The
//! stream a work item sees depends only on its address, so results do not
//! depend on execution order or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream address of the base-station process inside a realization.
pub const BS_PROCESS: u64 = 0;
/// Stream address of the UAV process inside a realization.
pub const UAV_PROCESS: u64 = 1;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A node in the stream tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    key: u64,
}

impl StreamSeed {
    pub fn new(master_seed: u64) -> Self {
        Self {
            key: splitmix64(master_seed),
        }
    }

    /// Derive the sub-tree addressed by `index`.
    pub fn child(&self, index: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    /// Open the random stream addressed by `index` below this node.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
