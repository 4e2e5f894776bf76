use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for; part of the key so that e.g. data simulation
/// and Monte Carlo integration for the same cell never share draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Design,
    Data,
    Posterior,
    MonteCarlo,
    Test,
}

impl Purpose {
    fn key(self) -> u64 {
        match self {
            Purpose::Design => 1,
            Purpose::Data => 2,
            Purpose::Posterior => 3,
            Purpose::MonteCarlo => 4,
            Purpose::Test => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamPath {
    pub experiment: u64,
    pub n: u64,
    pub replication: u64,
    pub purpose: Purpose,
}

impl StreamPath {
    pub fn new(experiment: u64, n: u64, replication: u64, purpose: Purpose) -> Self {
        Self { experiment, n, replication, purpose }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a, used to turn scenario identifiers into experiment keys.
pub fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// A deterministic random stream addressed by `(master seed, path)`.
///
/// Identical keys give identical draw sequences within one build; distinct
/// keys are decorrelated by hashing the path into a fresh ChaCha8 seed.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    path: StreamPath,
    stream_seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, path: StreamPath) -> Self {
        let mut state = master_seed;
        for key in [path.experiment, path.n, path.replication, path.purpose.key()] {
            let mut k = key;
            state ^= splitmix64(&mut k);
            splitmix64(&mut state);
        }
        let stream_seed = state;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { master_seed, path, stream_seed, rng: ChaCha8Rng::from_seed(seed) }
    }

    /// Convenience for tests and one-off draws.
    pub fn from_seed(master_seed: u64) -> Self {
        Self::new(master_seed, StreamPath::new(0, 0, 0, Purpose::Test))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> StreamPath {
        self.path
    }

    /// 64-bit digest of `(master seed, path)`; reported per cell.
    pub fn stream_seed(&self) -> u64 {
        self.stream_seed
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
