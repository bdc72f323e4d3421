//! Independent random streams derived from one master seed, so adding draws to
//! one noise source never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Lidar = 1,
    Camera = 2,
    Actuation = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// One generator per noise source.
#[derive(Debug, Clone)]
pub struct SimRng {
    pub lidar: ChaCha8Rng,
    pub camera: ChaCha8Rng,
    pub actuation: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            lidar: stream(seed, Stream::Lidar),
            camera: stream(seed, Stream::Camera),
            actuation: stream(seed, Stream::Actuation),
        }
    }
}
