//! Seeded random streams. Every consumer of randomness draws from its own
//! ChaCha stream derived from the run seed, so adding draws in one place
//! never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Training = 2,
    Imputation = 3,
    Mcar = 4,
    Holdout = 5,
    Labels = 6,
    Downstream = 7,
    Synthetic = 8,
}

pub fn seeded(seed: u64, stream: Stream) -> ChaCha8Rng {
    seeded_cell(seed, stream, 0)
}

/// Stream for one cell (e.g. one missing rate) of a multi-cell experiment.
pub fn seeded_cell(seed: u64, stream: Stream, cell: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | cell as u64);
    rng
}
