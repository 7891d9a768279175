use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Offset keeping batch streams apart from parameter-initialization streams.
const BATCH_STREAM_BASE: u64 = 1 << 32;

/// Item batches of one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchSchedule {
    pub seed: u64,
    pub epoch: usize,
    pub batch_size: usize,
    pub batches: Vec<Vec<usize>>,
}

/// Seeded permutation of `0..num_items` cut into batches of `batch_size`;
/// the last batch may be short.
pub fn make_batches(num_items: usize, batch_size: usize, seed: u64, epoch: usize) -> BatchSchedule {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BATCH_STREAM_BASE + epoch as u64);
    let mut perm: Vec<usize> = (0..num_items).collect();
    perm.shuffle(&mut rng);
    BatchSchedule {
        seed,
        epoch,
        batch_size,
        batches: perm.chunks(batch_size).map(<[usize]>::to_vec).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_by_two() {
        let s = make_batches(5, 2, 3, 0);
        let sizes: Vec<usize> = s.batches.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
        let mut all: Vec<usize> = s.batches.concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert_eq!(s, make_batches(5, 2, 3, 0));
        assert_ne!(make_batches(50, 50, 3, 0), make_batches(50, 50, 3, 1));
    }
}
