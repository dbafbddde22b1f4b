use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A reproducible random stream: ChaCha8 keyed by `seed`, on stream `stream_id`.
///
/// Substreams are derived as `mix(stream_id) ^ index` where `mix` is the
/// splitmix64 finalizer, so (replica, role) pairs land on distinct streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// What a substream drives. Price and arrival noise never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Price = 1,
    Arrivals = 2,
    Aux = 3,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn child(self, index: u64) -> Self {
        Self { seed: self.seed, stream_id: mix(self.stream_id) ^ index }
    }

    pub fn role(self, role: Role) -> Self {
        self.child(role as u64)
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
