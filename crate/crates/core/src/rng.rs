//! Counter-based random numbers.
//!
//! Every draw is a pure function of `(seed, stream, counter)`: a stream is a
//! SplitMix64 sequence whose starting state is derived from the seed and the
//! stream index. Graph generation uses the edge index as the stream, so any
//! sharding of the edge range reproduces the same graph.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: mix64(seed ^ 0x5851_f42d_4c95_7f2d),
        }
    }

    pub fn stream(&self, stream: u64) -> Stream {
        Stream::from_state(mix64(
            self.key.wrapping_add(stream.wrapping_add(1).wrapping_mul(GOLDEN)),
        ))
    }

    /// Draw `counter` of `stream`, without materializing the stream.
    pub fn at(&self, stream: u64, counter: u64) -> u64 {
        self.stream(stream).nth_u64(counter)
    }
}

#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn from_state(state: u64) -> Self {
        Stream { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn nth_u64(&self, counter: u64) -> u64 {
        mix64(self.state.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, bound)` (Lemire's multiply-and-reject).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}
