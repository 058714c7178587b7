//! Seedable, splittable random streams.
//!
//! Every stochastic operation in the crate takes a `&mut RandomStream`. A
//! stream is a ChaCha8 generator identified by a 64-bit seed and a 64-bit
//! stream id; [`RandomStream::split`] derives independent children so that
//! parallel workers never share a generator.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Child stream `index`, independent of the parent and of its siblings.
    /// Depends only on the parent's identity, not on how much of the parent
    /// has been consumed.
    pub fn split(&self, index: u64) -> Self {
        Self::with_stream(self.seed, mix(self.stream ^ mix(index.wrapping_add(1))))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(7);
        let mut b = RandomStream::new(7);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn split_is_independent_of_consumption() {
        let a = RandomStream::new(11);
        let mut b = RandomStream::new(11);
        b.next_u64();
        assert_eq!(a.split(3).next_u64(), b.split(3).next_u64());
    }

    #[test]
    fn siblings_differ() {
        let a = RandomStream::new(11);
        assert_ne!(a.split(0).next_u64(), a.split(1).next_u64());
        assert_ne!(a.split(0).next_u64(), a.clone().next_u64());
    }
}
