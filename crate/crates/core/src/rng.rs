//! Counter-based random numbers: Philox4x32-10.
//!
//! The generator is a keyed bijection of a 128-bit counter (Salmon et al.,
//! "Parallel random numbers: as easy as 1, 2, 3", SC'11). A [`Philox`] holds
//! the 64-bit key derived from the seed; [`Philox::stream`] opens the
//! substream for one index, whose counter is laid out as
//!
//! ```text
//! word 0..1: block number within the substream (little-endian u64)
//! word 2..3: substream index                   (little-endian u64)
//! ```
//!
//! Each block yields four `u32` words, consumed in order; a `u64` takes two
//! words (low word first) and a uniform `f64` is the top 53 bits of a `u64`
//! scaled by `2^-53`. Only integer arithmetic is involved, so streams are
//! identical on every platform.

use rand::RngCore;

const MULTIPLIER_0: u32 = 0xD251_1F53;
const MULTIPLIER_1: u32 = 0xCD9E_8D57;
const WEYL_0: u32 = 0x9E37_79B9;
const WEYL_1: u32 = 0xBB67_AE85;
const ROUNDS: usize = 10;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let product = u64::from(a) * u64::from(b);
    ((product >> 32) as u32, product as u32)
}

/// One Philox4x32-10 block.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut key = key;
    for round in 0..ROUNDS {
        if round > 0 {
            key[0] = key[0].wrapping_add(WEYL_0);
            key[1] = key[1].wrapping_add(WEYL_1);
        }
        let (hi0, lo0) = mulhilo(MULTIPLIER_0, ctr[0]);
        let (hi1, lo1) = mulhilo(MULTIPLIER_1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// Seeded generator family; substreams are independent of each other and of
/// the order in which they are consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Philox {
    key: [u32; 2],
}

impl Philox {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    pub fn stream(&self, index: u64) -> PhiloxStream {
        PhiloxStream {
            key: self.key,
            index: [index as u32, (index >> 32) as u32],
            block: 0,
            buffer: [0; 4],
            used: 4,
        }
    }
}

/// Sequential reader over one substream.
#[derive(Debug, Clone)]
pub struct PhiloxStream {
    key: [u32; 2],
    index: [u32; 2],
    block: u64,
    buffer: [u32; 4],
    used: usize,
}

impl PhiloxStream {
    #[inline]
    fn refill(&mut self) {
        let counter = [
            self.block as u32,
            (self.block >> 32) as u32,
            self.index[0],
            self.index[1],
        ];
        self.buffer = philox4x32(counter, self.key);
        self.block = self.block.wrapping_add(1);
        self.used = 0;
    }

    #[inline]
    pub fn next_word(&mut self) -> u32 {
        if self.used == 4 {
            self.refill();
        }
        let w = self.buffer[self.used];
        self.used += 1;
        w
    }

    #[inline]
    pub fn next_u64_value(&mut self) -> u64 {
        let lo = u64::from(self.next_word());
        let hi = u64::from(self.next_word());
        (hi << 32) | lo
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64_value() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for PhiloxStream {
    fn next_u32(&mut self) -> u32 {
        self.next_word()
    }

    fn next_u64(&mut self) -> u64 {
        self.next_u64_value()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(4) {
            let bytes = self.next_word().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn known_answers() {
        assert_eq!(
            philox4x32([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = Philox::new(42);
        let a: Vec<u32> = (0..9)
            .map({
                let mut s = g.stream(7);
                move |_| s.next_word()
            })
            .collect();
        let b: Vec<u32> = (0..9)
            .map({
                let mut s = g.stream(7);
                move |_| s.next_word()
            })
            .collect();
        assert_eq!(a, b);
        let mut other = g.stream(8);
        assert_ne!(a[0], other.next_word());
        let mut reseeded = Philox::new(43).stream(7);
        assert_ne!(a[0], reseeded.next_word());
    }

    #[test]
    fn uniform_range_and_mean() {
        let mut s = Philox::new(1).stream(0);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        // stderr of the mean is sqrt(1/12 / n) ≈ 6.5e-4
        assert!((mean - 0.5).abs() < 4.0 * 6.5e-4, "{mean}");
    }
}
