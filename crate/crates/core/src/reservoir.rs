//! Bit-reservoir representation for the doubling map.
//!
//! A point of the circle is identified with its infinite binary expansion.
//! The expansion is an optional explicit prefix followed by a seeded ChaCha
//! stream, so any finite window of it can be regenerated on demand. Doubling
//! shifts the expansion by one digit, so `T^n(x)` is the window at offset `n`.

use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::rng::stream_rng;

/// The infinite bit string behind a reservoir point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitStream {
    prefix: Arc<[u64]>,
    seed: u64,
    stream: u64,
}

impl BitStream {
    pub fn seeded(seed: u64, stream: u64) -> Self {
        BitStream {
            prefix: Arc::from(Vec::new()),
            seed,
            stream,
        }
    }

    /// Explicit leading words (most significant bit first) before the
    /// seeded tail.
    pub fn with_prefix(prefix: Vec<u64>, seed: u64, stream: u64) -> Self {
        BitStream {
            prefix: Arc::from(prefix),
            seed,
            stream,
        }
    }

    /// Stream whose leading digits are `bits` (true = 1).
    pub fn from_bits(bits: &[bool], seed: u64, stream: u64) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (63 - i % 64);
            }
        }
        // Digits after the explicit ones but inside the last word are zero.
        Self::with_prefix(words, seed, stream)
    }

    fn tail_rng(&self, tail_word: u64) -> ChaCha8Rng {
        let mut rng = stream_rng(self.seed, self.stream);
        rng.set_word_pos(2 * tail_word as u128);
        rng
    }

    /// Word `i` of the expansion (digits `64i .. 64i+63`).
    pub fn word(&self, i: u64) -> u64 {
        let p = self.prefix.len() as u64;
        if i < p {
            self.prefix[i as usize]
        } else {
            self.tail_rng(i - p).next_u64()
        }
    }

    /// The 64 digits starting at `offset`, as the top bits of a `u64`.
    pub fn window(&self, offset: u64) -> u64 {
        let (q, s) = (offset / 64, offset % 64);
        if s == 0 {
            self.word(q)
        } else {
            (self.word(q) << s) | (self.word(q + 1) >> (64 - s))
        }
    }

    pub fn cursor(&self, offset: u64) -> WordCursor {
        WordCursor::new(self, offset)
    }
}

/// Sequential reader used by orbit loops: each shift costs a few instructions
/// instead of a fresh ChaCha block.
#[derive(Clone, Debug)]
pub struct WordCursor {
    stream: BitStream,
    word_index: u64,
    current: u64,
    next: u64,
    shift: u32,
    rng: Option<ChaCha8Rng>,
}

impl WordCursor {
    fn new(stream: &BitStream, offset: u64) -> Self {
        let q = offset / 64;
        let mut c = WordCursor {
            stream: stream.clone(),
            word_index: q,
            current: 0,
            next: 0,
            shift: (offset % 64) as u32,
            rng: None,
        };
        c.current = c.fetch(q);
        c.next = c.fetch(q + 1);
        c
    }

    fn fetch(&mut self, i: u64) -> u64 {
        let p = self.stream.prefix.len() as u64;
        if i < p {
            return self.stream.prefix[i as usize];
        }
        let rng = self
            .rng
            .get_or_insert_with(|| self.stream.tail_rng(i - p));
        // Words are only ever requested in increasing order.
        let expected = 2 * (i - p) as u128;
        if rng.get_word_pos() != expected {
            rng.set_word_pos(expected);
        }
        rng.next_u64()
    }

    pub fn window(&self) -> u64 {
        if self.shift == 0 {
            self.current
        } else {
            (self.current << self.shift) | (self.next >> (64 - self.shift))
        }
    }

    pub fn advance(&mut self) {
        self.shift += 1;
        if self.shift == 64 {
            self.shift = 0;
            self.word_index += 1;
            self.current = self.next;
            self.next = self.fetch(self.word_index + 1);
        }
    }
}

/// A point of the circle: the stream read from `offset` on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReservoirPoint {
    pub stream: BitStream,
    pub offset: u64,
}

impl ReservoirPoint {
    pub fn new(stream: BitStream) -> Self {
        ReservoirPoint { stream, offset: 0 }
    }

    pub fn window(&self) -> u64 {
        self.stream.window(self.offset)
    }

    pub fn to_f64(&self) -> f64 {
        window_to_f64(self.window())
    }

    /// Leading digit `i` (0 = the 1/2 digit) of the point.
    pub fn bit(&self, i: u64) -> bool {
        let pos = self.offset + i;
        (self.stream.word(pos / 64) >> (63 - pos % 64)) & 1 == 1
    }
}

pub(crate) fn window_to_f64(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let s = BitStream::seeded(42, 9);
        let mut c = s.cursor(5);
        for off in 5..400 {
            assert_eq!(c.window(), s.window(off), "offset {off}");
            c.advance();
        }
    }

    #[test]
    fn prefix_then_tail() {
        let s = BitStream::with_prefix(vec![u64::MAX], 1, 0);
        assert_eq!(s.window(0), u64::MAX);
        assert_eq!(s.window(64), BitStream::seeded(1, 0).window(0));
        let mut c = s.cursor(0);
        for off in 0..200 {
            assert_eq!(c.window(), s.window(off));
            c.advance();
        }
    }

    #[test]
    fn shifted_bits() {
        let s = BitStream::from_bits(&[true, false, true, true, false], 3, 0);
        let mut p = ReservoirPoint::new(s);
        p.offset = 1;
        let lead: Vec<bool> = (0..4).map(|i| p.bit(i)).collect();
        assert_eq!(lead, vec![false, true, true, false]);
        // Re-reading reproduces the window.
        assert_eq!(p.window(), p.window());
    }
}
