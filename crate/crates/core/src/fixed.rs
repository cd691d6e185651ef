//! Fixed-point fractions of the unit interval.
//!
//! A [`Fraction`] with precision `B` is the number `N / 2^B` with
//! `0 <= N < 2^B`. It is stored left-aligned in `ceil(B/64)` little-endian
//! limbs, so the padding bits below `2^-B` are always zero and every integer
//! operation modulo one is plain wrapping arithmetic on the limbs.

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fraction {
    /// Little-endian limbs; `limbs[len-1]` holds the most significant bits.
    limbs: Vec<u64>,
    bits: u32,
}

fn limb_count(bits: u32) -> usize {
    bits.div_ceil(64) as usize
}

impl Fraction {
    pub fn zero(bits: u32) -> Self {
        assert!(bits > 0, "precision must be positive");
        Fraction {
            limbs: vec![0; limb_count(bits)],
            bits,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Number of padding bits below the least significant represented bit.
    fn pad(&self) -> u32 {
        (self.limbs.len() as u32) * 64 - self.bits
    }

    fn pad_mask(&self) -> u64 {
        match self.pad() {
            0 => 0,
            p => (1u64 << p) - 1,
        }
    }

    fn clear_padding(&mut self) {
        let mask = self.pad_mask();
        self.limbs[0] &= !mask;
    }

    /// `num / 2^log2_den`, truncated to the declared precision.
    pub fn from_dyadic(num: u64, log2_den: u32, bits: u32) -> Result<Self> {
        if log2_den < 64 && num >= (1u64 << log2_den) {
            return Err(Error::InvalidPoint(format!(
                "{num}/2^{log2_den} is not in [0,1)"
            )));
        }
        let mut n = BigUint::from(num);
        let total = (limb_count(bits) as u32) * 64;
        if total >= log2_den {
            n <<= (total - log2_den) as usize;
        } else {
            n >>= (log2_den - total) as usize;
        }
        Ok(Self::from_aligned(n, bits))
    }

    /// Truncates a float in `[0,1)` to the declared precision. Exact for
    /// dyadic floats with at most `bits` fractional digits.
    pub fn from_f64(value: f64, bits: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::InvalidPoint(format!("{value} is not in [0,1)")));
        }
        let mut f = Self::zero(bits);
        // value * 2^64 is exact; the cast truncates below 2^-64.
        let top = (value * 18_446_744_073_709_551_616.0) as u64;
        let last = f.limbs.len() - 1;
        f.limbs[last] = top;
        f.clear_padding();
        Ok(f)
    }

    /// Interprets `numerator` as `numerator / 2^bits`. Higher bits are dropped
    /// (reduction modulo one).
    pub fn from_numerator(numerator: &BigUint, bits: u32) -> Self {
        let pad = limb_count(bits) as u32 * 64 - bits;
        Self::from_aligned(numerator << pad as usize, bits)
    }

    fn from_aligned(n: BigUint, bits: u32) -> Self {
        let mut f = Self::zero(bits);
        for (dst, src) in f.limbs.iter_mut().zip(n.iter_u64_digits()) {
            *dst = src;
        }
        f.clear_padding();
        f
    }

    /// The integer `N` such that the fraction equals `N / 2^bits`.
    pub fn numerator(&self) -> BigUint {
        let mut words = Vec::with_capacity(self.limbs.len() * 2);
        for limb in &self.limbs {
            words.push(*limb as u32);
            words.push((*limb >> 32) as u32);
        }
        BigUint::new(words) >> self.pad() as usize
    }

    /// Uniformly random fraction with every represented bit drawn from `rng`.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Self {
        let mut f = Self::zero(bits);
        for limb in f.limbs.iter_mut().rev() {
            *limb = rng.next_u64();
        }
        f.clear_padding();
        f
    }

    /// Most significant 64 bits.
    pub fn top_word(&self) -> u64 {
        self.limbs[self.limbs.len() - 1]
    }

    /// Overwrites the most significant 64 bits, keeping the rest.
    pub fn set_top_word(&mut self, word: u64) {
        let last = self.limbs.len() - 1;
        self.limbs[last] = word;
        self.clear_padding();
    }

    /// The leading 53 bits as a float; always strictly below one.
    pub fn to_f64(&self) -> f64 {
        (self.top_word() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    /// Bit `i` of the binary expansion, `i = 0` being the 1/2 digit.
    pub fn bit(&self, i: u32) -> bool {
        if i >= self.bits {
            return false;
        }
        let from_top = i as usize;
        let limb = self.limbs.len() - 1 - from_top / 64;
        (self.limbs[limb] >> (63 - from_top % 64)) & 1 == 1
    }

    fn check_compatible(&self, other: &Fraction) {
        assert_eq!(
            self.bits, other.bits,
            "fractions of different precision cannot be combined"
        );
    }

    /// `self = self + other mod 1`.
    pub fn add_assign_mod1(&mut self, other: &Fraction) {
        self.check_compatible(other);
        let mut carry = false;
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            let (s1, c1) = a.overflowing_add(*b);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            *a = s2;
            carry = c1 || c2;
        }
    }

    /// `self = self - other mod 1`.
    pub fn sub_assign_mod1(&mut self, other: &Fraction) {
        self.check_compatible(other);
        let mut borrow = false;
        for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
            let (s1, b1) = a.overflowing_sub(*b);
            let (s2, b2) = s1.overflowing_sub(borrow as u64);
            *a = s2;
            borrow = b1 || b2;
        }
    }

    /// `self = self + m * other mod 1` for a signed integer `m`.
    pub fn add_scaled_mod1(&mut self, other: &Fraction, m: i64) {
        self.check_compatible(other);
        let factor = m.unsigned_abs() as u128;
        if m >= 0 {
            let mut carry: u128 = 0;
            for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
                let p = (*b as u128) * factor + (*a as u128) + carry;
                *a = p as u64;
                carry = p >> 64;
            }
        } else {
            let mut pending: u128 = 0;
            for (a, b) in self.limbs.iter_mut().zip(&other.limbs) {
                let p = (*b as u128) * factor + pending;
                let (d, borrow) = a.overflowing_sub(p as u64);
                *a = d;
                pending = (p >> 64) + borrow as u128;
            }
        }
    }

    /// `self = m * self mod 1`.
    pub fn mul_small_mod1(&mut self, m: i64) {
        let copy = self.clone();
        self.limbs.iter_mut().for_each(|l| *l = 0);
        self.add_scaled_mod1(&copy, m);
    }

    /// `self = 2 * self mod 1`; the lowest represented bit becomes zero.
    pub fn double_mod1(&mut self) {
        let mut carry = 0u64;
        for limb in self.limbs.iter_mut() {
            let next = *limb >> 63;
            *limb = (*limb << 1) | carry;
            carry = next;
        }
    }

    pub fn set_zero(&mut self) {
        self.limbs.iter_mut().for_each(|l| *l = 0);
    }

    /// Padding bits must stay zero; true for every value built by this type.
    pub fn is_exact(&self) -> bool {
        self.limbs[0] & self.pad_mask() == 0
    }
}

impl std::fmt::Debug for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fraction({:.17}, B={})", self.to_f64(), self.bits)
    }
}

/// `floor(2^bits * (sqrt(5) - 1) / 2)`: the golden-mean rotation number.
pub fn golden_numerator(bits: u32) -> BigUint {
    let scale = BigUint::from(1u8) << bits as usize;
    let root5 = (BigUint::from(5u8) * &scale * &scale).sqrt();
    (root5 - &scale) >> 1usize
}

/// `floor(2^bits * sum_{n=1..terms} 10^{-n!})`: a truncated Liouville number.
pub fn liouville_numerator(bits: u32, terms: u32) -> BigUint {
    let factorials: Vec<u32> = (1..=terms)
        .scan(1u32, |acc, n| {
            *acc *= n;
            Some(*acc)
        })
        .collect();
    let deepest = *factorials.last().expect("at least one term");
    let ten = BigUint::from(10u8);
    let mut sum = BigUint::from(0u8);
    for k in &factorials {
        sum += ten.pow(deepest - k);
    }
    (sum << bits as usize) / ten.pow(deepest)
}
