// SPDX-License-Identifier: Apache-2.0

//! Prime field `Z_p` with `p = 2^61 - 1`.
//!
//! Every exponent used by the scheme (master secrets, randomizers, shares,
//! identity tags, reconstruction coefficients) lives here. The modulus is a
//! Mersenne prime, so reduction is two shifts and an add.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;

/// The group order used by the toy backend.
pub const MODULUS: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scalar(u64);

#[inline(always)]
fn reduce128(x: u128) -> u64 {
    // x = hi * 2^61 + lo  and  2^61 = 1 (mod p)
    let lo = (x as u64) & MODULUS;
    let mid = ((x >> 61) as u64) & MODULUS;
    let hi = (x >> 122) as u64;
    reduce64(lo + mid + hi)
}

#[inline(always)]
fn reduce64(x: u64) -> u64 {
    let r = (x & MODULUS) + (x >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

impl Scalar {
    pub const ZERO: Scalar = Scalar(0);
    pub const ONE: Scalar = Scalar(1);

    /// Reduces an arbitrary `u64` into the field.
    pub fn new(value: u64) -> Self {
        Scalar(reduce64(value))
    }

    /// Accepts only canonical residues.
    pub fn from_canonical(value: u64) -> Option<Self> {
        (value < MODULUS).then_some(Scalar(value))
    }

    pub fn from_i64(value: i64) -> Self {
        let s = Scalar::new(value.unsigned_abs());
        if value < 0 {
            -s
        } else {
            s
        }
    }

    /// Big-endian bytes of any length, reduced mod p.
    pub fn from_be_bytes_reduced(bytes: &[u8]) -> Self {
        bytes.iter().fold(Scalar::ZERO, |acc, &b| Scalar(reduce128(((acc.0 as u128) << 8) | b as u128)))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Scalar::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat; `None` for zero.
    pub fn inverse(self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.pow(MODULUS - 2))
        }
    }

    /// Uniform sample from `[0, p)` by rejection on 61-bit draws.
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v = rng.next_u64() >> 3;
            if v < MODULUS {
                return Scalar(v);
            }
        }
    }

    /// Uniform sample from `[1, p)`.
    pub fn random_nonzero<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        loop {
            let s = Scalar::random(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    #[inline]
    fn add(self, rhs: Scalar) -> Scalar {
        // both operands < 2^61, so the sum fits in 62 bits
        Scalar(reduce64(self.0 + rhs.0))
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    #[inline]
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    #[inline]
    fn neg(self) -> Scalar {
        if self.0 == 0 {
            self
        } else {
            Scalar(MODULUS - self.0)
        }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(reduce128(self.0 as u128 * rhs.0 as u128))
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = *self + rhs;
    }
}

impl SubAssign for Scalar {
    fn sub_assign(&mut self, rhs: Scalar) {
        *self = *self - rhs;
    }
}

impl MulAssign for Scalar {
    fn mul_assign(&mut self, rhs: Scalar) {
        *self = *self * rhs;
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::new(v)
    }
}
