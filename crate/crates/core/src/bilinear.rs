// SPDX-License-Identifier: Apache-2.0

//! Symmetric bilinear group `e: G x G -> GT` over the field in [`crate::field`].
//!
//! Only the exponent-representation ("toy") backend is registered. Elements
//! are stored as their discrete logarithm with respect to the generator, so
//! the group law is exponent addition and the pairing is exponent
//! multiplication. It offers no security whatsoever; it exists so every
//! algebraic identity of the scheme can be checked exactly.

use std::fmt;

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Scalar, MODULUS};

pub const TOY_BACKEND: &str = "toy";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown bilinear backend `{0}`")]
    UnknownBackend(String),
    #[error("attribute name is empty")]
    EmptyAttribute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Toy,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Toy => TOY_BACKEND,
        }
    }
}

/// Source-group element.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElem(Scalar);

/// Target-group element.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GtElem(Scalar);

macro_rules! group_impl {
    ($ty:ident, $label:literal) => {
        impl $ty {
            pub const IDENTITY: $ty = $ty(Scalar::ZERO);

            /// Group operation.
            #[inline]
            pub fn op(self, rhs: $ty) -> $ty {
                $ty(self.0 + rhs.0)
            }

            /// Group "division" `self * rhs^-1`.
            #[inline]
            #[allow(clippy::should_implement_trait)]
            pub fn div(self, rhs: $ty) -> $ty {
                $ty(self.0 - rhs.0)
            }

            #[inline]
            pub fn invert(self) -> $ty {
                $ty(-self.0)
            }

            #[inline]
            pub fn pow(self, e: Scalar) -> $ty {
                $ty(self.0 * e)
            }

            pub fn is_identity(self) -> bool {
                self.0.is_zero()
            }

            pub fn to_bytes(self) -> [u8; 8] {
                self.0.to_be_bytes()
            }

            pub fn from_bytes(bytes: [u8; 8]) -> Option<$ty> {
                Scalar::from_canonical(u64::from_be_bytes(bytes)).map($ty)
            }

            /// Exposes the discrete log. Toy backend only; used by tests as an oracle.
            pub fn dlog(self) -> Scalar {
                self.0
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($label, "^{}"), self.0.value())
            }
        }
    };
}

group_impl!(GroupElem, "g");
group_impl!(GtElem, "gt");

/// Immutable description of the group in use. Randomness is never stored
/// here; callers pass their own rng to every sampling operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupCtx {
    backend: Backend,
}

impl GroupCtx {
    /// Looks up a backend by name. An empty selector means the default (toy).
    pub fn setup(selector: &str) -> Result<GroupCtx, GroupError> {
        match selector {
            "" | TOY_BACKEND => Ok(GroupCtx::toy()),
            other => Err(GroupError::UnknownBackend(other.to_string())),
        }
    }

    pub fn toy() -> GroupCtx {
        GroupCtx { backend: Backend::Toy }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn order(&self) -> u64 {
        MODULUS
    }

    pub fn g(&self) -> GroupElem {
        GroupElem(Scalar::ONE)
    }

    pub fn gt(&self) -> GtElem {
        GtElem(Scalar::ONE)
    }

    /// `g^e`.
    #[inline]
    pub fn g_pow(&self, e: Scalar) -> GroupElem {
        GroupElem(e)
    }

    /// `e(g,g)^e`.
    #[inline]
    pub fn gt_pow(&self, e: Scalar) -> GtElem {
        GtElem(e)
    }

    #[inline]
    pub fn pair(&self, x: GroupElem, y: GroupElem) -> GtElem {
        GtElem(x.0 * y.0)
    }

    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar::random(rng)
    }

    pub fn random_gt<R: RngCore + ?Sized>(&self, rng: &mut R) -> GtElem {
        GtElem(Scalar::random(rng))
    }

    /// Deterministic map from attribute names into `G`.
    pub fn hash_to_group(&self, attr: &str) -> Result<GroupElem, GroupError> {
        if attr.is_empty() {
            return Err(GroupError::EmptyAttribute);
        }
        let mut h = Scalar::from_be_bytes_reduced(&Sha256::digest(attr.as_bytes()));
        let mut counter: u8 = 0;
        while h.is_zero() {
            let mut hasher = Sha256::new();
            hasher.update(attr.as_bytes());
            hasher.update([counter]);
            h = Scalar::from_be_bytes_reduced(&hasher.finalize());
            counter = counter.wrapping_add(1);
        }
        Ok(GroupElem(h))
    }
}

impl Default for GroupCtx {
    fn default() -> Self {
        GroupCtx::toy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn toy_setup_and_unknown_selector() {
        let ctx = GroupCtx::setup("toy").unwrap();
        assert_eq!(ctx.order(), 2305843009213693951);
        assert_eq!(ctx.pair(ctx.g(), ctx.g()), ctx.gt());
        assert_eq!(GroupCtx::setup("nosuch"), Err(GroupError::UnknownBackend("nosuch".into())));
    }

    #[test]
    fn small_exponent_bilinearity() {
        let ctx = GroupCtx::toy();
        let g = ctx.g();
        let p = ctx.pair(g.pow(Scalar::new(2)), g.pow(Scalar::new(3)));
        assert_eq!(p, ctx.gt().pow(Scalar::new(6)));
        let z = ctx.pair(g.pow(Scalar::ZERO), g.pow(Scalar::new(12345)));
        assert_eq!(z, ctx.gt().pow(Scalar::ZERO));
        assert!(z.is_identity());
    }

    #[test]
    fn bilinearity_random_trials() {
        let ctx = GroupCtx::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = ctx.random_scalar(&mut rng);
            let b = ctx.random_scalar(&mut rng);
            // oracle: exponent product via u128 arithmetic
            let ab = (a.value() as u128 * b.value() as u128 % MODULUS as u128) as u64;
            assert_eq!(ctx.pair(ctx.g_pow(a), ctx.g_pow(b)), ctx.gt().pow(Scalar::new(ab)));
        }
    }

    #[test]
    fn non_degenerate() {
        let ctx = GroupCtx::toy();
        assert!(!ctx.pair(ctx.g(), ctx.g()).is_identity());
    }

    #[test]
    fn hash_to_group_contract() {
        let ctx = GroupCtx::toy();
        assert_eq!(ctx.hash_to_group("A").unwrap(), ctx.hash_to_group("A").unwrap());
        let da = Scalar::from_be_bytes_reduced(&Sha256::digest(b"A"));
        let db = Scalar::from_be_bytes_reduced(&Sha256::digest(b"B"));
        assert_ne!(da, db);
        assert_eq!(ctx.hash_to_group("A").unwrap().dlog(), da);
        assert_ne!(ctx.hash_to_group("A").unwrap(), ctx.hash_to_group("B").unwrap());
        assert_eq!(ctx.hash_to_group(""), Err(GroupError::EmptyAttribute));
    }

    #[test]
    fn encoding_roundtrip_and_canonical() {
        let ctx = GroupCtx::toy();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = ctx.g_pow(ctx.random_scalar(&mut rng));
            assert_eq!(GroupElem::from_bytes(x.to_bytes()), Some(x));
            let y = ctx.random_gt(&mut rng);
            assert_eq!(GtElem::from_bytes(y.to_bytes()), Some(y));
        }
        assert!(GroupElem::from_bytes(MODULUS.to_be_bytes()).is_none());
        assert!(GtElem::from_bytes(u64::MAX.to_be_bytes()).is_none());
    }
}
