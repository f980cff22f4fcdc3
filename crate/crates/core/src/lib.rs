// SPDX-License-Identifier: Apache-2.0

//! Traceable, revocable ciphertext-policy attribute-based encryption with
//! time-bounded keys, a hybrid file envelope, a filesystem cloud store and a
//! multi-auditor panel.
//!
//! The only bilinear backend is an insecure exponent-representation group,
//! suitable for checking the algebra exactly and nothing else.

pub mod audit;
pub mod bench;
pub mod bilinear;
pub mod codec;
pub mod envelope;
pub mod field;
pub mod lsss;
pub mod policy;
pub mod scheme;
pub mod store;
pub mod time;
pub mod workflow;
