// SPDX-License-Identifier: Apache-2.0

//! File-level hybrid encryption.
//!
//! A fresh random `GT` element is encapsulated under the access policy; the
//! session key is `HKDF-SHA256(encode(m) || ct_uuid, info)` and the file body
//! is sealed with AES-256-GCM using `ct_uuid || nonce` as associated data.
//! The revocation snapshot is deliberately outside the associated data so a
//! ciphertext update leaves the sealed body valid.

use aes_gcm::aead::{Aead, Payload};
use aes_gcm::{Aes256Gcm, KeyInit, Nonce};
use chrono::{NaiveDate, NaiveTime};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::bilinear::GtElem;
use crate::codec::{tag, CodecError, Reader, Wire, Writer};
use crate::scheme::{self, AbeCiphertext, PublicParams, RevocationList, SchemeError, SecretKey};

pub const KDF_INFO: &str = "cloudplus/v1/session";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("file body failed authentication")]
    IntegrityFailure,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvelopeObject {
    pub abe_ct: AbeCiphertext,
    pub kdf_info: String,
    pub nonce: [u8; 12],
    pub aead_blob: Vec<u8>,
    pub filename_hint: String,
    pub created_epoch: u64,
}

impl EnvelopeObject {
    /// Content address: hex of the ciphertext uuid.
    pub fn object_id(&self) -> String {
        self.abe_ct.uuid_hex()
    }
}

fn session_key(m: GtElem, uuid: &[u8; 16], info: &str) -> [u8; 32] {
    let mut ikm = Vec::with_capacity(24);
    ikm.extend_from_slice(&m.to_bytes());
    ikm.extend_from_slice(uuid);
    let mut okm = [0u8; 32];
    Hkdf::<Sha256>::new(None, &ikm)
        .expand(info.as_bytes(), &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    okm
}

fn associated_data(uuid: &[u8; 16], nonce: &[u8; 12]) -> [u8; 28] {
    let mut ad = [0u8; 28];
    ad[..16].copy_from_slice(uuid);
    ad[16..].copy_from_slice(nonce);
    ad
}

pub fn outsource_encrypt<R: RngCore + ?Sized>(
    pp: &PublicParams,
    file: &[u8],
    policy: &str,
    rl: &RevocationList,
    filename_hint: &str,
    created_epoch: u64,
    rng: &mut R,
) -> Result<EnvelopeObject, EnvelopeError> {
    let m = pp.ctx().random_gt(rng);
    let abe_ct = scheme::encrypt_text(pp, m, policy, rl, rng)?;
    let key = session_key(m, &abe_ct.uuid, KDF_INFO);
    let mut nonce = [0u8; 12];
    rng.fill_bytes(&mut nonce);
    let cipher = Aes256Gcm::new(&key.into());
    let aad = associated_data(&abe_ct.uuid, &nonce);
    let aead_blob = cipher
        .encrypt(Nonce::from_slice(&nonce), Payload { msg: file, aad: &aad })
        .expect("AES-GCM encryption does not fail for in-memory buffers");
    Ok(EnvelopeObject {
        abe_ct,
        kdf_info: KDF_INFO.to_string(),
        nonce,
        aead_blob,
        filename_hint: filename_hint.to_string(),
        created_epoch,
    })
}

/// Recovers the file. Access-control denials are returned unchanged; the
/// symmetric layer is only touched once the ABE layer has succeeded.
pub fn access_decrypt(
    pp: &PublicParams,
    sk: &SecretKey,
    env: &EnvelopeObject,
    date: NaiveDate,
    time: NaiveTime,
) -> Result<Vec<u8>, EnvelopeError> {
    let m = scheme::decrypt(pp, sk, &env.abe_ct, date, time)?;
    let key = session_key(m, &env.abe_ct.uuid, &env.kdf_info);
    let cipher = Aes256Gcm::new(&key.into());
    let aad = associated_data(&env.abe_ct.uuid, &env.nonce);
    cipher
        .decrypt(Nonce::from_slice(&env.nonce), Payload { msg: &env.aead_blob, aad: &aad })
        .map_err(|_| EnvelopeError::IntegrityFailure)
}

/// Applies [`scheme::ct_update`] to the encapsulation; the sealed body is untouched.
pub fn update_envelope<R: RngCore + ?Sized>(
    pp: &PublicParams,
    env: &EnvelopeObject,
    new_rl: &RevocationList,
    rng: &mut R,
) -> Result<EnvelopeObject, SchemeError> {
    Ok(EnvelopeObject { abe_ct: scheme::ct_update(pp, &env.abe_ct, new_rl, rng)?, ..env.clone() })
}

impl Wire for EnvelopeObject {
    const TYPE_TAG: u8 = tag::ENVELOPE;

    fn write_body(&self, w: &mut Writer) {
        self.abe_ct.write_body(w);
        w.str(&self.kdf_info);
        w.raw(&self.nonce);
        w.bytes(&self.aead_blob);
        w.str(&self.filename_hint);
        w.u64(self.created_epoch);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let abe_ct = AbeCiphertext::read_body(r)?;
        let kdf_info = r.str()?;
        if kdf_info != KDF_INFO {
            return Err(CodecError::invariant("unexpected KDF context string"));
        }
        let nonce = r.array()?;
        let aead_blob = r.bytes()?.to_vec();
        if aead_blob.len() < 16 {
            return Err(CodecError::invariant("sealed body shorter than its tag"));
        }
        Ok(EnvelopeObject { abe_ct, kdf_info, nonce, aead_blob, filename_hint: r.str()?, created_epoch: r.u64()? })
    }
}
