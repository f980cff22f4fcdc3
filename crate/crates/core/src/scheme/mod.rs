// SPDX-License-Identifier: Apache-2.0

//! Accountable, time-limited, revocable CP-ABE.
//!
//! The construction is an LSSS ciphertext-policy scheme with an identity tag
//! folded into the key exponent:
//!
//! ```text
//! Pp  = (g, g^a, e(g,g)^alpha, epochs)     msk = (alpha, a, k_trace)
//! sk  = (c, K = g^((alpha + a t) / (a + c)), L = g^t, K_x = H(x)^t)
//! ct  = (C = m e(g,g)^(alpha s), C1 = g^s, C2 = g^(a s),
//!        C_i = g^(a lambda_i) H(rho(i))^(-r_i), D_i = g^(r_i), RL)
//! ```
//!
//! `c = PRF(k_trace, id || 0x1f || ten)` ties each key to one identity and one
//! expiry. Decryption pairs `C1^c C2` with `K`, which only works for the `c`
//! the key was issued under, so `c` cannot be swapped without `msk`.

mod revocation;
mod trace;
mod wire;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{NaiveDate, NaiveTime};
use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::bilinear::{GroupCtx, GroupElem, GroupError, GtElem};
use crate::field::Scalar;
use crate::lsss::{to_lsss, LsssMatrix};
use crate::policy::{is_valid_attribute, parse_policy, ParseError, PolicyAst};
use crate::time::{EpochConfig, TimeError, TimeTag};

pub use revocation::{IdentityRecord, IdentityTable, RevocationEntry, RevocationList};
pub use trace::{audit_pair, keyform_check, trace, TraceOutcome};

pub const PARAMS_VERSION: u8 = 1;

/// Separator between identity and time bits in the tag PRF input.
const TAG_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("key expired at epoch {expiry}, current epoch is {current}")]
    KeyExpired { expiry: u64, current: u64 },
    #[error("identity has been revoked")]
    IdentityRevoked,
    #[error("attribute set does not satisfy the ciphertext policy")]
    AttributeSetUnsatisfying,
    #[error("attribute set is empty")]
    EmptyAttributeSet,
    #[error("invalid attribute name `{0}`")]
    InvalidAttribute(String),
    #[error("attribute `{0}` is not in the declared universe")]
    AttributeOutsideUniverse(String),
    #[error("identity must be non-empty")]
    EmptyIdentity,
    #[error("could not find a fresh identity tag")]
    DuplicateTag,
    #[error("key is structurally malformed")]
    MalformedKey,
    #[error("ciphertext is structurally malformed")]
    MalformedCiphertext,
    #[error("revocation list version {offered} is older than snapshot version {current}")]
    StaleRevocationList { current: u64, offered: u64 },
    #[error("well-formed key whose tag is not in the identity table")]
    UnknownWellFormedKey,
    #[error(transparent)]
    Policy(#[from] ParseError),
    #[error(transparent)]
    Time(TimeError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl From<TimeError> for SchemeError {
    fn from(e: TimeError) -> Self {
        match e {
            TimeError::KeyExpired { expiry, current } => SchemeError::KeyExpired { expiry, current },
            other => SchemeError::Time(other),
        }
    }
}

pub type Result<T, E = SchemeError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub(crate) ctx: GroupCtx,
    pub(crate) g_a: GroupElem,
    pub(crate) egg_alpha: GtElem,
    pub(crate) epoch_cfg: EpochConfig,
    pub(crate) universe: Option<BTreeSet<String>>,
    pub(crate) version: u8,
}

impl PublicParams {
    pub fn ctx(&self) -> &GroupCtx {
        &self.ctx
    }

    pub fn g_a(&self) -> GroupElem {
        self.g_a
    }

    pub fn egg_alpha(&self) -> GtElem {
        self.egg_alpha
    }

    pub fn epoch_cfg(&self) -> &EpochConfig {
        &self.epoch_cfg
    }

    pub fn universe(&self) -> Option<&BTreeSet<String>> {
        self.universe.as_ref()
    }

    pub fn version(&self) -> u8 {
        self.version
    }

    fn check_attribute(&self, name: &str) -> Result<()> {
        if !is_valid_attribute(name) {
            return Err(SchemeError::InvalidAttribute(name.to_string()));
        }
        match &self.universe {
            Some(u) if !u.contains(name) => Err(SchemeError::AttributeOutsideUniverse(name.to_string())),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct MasterSecret {
    pub(crate) alpha: Scalar,
    pub(crate) a: Scalar,
    pub(crate) k_trace: [u8; 32],
}

impl MasterSecret {
    pub fn alpha(&self) -> Scalar {
        self.alpha
    }

    pub fn a(&self) -> Scalar {
        self.a
    }
}

impl fmt::Debug for MasterSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterSecret { .. }")
    }
}

/// A user credential `sk_{id,S,+ten}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub id: String,
    pub attrs: BTreeSet<String>,
    pub ten: TimeTag,
    /// Identity tag `c`.
    pub tag: Scalar,
    pub k: GroupElem,
    pub l: GroupElem,
    pub kx: BTreeMap<String, GroupElem>,
}

impl SecretKey {
    /// Group elements carried by the key: `K`, `L` and one per attribute.
    pub fn group_element_count(&self) -> usize {
        2 + self.kx.len()
    }
}

/// `sk_{id,S,-ten}`: a key whose expiry has been checked and stripped.
#[derive(Clone, Copy, Debug)]
pub struct TimeStrippedKey<'a> {
    inner: &'a SecretKey,
}

impl<'a> TimeStrippedKey<'a> {
    pub fn id(&self) -> &'a str {
        &self.inner.id
    }

    pub fn attrs(&self) -> &'a BTreeSet<String> {
        &self.inner.attrs
    }

    pub fn tag(&self) -> Scalar {
        self.inner.tag
    }

    pub fn k(&self) -> GroupElem {
        self.inner.k
    }

    pub fn l(&self) -> GroupElem {
        self.inner.l
    }

    pub fn kx(&self, attr: &str) -> Option<GroupElem> {
        self.inner.kx.get(attr).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CiphertextRow {
    pub c: GroupElem,
    pub d: GroupElem,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbeCiphertext {
    pub policy_text: String,
    pub lsss: LsssMatrix,
    pub c: GtElem,
    pub c1: GroupElem,
    pub c2: GroupElem,
    pub rows: Vec<CiphertextRow>,
    pub rl_snapshot: RevocationList,
    pub uuid: [u8; 16],
}

impl AbeCiphertext {
    /// Elements across both groups: `C`, `C1`, `C2` and two per LSSS row.
    pub fn group_element_count(&self) -> usize {
        3 + 2 * self.rows.len()
    }

    pub fn uuid_hex(&self) -> String {
        hex::encode(self.uuid)
    }
}

/// Runs Setup. The caller starts with an empty [`IdentityTable`].
pub fn setup<R: RngCore + ?Sized>(
    selector: &str,
    universe: Option<BTreeSet<String>>,
    epoch_cfg: EpochConfig,
    rng: &mut R,
) -> Result<(PublicParams, MasterSecret, RevocationList)> {
    let ctx = GroupCtx::setup(selector)?;
    if let Some(u) = &universe {
        if let Some(bad) = u.iter().find(|x| !is_valid_attribute(x)) {
            return Err(SchemeError::InvalidAttribute(bad.clone()));
        }
    }
    let alpha = Scalar::random_nonzero(rng);
    let a = Scalar::random_nonzero(rng);
    let mut k_trace = [0u8; 32];
    rng.fill_bytes(&mut k_trace);

    let g_a = ctx.g_pow(a);
    let egg_alpha = ctx.gt_pow(alpha);
    assert_eq!(ctx.pair(ctx.g(), g_a), ctx.gt().pow(a), "backend inconsistent with msk");

    let pp = PublicParams { ctx, g_a, egg_alpha, epoch_cfg, universe, version: PARAMS_VERSION };
    Ok((pp, MasterSecret { alpha, a, k_trace }, RevocationList::new()))
}

/// `PRF(k_trace, id || 0x1f || ten.bits [|| counter])` reduced into `Z_p`.
pub fn identity_tag(msk: &MasterSecret, id: &str, ten: &TimeTag, counter: Option<u8>) -> Scalar {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(&msk.k_trace).expect("any key length");
    mac.update(id.as_bytes());
    mac.update(&[TAG_SEPARATOR]);
    mac.update(ten.bits().as_bytes());
    if let Some(c) = counter {
        mac.update(&[c]);
    }
    Scalar::from_be_bytes_reduced(&mac.finalize().into_bytes())
}

/// Issues `sk_{id,S,+ten}` and records its tag in `table`.
///
/// The tag is resampled (counter byte appended) while it is zero, makes
/// `a + c` vanish, or is already present in the table.
#[allow(clippy::too_many_arguments)]
pub fn keygen<R: RngCore + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    id: &str,
    attrs: &BTreeSet<String>,
    ten: TimeTag,
    table: &mut IdentityTable,
    issue_epoch: u64,
    rng: &mut R,
) -> Result<SecretKey> {
    if id.is_empty() {
        return Err(SchemeError::EmptyIdentity);
    }
    if attrs.is_empty() {
        return Err(SchemeError::EmptyAttributeSet);
    }
    for x in attrs {
        pp.check_attribute(x)?;
    }
    pp.epoch_cfg.validate_tag(&ten)?;

    let tag = std::iter::once(None)
        .chain((1..=255u8).map(Some))
        .map(|ctr| identity_tag(msk, id, &ten, ctr))
        .find(|c| !c.is_zero() && !(msk.a + *c).is_zero() && !table.contains(*c))
        .ok_or(SchemeError::DuplicateTag)?;

    let ctx = &pp.ctx;
    let t = ctx.random_scalar(rng);
    let exponent = (msk.alpha + msk.a * t) * (msk.a + tag).inverse().expect("a + c != 0");
    let k = ctx.g_pow(exponent);
    let l = ctx.g_pow(t);
    let mut kx = BTreeMap::new();
    for x in attrs {
        kx.insert(x.clone(), ctx.hash_to_group(x)?.pow(t));
    }

    table.insert(tag, IdentityRecord { id: id.to_string(), attrs: attrs.clone(), ten, issue_epoch });
    Ok(SecretKey { id: id.to_string(), attrs: attrs.clone(), ten, tag, k, l, kx })
}

/// Encrypts `m` under a policy given as text; the text is kept verbatim.
pub fn encrypt_text<R: RngCore + ?Sized>(
    pp: &PublicParams,
    m: GtElem,
    policy: &str,
    rl: &RevocationList,
    rng: &mut R,
) -> Result<AbeCiphertext> {
    let ast = parse_policy(policy)?;
    encrypt_inner(pp, m, policy.to_string(), &ast, rl, rng)
}

/// Encrypts `m` under a policy tree; the stored text is its parenthesized rendering.
pub fn encrypt<R: RngCore + ?Sized>(
    pp: &PublicParams,
    m: GtElem,
    policy: &PolicyAst,
    rl: &RevocationList,
    rng: &mut R,
) -> Result<AbeCiphertext> {
    encrypt_inner(pp, m, policy.to_string(), policy, rl, rng)
}

fn encrypt_inner<R: RngCore + ?Sized>(
    pp: &PublicParams,
    m: GtElem,
    policy_text: String,
    ast: &PolicyAst,
    rl: &RevocationList,
    rng: &mut R,
) -> Result<AbeCiphertext> {
    for x in ast.attributes() {
        pp.check_attribute(x)?;
    }
    let lsss = to_lsss(ast);
    let ctx = &pp.ctx;

    let v: Vec<Scalar> = (0..lsss.width()).map(|_| ctx.random_scalar(rng)).collect();
    let s = v[0];
    let shares = lsss.share(&v);
    let mut rows = Vec::with_capacity(lsss.len());
    for (i, lambda) in shares.into_iter().enumerate() {
        let r = ctx.random_scalar(rng);
        let h = ctx.hash_to_group(lsss.rho(i))?;
        rows.push(CiphertextRow { c: pp.g_a.pow(lambda).div(h.pow(r)), d: ctx.g_pow(r) });
    }
    let mut uuid = [0u8; 16];
    rng.fill_bytes(&mut uuid);

    Ok(AbeCiphertext {
        policy_text,
        c: m.op(pp.egg_alpha.pow(s)),
        c1: ctx.g_pow(s),
        c2: pp.g_a.pow(s),
        lsss,
        rows,
        rl_snapshot: rl.clone(),
        uuid,
    })
}

/// Checks the key's expiry against the supplied date and time and strips it.
pub fn time_decode<'a>(
    pp: &PublicParams,
    sk: &'a SecretKey,
    date: NaiveDate,
    time: NaiveTime,
) -> Result<TimeStrippedKey<'a>> {
    pp.epoch_cfg.check_unexpired(&sk.ten, date, time)?;
    Ok(TimeStrippedKey { inner: sk })
}

/// Decrypts, failing with (in this order) `KeyExpired`, `IdentityRevoked`
/// or `AttributeSetUnsatisfying`.
pub fn decrypt(
    pp: &PublicParams,
    sk: &SecretKey,
    ct: &AbeCiphertext,
    date: NaiveDate,
    time: NaiveTime,
) -> Result<GtElem> {
    let key = time_decode(pp, sk, date, time)?;
    if ct.rl_snapshot.contains(key.tag()) {
        return Err(SchemeError::IdentityRevoked);
    }
    let omega = ct.lsss.reconstruct_coeffs(key.attrs()).map_err(|_| SchemeError::AttributeSetUnsatisfying)?;
    if ct.rows.len() != ct.lsss.len() {
        return Err(SchemeError::MalformedCiphertext);
    }

    let ctx = &pp.ctx;
    // e(C1^c C2, K) = e(g,g)^(s (alpha + a t))
    let full = ctx.pair(ct.c1.pow(key.tag()).op(ct.c2), key.k());
    // prod (e(C_i, L) e(D_i, K_rho(i)))^w_i = e(g,g)^(a t s)
    let mut blind = GtElem::IDENTITY;
    for (&i, &w) in &omega {
        let kx = key.kx(ct.lsss.rho(i)).ok_or(SchemeError::MalformedKey)?;
        let row = &ct.rows[i];
        blind = blind.op(ctx.pair(row.c, key.l()).op(ctx.pair(row.d, kx)).pow(w));
    }
    let b = full.div(blind);
    Ok(ct.c.div(b))
}

/// Public re-randomization under a newer revocation list. Needs no secrets.
pub fn ct_update<R: RngCore + ?Sized>(
    pp: &PublicParams,
    ct: &AbeCiphertext,
    new_rl: &RevocationList,
    rng: &mut R,
) -> Result<AbeCiphertext> {
    if new_rl.version() < ct.rl_snapshot.version() {
        return Err(SchemeError::StaleRevocationList { current: ct.rl_snapshot.version(), offered: new_rl.version() });
    }
    let ctx = &pp.ctx;
    let v: Vec<Scalar> = (0..ct.lsss.width()).map(|_| ctx.random_scalar(rng)).collect();
    let s = v[0];
    let shares = ct.lsss.share(&v);
    let mut rows = Vec::with_capacity(ct.rows.len());
    for (i, (row, lambda)) in ct.rows.iter().zip(shares).enumerate() {
        let r = ctx.random_scalar(rng);
        let h = ctx.hash_to_group(ct.lsss.rho(i))?;
        rows.push(CiphertextRow { c: row.c.op(pp.g_a.pow(lambda)).div(h.pow(r)), d: row.d.op(ctx.g_pow(r)) });
    }
    Ok(AbeCiphertext {
        policy_text: ct.policy_text.clone(),
        lsss: ct.lsss.clone(),
        c: ct.c.op(pp.egg_alpha.pow(s)),
        c1: ct.c1.op(ctx.g_pow(s)),
        c2: ct.c2.op(pp.g_a.pow(s)),
        rows,
        rl_snapshot: new_rl.clone(),
        uuid: ct.uuid,
    })
}
