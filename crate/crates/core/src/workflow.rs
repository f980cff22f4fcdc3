// SPDX-License-Identifier: Apache-2.0

//! End-to-end operator workflows over a store directory. The command-line
//! front end is a thin adapter over these functions.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rand::RngCore;
use thiserror::Error;

use crate::audit::{honest_panel, run_multi_audit, run_trace, AuditError, AuditReport};
use crate::codec::{CodecError, Wire};
use crate::envelope::{access_decrypt, outsource_encrypt, EnvelopeError};
use crate::policy::is_valid_attribute;
use crate::scheme::{SchemeError, SecretKey, TraceOutcome};
use crate::store::{CloudService, StoreError};
use crate::time::{parse_date, EpochConfig, TimeError};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{0}")]
    Input(String),
}

impl From<SchemeError> for WorkflowError {
    fn from(e: SchemeError) -> Self {
        WorkflowError::Store(e.into())
    }
}

impl From<CodecError> for WorkflowError {
    fn from(e: CodecError) -> Self {
        WorkflowError::Store(e.into())
    }
}

impl From<TimeError> for WorkflowError {
    fn from(e: TimeError) -> Self {
        WorkflowError::Store(e.into())
    }
}

/// How a failure should be reported to an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    /// Access control said no.
    Denied,
    /// Bad input: undecodable files, bad policies, out-of-range parameters.
    Malformed,
    /// Store or environment failure.
    Internal,
}

fn scheme_class(e: &SchemeError) -> ErrorClass {
    match e {
        SchemeError::KeyExpired { .. } | SchemeError::IdentityRevoked | SchemeError::AttributeSetUnsatisfying => {
            ErrorClass::Denied
        }
        SchemeError::StaleRevocationList { .. } => ErrorClass::Internal,
        _ => ErrorClass::Malformed,
    }
}

impl WorkflowError {
    pub fn class(&self) -> ErrorClass {
        match self {
            WorkflowError::Envelope(EnvelopeError::Scheme(e)) => scheme_class(e),
            WorkflowError::Envelope(EnvelopeError::IntegrityFailure) => ErrorClass::Malformed,
            WorkflowError::Store(StoreError::Scheme(e)) => scheme_class(e),
            WorkflowError::Store(StoreError::Codec(_)) => ErrorClass::Malformed,
            WorkflowError::Store(_) => ErrorClass::Internal,
            WorkflowError::Audit(_) | WorkflowError::Input(_) => ErrorClass::Malformed,
        }
    }

    /// Short machine-readable name of an access denial.
    pub fn denial_reason(&self) -> Option<&'static str> {
        let e = match self {
            WorkflowError::Envelope(EnvelopeError::Scheme(e)) | WorkflowError::Store(StoreError::Scheme(e)) => e,
            _ => return None,
        };
        match e {
            SchemeError::KeyExpired { .. } => Some("KeyExpired"),
            SchemeError::IdentityRevoked => Some("IdentityRevoked"),
            SchemeError::AttributeSetUnsatisfying => Some("AttributeSetUnsatisfying"),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, WorkflowError>;

/// Accepts `YYYY-MM-DD` (midnight) or `YYYY-MM-DDTHH:MM:SS`.
pub fn parse_now(s: &str) -> Result<NaiveDateTime> {
    if let Ok(d) = parse_date(s) {
        return Ok(d.and_time(NaiveTime::MIN));
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .map_err(|_| WorkflowError::Input(format!("cannot parse time {s:?}; expected YYYY-MM-DD[THH:MM:SS]")))
}

/// Comma-separated attribute list.
pub fn parse_attrs(s: &str) -> Result<BTreeSet<String>> {
    let attrs: BTreeSet<String> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect();
    if attrs.is_empty() {
        return Err(WorkflowError::Input("attribute list is empty".into()));
    }
    if let Some(bad) = attrs.iter().find(|x| !is_valid_attribute(x)) {
        return Err(WorkflowError::Input(format!("invalid attribute {bad:?}")));
    }
    Ok(attrs)
}

pub fn decode_key(bytes: &[u8]) -> Result<SecretKey> {
    Ok(SecretKey::from_bytes(bytes)?)
}

pub fn setup<R: RngCore + ?Sized>(
    store: &Path,
    genesis: NaiveDate,
    lifetime_epochs: u64,
    rng: &mut R,
) -> Result<CloudService> {
    let cfg = EpochConfig::new(genesis, lifetime_epochs)?;
    Ok(CloudService::init(store, "toy", None, cfg, rng)?)
}

pub fn register<R: RngCore + ?Sized>(
    svc: &CloudService,
    id: &str,
    attrs: &BTreeSet<String>,
    validity: u64,
    now: NaiveDateTime,
    rng: &mut R,
) -> Result<SecretKey> {
    Ok(svc.register_user(id, attrs, validity, now, rng)?)
}

/// Encrypts a file under `policy` with the currently published revocation
/// list and stores it. Returns the object id.
pub fn outsource<R: RngCore + ?Sized>(
    svc: &CloudService,
    file: &[u8],
    policy: &str,
    filename_hint: &str,
    now: NaiveDateTime,
    rng: &mut R,
) -> Result<String> {
    let epoch = svc.pp().epoch_cfg().epoch_at(now)?;
    let env = outsource_encrypt(svc.pp(), file, policy, &svc.rl(), filename_hint, epoch, rng)?;
    Ok(svc.store_object(&env, rng)?)
}

pub fn access(svc: &CloudService, key: &SecretKey, oid: &str, now: NaiveDateTime) -> Result<Vec<u8>> {
    let env = svc.fetch_object(oid)?;
    Ok(access_decrypt(svc.pp(), key, &env, now.date(), now.time())?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceResult {
    /// Traced and revoked; carries the new revocation list version.
    Revoked {
        id: String,
        rl_version: u64,
    },
    NoTraceReq,
}

/// Traces a leaked credential and, on success, revokes its owner fleet-wide.
pub fn trace<R: RngCore + ?Sized>(
    svc: &CloudService,
    leaked: &[u8],
    now: NaiveDateTime,
    rng: &mut R,
) -> Result<TraceResult> {
    let bundle = svc.auditor_bundle()?;
    let snap = svc.snapshot();
    let auditor = &honest_panel(&bundle, snap.table(), 1)[0];
    let epoch = svc.pp().epoch_cfg().epoch_at(now)?;
    let mut rl = snap.rl().clone();
    match run_trace(auditor, leaked, &mut rl, epoch)? {
        TraceOutcome::NoTraceReq => Ok(TraceResult::NoTraceReq),
        TraceOutcome::Traced { id, .. } => {
            let rl_version = svc.revoke_and_update(&id, now, rng)?;
            Ok(TraceResult::Revoked { id, rl_version })
        }
    }
}

pub fn revoke<R: RngCore + ?Sized>(svc: &CloudService, id: &str, now: NaiveDateTime, rng: &mut R) -> Result<u64> {
    Ok(svc.revoke_and_update(id, now, rng)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditOutcome {
    pub report: AuditReport,
    /// Set when the panel found the accused guilty and the accused was revoked.
    pub revoked: Option<(String, u64)>,
}

/// Runs an `n`-auditor panel. A guilty majority revokes the accused; no
/// replacement key is issued (see [`reissue`]).
pub fn audit<R: RngCore + ?Sized>(
    svc: &CloudService,
    accused: &SecretKey,
    leaked: &SecretKey,
    auditors: usize,
    now: NaiveDateTime,
    rng: &mut R,
) -> Result<AuditOutcome> {
    let bundle = svc.auditor_bundle()?;
    let panel = honest_panel(&bundle, svc.snapshot().table(), auditors);
    let report = run_multi_audit(&panel, accused, leaked)?;
    let revoked = if report.majority() {
        let v = svc.revoke_and_update(&accused.id, now, rng)?;
        Some((accused.id.clone(), v))
    } else {
        None
    };
    Ok(AuditOutcome { report, revoked })
}

pub fn reissue<R: RngCore + ?Sized>(
    svc: &CloudService,
    id: &str,
    validity: u64,
    now: NaiveDateTime,
    rng: &mut R,
) -> Result<SecretKey> {
    Ok(svc.reissue(id, validity, now, rng)?)
}

/// Benchmarks on a throwaway parameter set (independent of any store).
pub fn bench<R: RngCore + ?Sized>(cfg: &crate::bench::BenchConfig, rng: &mut R) -> Result<String> {
    if cfg.step == 0 || cfg.max_n < cfg.step {
        return Err(WorkflowError::Input("need max-attrs >= step >= 1".into()));
    }
    if cfg.trials < crate::bench::MIN_TRIALS {
        return Err(WorkflowError::Input(format!("need at least {} trials", crate::bench::MIN_TRIALS)));
    }
    let genesis = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let (pp, msk, _) = crate::scheme::setup("toy", None, EpochConfig::new(genesis, 365)?, rng)?;
    let rows = crate::bench::run_bench(&pp, &msk, cfg, rng)?;
    Ok(crate::bench::to_csv(&rows))
}
