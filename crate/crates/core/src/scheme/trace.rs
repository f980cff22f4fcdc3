// SPDX-License-Identifier: Apache-2.0

use crate::policy::is_valid_attribute;

use super::{identity_tag, IdentityTable, MasterSecret, PublicParams, Result, RevocationList, SchemeError, SecretKey};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceOutcome {
    /// The key belongs to `id`; its tag is now on the revocation list.
    Traced { id: String, tag: crate::field::Scalar },
    /// The key is not well formed and is not worth tracing.
    NoTraceReq,
}

/// Key sanity check using public parameters only.
///
/// Accepts iff the key is structurally complete and
/// `e(K, g^a g^c) = e(g,g)^alpha e(g^a, L)` and
/// `e(K_x, g) = e(H(x), L)` for every attribute.
pub fn keyform_check(pp: &PublicParams, sk: &SecretKey) -> bool {
    let structural = !sk.id.is_empty()
        && !sk.tag.is_zero()
        && !sk.attrs.is_empty()
        && sk.attrs.iter().all(|x| is_valid_attribute(x))
        && sk.kx.len() == sk.attrs.len()
        && sk.kx.keys().eq(sk.attrs.iter())
        && pp.epoch_cfg.validate_tag(&sk.ten).is_ok();
    if !structural {
        return false;
    }

    let ctx = &pp.ctx;
    let lhs = ctx.pair(sk.k, pp.g_a.op(ctx.g_pow(sk.tag)));
    let rhs = pp.egg_alpha.op(ctx.pair(pp.g_a, sk.l));
    if lhs != rhs {
        return false;
    }
    sk.kx.iter().all(|(x, &kx)| match ctx.hash_to_group(x) {
        Ok(h) => ctx.pair(kx, ctx.g()) == ctx.pair(h, sk.l),
        Err(_) => false,
    })
}

/// Finds who a leaked key was issued to and revokes that tag.
///
/// A well-formed key whose tag is unknown (or whose table record does not
/// reproduce the tag under `msk`) is reported as `UnknownWellFormedKey`.
pub fn trace(
    pp: &PublicParams,
    msk: &MasterSecret,
    sk: &SecretKey,
    table: &IdentityTable,
    rl: &mut RevocationList,
    epoch: u64,
) -> Result<TraceOutcome> {
    if !keyform_check(pp, sk) {
        return Ok(TraceOutcome::NoTraceReq);
    }
    let record = table.get(sk.tag).ok_or(SchemeError::UnknownWellFormedKey)?;
    let reproduces = std::iter::once(None)
        .chain((1..=255u8).map(Some))
        .any(|ctr| identity_tag(msk, &record.id, &record.ten, ctr) == sk.tag);
    if !reproduces {
        return Err(SchemeError::UnknownWellFormedKey);
    }
    rl.revoke_one(sk.tag, &record.id, epoch);
    Ok(TraceOutcome::Traced { id: record.id.clone(), tag: sk.tag })
}

/// `true` (guilty) iff the leaked key is well formed and carries the
/// accused's identity tag.
pub fn audit_pair(pp: &PublicParams, accused: &SecretKey, leaked: &SecretKey) -> bool {
    keyform_check(pp, leaked) && leaked.tag == accused.tag
}
