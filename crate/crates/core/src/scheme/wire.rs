// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::bilinear::GroupCtx;
use crate::codec::{tag, CodecError, Reader, Result, Wire, Writer};
use crate::lsss::{to_lsss, LsssMatrix};
use crate::policy::{is_valid_attribute, parse_policy};
use crate::time::{parse_date, EpochConfig, TimeTag};

use super::{
    AbeCiphertext, CiphertextRow, IdentityRecord, IdentityTable, MasterSecret, PublicParams, RevocationEntry,
    RevocationList, SecretKey, PARAMS_VERSION,
};

fn attr_set(r: &mut Reader<'_>) -> Result<BTreeSet<String>> {
    let items = r.sorted_strs()?;
    if let Some(bad) = items.iter().find(|x| !is_valid_attribute(x)) {
        return Err(CodecError::invariant(format!("invalid attribute name {bad:?}")));
    }
    Ok(items.into_iter().collect())
}

fn time_tag(r: &mut Reader<'_>) -> Result<TimeTag> {
    TimeTag::from_bits(&r.str()?).map_err(|_| CodecError::format("malformed time tag"))
}

fn nonempty(s: String, what: &str) -> Result<String> {
    if s.is_empty() {
        return Err(CodecError::invariant(format!("empty {what}")));
    }
    Ok(s)
}

impl Wire for PublicParams {
    const TYPE_TAG: u8 = tag::PUBLIC_PARAMS;

    fn write_body(&self, w: &mut Writer) {
        w.str(self.ctx.backend().name());
        w.u64(self.ctx.order());
        w.g(self.ctx.g());
        w.gt(self.ctx.gt());
        w.g(self.g_a);
        w.gt(self.egg_alpha);
        w.str(&self.epoch_cfg.genesis().format("%Y-%m-%d").to_string());
        w.u64(self.epoch_cfg.lifetime());
        match &self.universe {
            None => w.u8(0),
            Some(u) => {
                w.u8(1);
                w.strs(u.iter());
            }
        }
        w.u8(self.version);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let backend = r.str()?;
        let ctx = GroupCtx::setup(&backend).map_err(|e| CodecError::format(e.to_string()))?;
        if r.u64()? != ctx.order() || r.g()? != ctx.g() || r.gt()? != ctx.gt() {
            return Err(CodecError::invariant("group description does not match backend"));
        }
        let g_a = r.g()?;
        let egg_alpha = r.gt()?;
        if g_a.is_identity() || egg_alpha.is_identity() {
            return Err(CodecError::invariant("degenerate public parameters"));
        }
        let genesis_text = r.str()?;
        let genesis = parse_date(&genesis_text).map_err(|_| CodecError::format("bad genesis date"))?;
        if genesis.format("%Y-%m-%d").to_string() != genesis_text {
            return Err(CodecError::format("non-canonical genesis date"));
        }
        let epoch_cfg = EpochConfig::new(genesis, r.u64()?).map_err(|e| CodecError::invariant(e.to_string()))?;
        let universe = match r.u8()? {
            0 => None,
            1 => Some(attr_set(r)?),
            _ => return Err(CodecError::format("bad universe flag")),
        };
        let version = r.u8()?;
        if version != PARAMS_VERSION {
            return Err(CodecError::format(format!("unsupported params version {version}")));
        }
        Ok(PublicParams { ctx, g_a, egg_alpha, epoch_cfg, universe, version })
    }
}

impl Wire for MasterSecret {
    const TYPE_TAG: u8 = tag::MASTER_SECRET;

    fn write_body(&self, w: &mut Writer) {
        w.scalar(self.alpha);
        w.scalar(self.a);
        w.raw(&self.k_trace);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let alpha = r.scalar()?;
        let a = r.scalar()?;
        if alpha.is_zero() || a.is_zero() {
            return Err(CodecError::invariant("zero master exponent"));
        }
        Ok(MasterSecret { alpha, a, k_trace: r.array()? })
    }
}

impl Wire for SecretKey {
    const TYPE_TAG: u8 = tag::SECRET_KEY;

    fn write_body(&self, w: &mut Writer) {
        w.str(&self.id);
        w.strs(self.attrs.iter());
        w.str(&self.ten.bits());
        w.scalar(self.tag);
        w.g(self.k);
        w.g(self.l);
        w.len(self.kx.len());
        for (x, e) in &self.kx {
            w.str(x);
            w.g(*e);
        }
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let id = nonempty(r.str()?, "identity")?;
        let attrs = attr_set(r)?;
        if attrs.is_empty() {
            return Err(CodecError::invariant("empty attribute set"));
        }
        let ten = time_tag(r)?;
        let tag = r.scalar()?;
        if tag.is_zero() {
            return Err(CodecError::invariant("zero identity tag"));
        }
        let k = r.g()?;
        let l = r.g()?;
        let entries = r.list(12, |r| Ok((r.str()?, r.g()?)))?;
        if entries.windows(2).any(|w| w[0].0.as_bytes() >= w[1].0.as_bytes()) {
            return Err(CodecError::format("key components not strictly ascending"));
        }
        let kx: BTreeMap<String, _> = entries.into_iter().collect();
        if !kx.keys().eq(attrs.iter()) {
            return Err(CodecError::invariant("attribute components do not match attribute set"));
        }
        Ok(SecretKey { id, attrs, ten, tag, k, l, kx })
    }
}

impl Wire for RevocationList {
    const TYPE_TAG: u8 = tag::REVOCATION_LIST;

    fn write_body(&self, w: &mut Writer) {
        w.u64(self.version());
        w.list(self.entries(), |w, e| {
            w.scalar(e.tag);
            w.str(&e.id);
            w.u64(e.epoch);
        });
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let version = r.u64()?;
        let entries = r.list(20, |r| {
            let tag = r.scalar()?;
            let id = nonempty(r.str()?, "identity")?;
            Ok(RevocationEntry { tag, id, epoch: r.u64()? })
        })?;
        // each mutation adds at least one entry
        if version > entries.len() as u64 || (version == 0) != entries.is_empty() {
            return Err(CodecError::invariant("revocation version inconsistent with entries"));
        }
        let mut seen = BTreeSet::new();
        if !entries.iter().all(|e| !e.tag.is_zero() && seen.insert(e.tag)) {
            return Err(CodecError::invariant("duplicate or zero revoked tag"));
        }
        Ok(RevocationList::from_parts(version, entries))
    }
}

impl Wire for IdentityTable {
    const TYPE_TAG: u8 = tag::IDENTITY_TABLE;

    fn write_body(&self, w: &mut Writer) {
        let records: Vec<_> = self.iter().collect();
        w.list(&records, |w, (tag, rec)| {
            w.scalar(**tag);
            w.str(&rec.id);
            w.strs(rec.attrs.iter());
            w.str(&rec.ten.bits());
            w.u64(rec.issue_epoch);
        });
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let records = r.list(32, |r| {
            let tag = r.scalar()?;
            let id = nonempty(r.str()?, "identity")?;
            let attrs = attr_set(r)?;
            let ten = time_tag(r)?;
            Ok((tag, IdentityRecord { id, attrs, ten, issue_epoch: r.u64()? }))
        })?;
        if records.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(CodecError::format("table not strictly ascending by tag"));
        }
        let mut table = IdentityTable::new();
        for (tag, rec) in records {
            if tag.is_zero() || rec.attrs.is_empty() {
                return Err(CodecError::invariant("malformed identity record"));
            }
            table.insert(tag, rec);
        }
        Ok(table)
    }
}

impl Wire for AbeCiphertext {
    const TYPE_TAG: u8 = tag::ABE_CIPHERTEXT;

    fn write_body(&self, w: &mut Writer) {
        w.str(&self.policy_text);
        w.list(self.lsss.rows(), |w, row| w.list(row, |w, s| w.scalar(*s)));
        w.strs(self.lsss.labels().iter());
        w.len(self.lsss.width());
        w.gt(self.c);
        w.g(self.c1);
        w.g(self.c2);
        w.list(&self.rows, |w, row| {
            w.g(row.c);
            w.g(row.d);
        });
        self.rl_snapshot.write_body(w);
        w.raw(&self.uuid);
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self> {
        let policy_text = r.str()?;
        let rows = r.list(4, |r| r.list(8, |r| r.scalar()))?;
        let rho = r.list(4, |r| r.str())?;
        let width = r.u32()? as usize;
        let lsss = LsssMatrix::from_parts(rows, rho)
            .filter(|m| m.width() == width)
            .ok_or_else(|| CodecError::format("malformed share matrix"))?;
        let ast = parse_policy(&policy_text).map_err(|e| CodecError::invariant(e.to_string()))?;
        if to_lsss(&ast) != lsss {
            return Err(CodecError::invariant("share matrix does not match policy text"));
        }
        let c = r.gt()?;
        let c1 = r.g()?;
        let c2 = r.g()?;
        let ct_rows = r.list(16, |r| Ok(CiphertextRow { c: r.g()?, d: r.g()? }))?;
        if ct_rows.len() != lsss.len() {
            return Err(CodecError::invariant("row components do not match share matrix"));
        }
        let rl_snapshot = RevocationList::read_body(r)?;
        let uuid = r.array()?;
        Ok(AbeCiphertext { policy_text, lsss, c, c1, c2, rows: ct_rows, rl_snapshot, uuid })
    }
}
