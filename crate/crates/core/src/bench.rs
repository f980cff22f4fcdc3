// SPDX-License-Identifier: Apache-2.0

//! KeyGen / Encrypt / Decrypt timing against a plain CP-ABE baseline.
//!
//! The baseline is the same LSSS construction with the traceability and
//! revocation machinery removed: no identity tag, no `C2`, no time tag, no
//! revocation snapshot. Keys are `K = g^(alpha + a t)`, `L = g^t`,
//! `K_x = H(x)^t`; decryption pairs `C1` with `K` directly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use chrono::NaiveTime;
use rand::RngCore;

use crate::bilinear::{GroupElem, GtElem};
use crate::field::Scalar;
use crate::lsss::{to_lsss, LsssMatrix};
use crate::policy::PolicyAst;
use crate::scheme::{
    self, CiphertextRow, IdentityTable, MasterSecret, PublicParams, RevocationList, SchemeError, SecretKey,
};

pub const CSV_HEADER: &str = "scheme,n_attrs,phase,median_ns,trials";
pub const MIN_TRIALS: usize = 10;

pub mod plain {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct PlainKey {
        pub attrs: BTreeSet<String>,
        pub k: GroupElem,
        pub l: GroupElem,
        pub kx: BTreeMap<String, GroupElem>,
    }

    impl PlainKey {
        pub fn group_element_count(&self) -> usize {
            2 + self.kx.len()
        }
    }

    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct PlainCiphertext {
        pub lsss: LsssMatrix,
        pub c: GtElem,
        pub c1: GroupElem,
        pub rows: Vec<CiphertextRow>,
    }

    impl PlainCiphertext {
        /// `C`, `C1` and two elements per row.
        pub fn group_element_count(&self) -> usize {
            2 + 2 * self.rows.len()
        }
    }

    pub fn keygen<R: RngCore + ?Sized>(
        pp: &PublicParams,
        msk: &MasterSecret,
        attrs: &BTreeSet<String>,
        rng: &mut R,
    ) -> Result<PlainKey, SchemeError> {
        if attrs.is_empty() {
            return Err(SchemeError::EmptyAttributeSet);
        }
        let ctx = pp.ctx();
        let t = ctx.random_scalar(rng);
        let mut kx = BTreeMap::new();
        for x in attrs {
            kx.insert(x.clone(), ctx.hash_to_group(x)?.pow(t));
        }
        Ok(PlainKey { attrs: attrs.clone(), k: ctx.g_pow(msk.alpha() + msk.a() * t), l: ctx.g_pow(t), kx })
    }

    pub fn encrypt<R: RngCore + ?Sized>(
        pp: &PublicParams,
        m: GtElem,
        policy: &PolicyAst,
        rng: &mut R,
    ) -> Result<PlainCiphertext, SchemeError> {
        let ctx = pp.ctx();
        let lsss = to_lsss(policy);
        let v: Vec<Scalar> = (0..lsss.width()).map(|_| ctx.random_scalar(rng)).collect();
        let s = v[0];
        let mut rows = Vec::with_capacity(lsss.len());
        for (i, lambda) in lsss.share(&v).into_iter().enumerate() {
            let r = ctx.random_scalar(rng);
            let h = ctx.hash_to_group(lsss.rho(i))?;
            rows.push(CiphertextRow { c: pp.g_a().pow(lambda).div(h.pow(r)), d: ctx.g_pow(r) });
        }
        Ok(PlainCiphertext { c: m.op(pp.egg_alpha().pow(s)), c1: ctx.g_pow(s), lsss, rows })
    }

    pub fn decrypt(pp: &PublicParams, sk: &PlainKey, ct: &PlainCiphertext) -> Result<GtElem, SchemeError> {
        let omega = ct.lsss.reconstruct_coeffs(&sk.attrs).map_err(|_| SchemeError::AttributeSetUnsatisfying)?;
        let ctx = pp.ctx();
        let full = ctx.pair(ct.c1, sk.k);
        let mut blind = GtElem::IDENTITY;
        for (&i, &w) in &omega {
            let kx = sk.kx.get(ct.lsss.rho(i)).ok_or(SchemeError::MalformedKey)?;
            let row = &ct.rows[i];
            blind = blind.op(ctx.pair(row.c, sk.l).op(ctx.pair(row.d, *kx)).pow(w));
        }
        Ok(ct.c.div(full.div(blind)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeKind {
    Atr,
    Plain,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Atr => "atr",
            SchemeKind::Plain => "plain",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Keygen,
    Encrypt,
    Decrypt,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Keygen, Phase::Encrypt, Phase::Decrypt];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Keygen => "keygen",
            Phase::Encrypt => "encrypt",
            Phase::Decrypt => "decrypt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub scheme: SchemeKind,
    pub n_attrs: usize,
    pub phase: Phase,
    pub median_ns: u64,
    pub trials: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchConfig {
    pub max_n: usize,
    pub step: usize,
    /// Timed trials per grid point, at least [`MIN_TRIALS`].
    pub trials: usize,
    /// Untimed trials run first and discarded.
    pub warmup: usize,
    /// Operations per timed trial; the trial reports the per-operation mean.
    pub batch: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { max_n: 100, step: 10, trials: 15, warmup: 2, batch: 8 }
    }
}

/// `S1 AND S2 AND ... AND Sn` and the matching attribute set.
pub fn and_chain(n: usize) -> (PolicyAst, BTreeSet<String>) {
    let names: Vec<String> = (1..=n).map(|i| format!("S{i}")).collect();
    let ast = PolicyAst::and_chain(names.iter().cloned()).expect("n >= 1");
    (ast, names.into_iter().collect())
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn time_batch(batch: usize, mut op: impl FnMut()) -> u64 {
    let start = Instant::now();
    for _ in 0..batch {
        op();
    }
    (start.elapsed().as_nanos() / batch as u128) as u64
}

/// Group-element counts of one key and one ciphertext for an `n`-wide AND chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentCounts {
    pub atr_key: usize,
    pub plain_key: usize,
    pub atr_ct: usize,
    pub plain_ct: usize,
}

pub fn component_counts<R: RngCore + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    n: usize,
    rng: &mut R,
) -> Result<ComponentCounts, SchemeError> {
    let (policy, attrs) = and_chain(n);
    let ten = pp.epoch_cfg().tag_for_epoch(pp.epoch_cfg().lifetime() - 1)?;
    let sk = scheme::keygen(pp, msk, "bench", &attrs, ten, &mut IdentityTable::new(), 0, rng)?;
    let m = pp.ctx().random_gt(rng);
    let ct = scheme::encrypt(pp, m, &policy, &RevocationList::new(), rng)?;
    Ok(ComponentCounts {
        atr_key: sk.group_element_count(),
        plain_key: plain::keygen(pp, msk, &attrs, rng)?.group_element_count(),
        atr_ct: ct.group_element_count(),
        plain_ct: plain::encrypt(pp, m, &policy, rng)?.group_element_count(),
    })
}

/// Runs the grid `n = step, 2 step, .., max_n`. Both schemes are measured
/// back to back inside every trial, alternating which goes first, so slow
/// drift in machine load hits them equally.
pub fn run_bench<R: RngCore + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    cfg: &BenchConfig,
    rng: &mut R,
) -> Result<Vec<BenchRow>, SchemeError> {
    assert!(cfg.step >= 1 && cfg.max_n >= cfg.step, "need max_n >= step >= 1");
    assert!(cfg.trials >= MIN_TRIALS && cfg.batch >= 1);
    let date = pp.epoch_cfg().genesis();
    let noon = NaiveTime::from_hms_opt(12, 0, 0).expect("valid time");
    let ten = pp.epoch_cfg().tag_for_epoch(pp.epoch_cfg().lifetime() - 1)?;
    let rl = RevocationList::new();
    let mut rows = Vec::new();

    for n in (cfg.step..=cfg.max_n).step_by(cfg.step) {
        let (policy, attrs) = and_chain(n);
        let m = pp.ctx().random_gt(rng);
        let atr_sk: SecretKey = scheme::keygen(pp, msk, "bench", &attrs, ten, &mut IdentityTable::new(), 0, rng)?;
        let plain_sk = plain::keygen(pp, msk, &attrs, rng)?;
        let atr_ct = scheme::encrypt(pp, m, &policy, &rl, rng)?;
        let plain_ct = plain::encrypt(pp, m, &policy, rng)?;
        assert_eq!(scheme::decrypt(pp, &atr_sk, &atr_ct, date, noon)?, m);
        assert_eq!(plain::decrypt(pp, &plain_sk, &plain_ct)?, m);

        for phase in Phase::ALL {
            let mut samples: BTreeMap<SchemeKind, Vec<u64>> = BTreeMap::new();
            for trial in 0..cfg.warmup + cfg.trials {
                let order = if trial % 2 == 0 {
                    [SchemeKind::Atr, SchemeKind::Plain]
                } else {
                    [SchemeKind::Plain, SchemeKind::Atr]
                };
                for kind in order {
                    let ns = match (kind, phase) {
                        (SchemeKind::Atr, Phase::Keygen) => time_batch(cfg.batch, || {
                            let mut table = IdentityTable::new();
                            black_box(scheme::keygen(pp, msk, "bench", &attrs, ten, &mut table, 0, rng).unwrap());
                        }),
                        (SchemeKind::Plain, Phase::Keygen) => time_batch(cfg.batch, || {
                            black_box(plain::keygen(pp, msk, &attrs, rng).unwrap());
                        }),
                        (SchemeKind::Atr, Phase::Encrypt) => time_batch(cfg.batch, || {
                            black_box(scheme::encrypt(pp, m, &policy, &rl, rng).unwrap());
                        }),
                        (SchemeKind::Plain, Phase::Encrypt) => time_batch(cfg.batch, || {
                            black_box(plain::encrypt(pp, m, &policy, rng).unwrap());
                        }),
                        (SchemeKind::Atr, Phase::Decrypt) => time_batch(cfg.batch, || {
                            black_box(scheme::decrypt(pp, &atr_sk, &atr_ct, date, noon).unwrap());
                        }),
                        (SchemeKind::Plain, Phase::Decrypt) => time_batch(cfg.batch, || {
                            black_box(plain::decrypt(pp, &plain_sk, &plain_ct).unwrap());
                        }),
                    };
                    if trial >= cfg.warmup {
                        samples.entry(kind).or_default().push(ns);
                    }
                }
            }
            for (scheme, xs) in samples {
                rows.push(BenchRow { scheme, n_attrs: n, phase, median_ns: median(xs), trials: cfg.trials });
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.scheme.name(), r.n_attrs, r.phase.name(), r.median_ns, r.trials);
    }
    out
}
