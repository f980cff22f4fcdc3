// SPDX-License-Identifier: Apache-2.0

//! Auditor panel: independent audits, strict-majority verdict, dissenters.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::codec::{tag, CodecError, Reader, Wire, Writer};
use crate::scheme::{
    self, audit_pair, IdentityTable, MasterSecret, PublicParams, RevocationList, SecretKey, TraceOutcome,
};
use crate::store::AuditorBundle;

pub const DEFAULT_PANEL: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("auditor panel of {0} has no strict majority")]
    EvenPanel(usize),
    #[error("auditor panel needs at least 3 members, got {0}")]
    PanelTooSmall(usize),
    #[error("auditor id {0:?} appears twice")]
    DuplicateAuditor(String),
}

/// Fault model. An inverted auditor reports the opposite of what it computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Behavior {
    Honest,
    Inverted,
}

#[derive(Clone, Debug)]
pub struct AuditorState {
    pub auditor_id: String,
    pub pp: PublicParams,
    pub msk: MasterSecret,
    pub table: IdentityTable,
    pub behavior: Behavior,
}

impl AuditorState {
    pub fn new(auditor_id: impl Into<String>, bundle: &AuditorBundle, table: IdentityTable) -> Self {
        AuditorState {
            auditor_id: auditor_id.into(),
            pp: bundle.pp.clone(),
            msk: bundle.msk.clone(),
            table,
            behavior: Behavior::Honest,
        }
    }

    pub fn with_behavior(mut self, behavior: Behavior) -> Self {
        self.behavior = behavior;
        self
    }

    /// This auditor's verdict: `true` means guilty.
    pub fn verdict(&self, accused: &SecretKey, leaked: &SecretKey) -> bool {
        let honest = audit_pair(&self.pp, accused, leaked);
        match self.behavior {
            Behavior::Honest => honest,
            Behavior::Inverted => !honest,
        }
    }
}

/// `n` honest auditors named `auditor-1` .. `auditor-n`.
pub fn honest_panel(bundle: &AuditorBundle, table: &IdentityTable, n: usize) -> Vec<AuditorState> {
    (1..=n).map(|i| AuditorState::new(format!("auditor-{i}"), bundle, table.clone())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    per_auditor: Vec<(String, bool)>,
    majority: bool,
    dissenters: Vec<String>,
}

impl AuditReport {
    /// Tallies verdicts given in panel order.
    pub fn from_verdicts(per_auditor: Vec<(String, bool)>) -> Result<AuditReport, AuditError> {
        check_panel(per_auditor.iter().map(|(id, _)| id.as_str()))?;
        let guilty = per_auditor.iter().filter(|(_, v)| *v).count();
        let majority = 2 * guilty > per_auditor.len();
        let dissenters = per_auditor.iter().filter(|(_, v)| *v != majority).map(|(id, _)| id.clone()).collect();
        Ok(AuditReport { per_auditor, majority, dissenters })
    }

    pub fn per_auditor(&self) -> &[(String, bool)] {
        &self.per_auditor
    }

    pub fn majority(&self) -> bool {
        self.majority
    }

    pub fn dissenters(&self) -> &[String] {
        &self.dissenters
    }
}

fn check_panel<'a>(ids: impl ExactSizeIterator<Item = &'a str>) -> Result<(), AuditError> {
    let n = ids.len();
    if n.is_multiple_of(2) {
        return Err(AuditError::EvenPanel(n));
    }
    if n < 3 {
        return Err(AuditError::PanelTooSmall(n));
    }
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(AuditError::DuplicateAuditor(id.to_string()));
        }
    }
    Ok(())
}

fn bit(v: bool) -> u8 {
    u8::from(v)
}

/// One line per auditor, then `majority <v> dissenters <ids|none>`.
impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, v) in &self.per_auditor {
            writeln!(f, "{id} {}", bit(*v))?;
        }
        let dissenters = if self.dissenters.is_empty() { "none".to_string() } else { self.dissenters.join(",") };
        write!(f, "majority {} dissenters {dissenters}", bit(self.majority))
    }
}

/// Every auditor evaluates independently (in parallel); the report is built
/// once all verdicts are in.
pub fn run_multi_audit(
    auditors: &[AuditorState],
    accused: &SecretKey,
    leaked: &SecretKey,
) -> Result<AuditReport, AuditError> {
    check_panel(auditors.iter().map(|a| a.auditor_id.as_str()))?;
    let verdicts: Vec<(String, bool)> = std::thread::scope(|s| {
        let handles: Vec<_> =
            auditors.iter().map(|a| s.spawn(move || (a.auditor_id.clone(), a.verdict(accused, leaked)))).collect();
        handles.into_iter().map(|h| h.join().expect("auditor thread panicked")).collect()
    });
    AuditReport::from_verdicts(verdicts)
}

/// Traces a leaked credential given as raw bytes. Anything that does not
/// decode as a key is not worth tracing.
pub fn run_trace(
    auditor: &AuditorState,
    leaked: &[u8],
    rl: &mut RevocationList,
    epoch: u64,
) -> Result<TraceOutcome, scheme::SchemeError> {
    match SecretKey::from_bytes(leaked) {
        Ok(sk) => scheme::trace(&auditor.pp, &auditor.msk, &sk, &auditor.table, rl, epoch),
        Err(_) => Ok(TraceOutcome::NoTraceReq),
    }
}

impl Wire for AuditReport {
    const TYPE_TAG: u8 = tag::AUDIT_REPORT;

    fn write_body(&self, w: &mut Writer) {
        w.list(&self.per_auditor, |w, (id, v)| {
            w.str(id);
            w.u8(bit(*v));
        });
        w.u8(bit(self.majority));
        w.strs(self.dissenters.iter());
    }

    fn read_body(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let verdict = |r: &mut Reader<'_>| match r.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(CodecError::Format(format!("verdict byte {v}"))),
        };
        let per_auditor = r.list(5, |r| Ok((r.str()?, verdict(r)?)))?;
        let majority = verdict(r)?;
        let dissenters = r.list(4, |r| r.str())?;
        let report = AuditReport::from_verdicts(per_auditor).map_err(|e| CodecError::Invariant(e.to_string()))?;
        if report.majority != majority || report.dissenters != dissenters {
            return Err(CodecError::Invariant("majority or dissenters do not match verdicts".into()));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{keygen, setup, SchemeError};
    use crate::time::EpochConfig;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        bundle: AuditorBundle,
        table: IdentityTable,
        alice: SecretKey,
        bob: SecretKey,
    }

    fn fixture(seed: u64) -> Fixture {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let cfg = EpochConfig::new(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), 365).unwrap();
        let (pp, msk, _) = setup("toy", None, cfg, &mut rng).unwrap();
        let mut table = IdentityTable::new();
        let ten = pp.epoch_cfg().tag_for_epoch(30).unwrap();
        let attrs = ["A".to_string(), "B".to_string()].into_iter().collect();
        let alice = keygen(&pp, &msk, "alice", &attrs, ten, &mut table, 0, &mut rng).unwrap();
        let bob = keygen(&pp, &msk, "bob", &attrs, ten, &mut table, 0, &mut rng).unwrap();
        Fixture { bundle: AuditorBundle { pp, msk }, table, alice, bob }
    }

    fn panel(f: &Fixture, faulty: &[usize], n: usize) -> Vec<AuditorState> {
        honest_panel(&f.bundle, &f.table, n)
            .into_iter()
            .enumerate()
            .map(|(i, a)| if faulty.contains(&i) { a.with_behavior(Behavior::Inverted) } else { a })
            .collect()
    }

    #[test]
    fn three_honest_guilty() {
        let f = fixture(1);
        let r = run_multi_audit(&panel(&f, &[], 3), &f.alice, &f.alice.clone()).unwrap();
        assert_eq!(r.per_auditor().iter().map(|(_, v)| *v).collect::<Vec<_>>(), [true, true, true]);
        assert!(r.majority());
        assert!(r.dissenters().is_empty());
        assert_eq!(r.to_string(), "auditor-1 1\nauditor-2 1\nauditor-3 1\nmajority 1 dissenters none");
    }

    #[test]
    fn one_inverted_auditor_is_outvoted() {
        let f = fixture(2);
        let r = run_multi_audit(&panel(&f, &[2], 3), &f.alice, &f.alice).unwrap();
        assert_eq!(r.per_auditor().iter().map(|(_, v)| *v).collect::<Vec<_>>(), [true, true, false]);
        assert!(r.majority());
        assert_eq!(r.dissenters(), ["auditor-3"]);
        assert!(r.to_string().ends_with("majority 1 dissenters auditor-3"));
    }

    #[test]
    fn panel_shape_errors() {
        let f = fixture(3);
        assert_eq!(run_multi_audit(&panel(&f, &[], 2), &f.alice, &f.alice), Err(AuditError::EvenPanel(2)));
        assert_eq!(run_multi_audit(&panel(&f, &[], 0), &f.alice, &f.alice), Err(AuditError::EvenPanel(0)));
        assert_eq!(run_multi_audit(&panel(&f, &[], 1), &f.alice, &f.alice), Err(AuditError::PanelTooSmall(1)));
        let mut p = panel(&f, &[], 3);
        p[2].auditor_id = "auditor-1".into();
        assert_eq!(run_multi_audit(&p, &f.alice, &f.alice), Err(AuditError::DuplicateAuditor("auditor-1".into())));
    }

    fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
        (0u32..1 << n).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
    }

    #[test]
    fn every_minority_fault_set_is_tolerated() {
        let f = fixture(4);
        for n in [3usize, 5] {
            for faulty in subsets(n).filter(|s| 2 * s.len() < n) {
                let p = panel(&f, &faulty, n);
                for (leaked, honest) in [(&f.alice, true), (&f.bob, false)] {
                    let r = run_multi_audit(&p, &f.alice, leaked).unwrap();
                    assert_eq!(r.majority(), honest, "n={n} faulty={faulty:?}");
                    let expect: Vec<String> = faulty.iter().map(|i| format!("auditor-{}", i + 1)).collect();
                    assert_eq!(r.dissenters(), expect);
                    assert_eq!(r, run_multi_audit(&p, &f.alice, leaked).unwrap());
                }
            }
        }
    }

    #[test]
    fn report_wire_roundtrip_and_validation() {
        let f = fixture(5);
        let r = run_multi_audit(&panel(&f, &[0], 5), &f.alice, &f.bob).unwrap();
        let bytes = r.to_bytes();
        assert_eq!(AuditReport::from_bytes(&bytes).unwrap(), r);
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x01;
            assert!(AuditReport::from_bytes(&b).is_err(), "flip at {i}");
        }
        let mut w = Writer::default();
        w.list(&[("x".to_string(), true), ("y".to_string(), true), ("z".to_string(), false)], |w, (id, v)| {
            w.str(id);
            w.u8(bit(*v));
        });
        w.u8(0);
        w.strs([].iter());
        assert!(matches!(AuditReport::read_body(&mut Reader::new(&{ w }.into_bytes())), Err(CodecError::Invariant(_))));
    }

    #[test]
    fn trace_from_bytes() {
        let f = fixture(6);
        let auditor = &honest_panel(&f.bundle, &f.table, 3)[0];
        let mut rl = RevocationList::new();
        assert_eq!(
            run_trace(auditor, &f.bob.to_bytes(), &mut rl, 3).unwrap(),
            TraceOutcome::Traced { id: "bob".into(), tag: f.bob.tag }
        );
        assert!(rl.contains(f.bob.tag));
        assert_eq!(run_trace(auditor, b"garbage", &mut rl, 3).unwrap(), TraceOutcome::NoTraceReq);
        assert_eq!(run_trace(auditor, &[], &mut rl, 3).unwrap(), TraceOutcome::NoTraceReq);

        // independent setup: not even well formed under these parameters
        let other = fixture(7);
        assert_eq!(run_trace(auditor, &other.alice.to_bytes(), &mut rl, 3).unwrap(), TraceOutcome::NoTraceReq);

        // sibling authority sharing the public parameters but not the trace key
        let mut w = Writer::default();
        w.scalar(f.bundle.msk.alpha());
        w.scalar(f.bundle.msk.a());
        w.raw(&[0x5a; 32]);
        let sibling = MasterSecret::read_body(&mut Reader::new(&w.into_bytes())).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let ten = f.bundle.pp.epoch_cfg().tag_for_epoch(30).unwrap();
        let attrs = ["A".to_string()].into_iter().collect();
        let foreign =
            keygen(&f.bundle.pp, &sibling, "carol", &attrs, ten, &mut IdentityTable::new(), 0, &mut rng).unwrap();
        assert_eq!(run_trace(auditor, &foreign.to_bytes(), &mut rl, 3), Err(SchemeError::UnknownWellFormedKey));
    }
}
