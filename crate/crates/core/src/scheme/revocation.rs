// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use crate::field::Scalar;
use crate::time::TimeTag;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevocationEntry {
    pub tag: Scalar,
    pub id: String,
    pub epoch: u64,
}

/// Append-only list of revoked identity tags. Every mutation bumps the
/// version by exactly one, however many entries it adds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RevocationList {
    version: u64,
    entries: Vec<RevocationEntry>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn from_parts(version: u64, entries: Vec<RevocationEntry>) -> Self {
        RevocationList { version, entries }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn entries(&self) -> &[RevocationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, tag: Scalar) -> bool {
        self.entries.iter().any(|e| e.tag == tag)
    }

    /// Appends every entry whose tag is not already listed. Returns the new
    /// version, or `None` (and leaves the list untouched) if nothing was new.
    pub fn revoke<I>(&mut self, entries: I) -> Option<u64>
    where
        I: IntoIterator<Item = RevocationEntry>,
    {
        let mut fresh: Vec<RevocationEntry> = Vec::new();
        for e in entries {
            if !self.contains(e.tag) && !fresh.iter().any(|f| f.tag == e.tag) {
                fresh.push(e);
            }
        }
        if fresh.is_empty() {
            return None;
        }
        self.entries.extend(fresh);
        self.version += 1;
        Some(self.version)
    }

    pub fn revoke_one(&mut self, tag: Scalar, id: &str, epoch: u64) -> Option<u64> {
        self.revoke([RevocationEntry { tag, id: id.to_string(), epoch }])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityRecord {
    pub id: String,
    pub attrs: BTreeSet<String>,
    pub ten: TimeTag,
    pub issue_epoch: u64,
}

/// Authority-side map from identity tag to the credential it was issued for.
/// Records are never removed, so revoked and expired keys stay traceable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdentityTable {
    records: BTreeMap<Scalar, IdentityRecord>,
}

impl IdentityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, tag: Scalar) -> Option<&IdentityRecord> {
        self.records.get(&tag)
    }

    pub fn contains(&self, tag: Scalar) -> bool {
        self.records.contains_key(&tag)
    }

    pub(crate) fn insert(&mut self, tag: Scalar, record: IdentityRecord) -> bool {
        if self.records.contains_key(&tag) {
            return false;
        }
        self.records.insert(tag, record);
        true
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scalar, &IdentityRecord)> {
        self.records.iter()
    }

    /// All tags ever issued to `id`.
    pub fn tags_for<'a>(&'a self, id: &'a str) -> impl Iterator<Item = (Scalar, &'a IdentityRecord)> + 'a {
        self.records.iter().filter(move |(_, r)| r.id == id).map(|(t, r)| (*t, r))
    }

    /// Issuance log ordered by issue epoch, then id, then tag.
    pub fn issued(&self) -> Vec<(Scalar, &IdentityRecord)> {
        let mut out: Vec<_> = self.records.iter().map(|(t, r)| (*t, r)).collect();
        out.sort_by(|a, b| (a.1.issue_epoch, &a.1.id, a.0).cmp(&(b.1.issue_epoch, &b.1.id, b.0)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_moves_once_per_mutation() {
        let mut rl = RevocationList::new();
        assert_eq!(rl.version(), 0);
        assert!(rl.is_empty());
        assert_eq!(rl.revoke_one(Scalar::new(5), "alice", 3), Some(1));
        let batch = [
            RevocationEntry { tag: Scalar::new(6), id: "bob".into(), epoch: 4 },
            RevocationEntry { tag: Scalar::new(7), id: "bob".into(), epoch: 4 },
        ];
        assert_eq!(rl.revoke(batch), Some(2));
        assert_eq!(rl.len(), 3);
    }

    #[test]
    fn duplicate_tags_are_ignored() {
        let mut rl = RevocationList::new();
        rl.revoke_one(Scalar::new(5), "alice", 3);
        assert_eq!(rl.revoke_one(Scalar::new(5), "alice", 9), None);
        assert_eq!(rl.version(), 1);
        let dup_in_batch = [
            RevocationEntry { tag: Scalar::new(8), id: "c".into(), epoch: 1 },
            RevocationEntry { tag: Scalar::new(8), id: "c".into(), epoch: 1 },
        ];
        assert_eq!(rl.revoke(dup_in_batch), Some(2));
        assert_eq!(rl.len(), 2);
    }

    #[test]
    fn table_insert_is_injective() {
        let mut t = IdentityTable::new();
        let rec = IdentityRecord {
            id: "alice".into(),
            attrs: BTreeSet::from(["A".to_string()]),
            ten: TimeTag::from_bits("0101").unwrap(),
            issue_epoch: 0,
        };
        assert!(t.insert(Scalar::new(11), rec.clone()));
        assert!(!t.insert(Scalar::new(11), rec.clone()));
        assert!(t.insert(Scalar::new(12), IdentityRecord { issue_epoch: 2, ..rec }));
        assert_eq!(t.tags_for("alice").count(), 2);
        assert_eq!(t.issued()[0].0, Scalar::new(11));
    }
}
