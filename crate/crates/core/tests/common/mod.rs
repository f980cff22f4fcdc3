// SPDX-License-Identifier: Apache-2.0

//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use cloudplus::codec::{Reader, Wire, Writer};
use cloudplus::policy::PolicyAst;
use cloudplus::scheme::{setup, MasterSecret, PublicParams, RevocationList};
use cloudplus::time::EpochConfig;
use rand::Rng;

pub fn genesis() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()
}

pub fn noon() -> NaiveTime {
    NaiveTime::from_hms_opt(12, 0, 0).unwrap()
}

pub fn date(epoch: u64) -> NaiveDate {
    genesis() + chrono::Duration::days(epoch as i64)
}

pub fn at(epoch: u64) -> NaiveDateTime {
    date(epoch).and_time(noon())
}

pub fn set<S: AsRef<str>>(attrs: &[S]) -> BTreeSet<String> {
    attrs.iter().map(|s| s.as_ref().to_string()).collect()
}

pub fn params<R: rand::RngCore>(lifetime: u64, rng: &mut R) -> (PublicParams, MasterSecret, RevocationList) {
    setup("toy", None, EpochConfig::new(genesis(), lifetime).unwrap(), rng).unwrap()
}

/// Master secret of a second authority that publishes the same parameters
/// but holds a different tracing key.
pub fn sibling_msk(msk: &MasterSecret, trace_key: [u8; 32]) -> MasterSecret {
    let mut w = Writer::default();
    w.scalar(msk.alpha());
    w.scalar(msk.a());
    w.raw(&trace_key);
    MasterSecret::read_body(&mut Reader::new(&w.into_bytes())).unwrap()
}

/// Every policy tree with exactly `leaves` leaves drawn from `attrs`.
pub fn all_policies(leaves: usize, attrs: &[&str]) -> Vec<PolicyAst> {
    let mut by_size: Vec<Vec<PolicyAst>> = vec![Vec::new()];
    for n in 1..=leaves {
        let mut out = Vec::new();
        if n == 1 {
            out.extend(attrs.iter().map(|a| PolicyAst::attr(*a)));
        }
        for l in 1..n {
            for left in &by_size[l] {
                for right in &by_size[n - l] {
                    out.push(PolicyAst::and(left.clone(), right.clone()));
                    out.push(PolicyAst::or(left.clone(), right.clone()));
                }
            }
        }
        by_size.push(out);
    }
    by_size.pop().unwrap()
}

/// Calls `f` on every policy tree with exactly `leaves` leaves without
/// materializing the largest size class.
pub fn for_each_policy(leaves: usize, attrs: &[&str], mut f: impl FnMut(&PolicyAst)) {
    if leaves <= 1 {
        all_policies(leaves, attrs).iter().for_each(f);
        return;
    }
    let smaller: Vec<Vec<PolicyAst>> =
        (0..leaves).map(|n| if n == 0 { Vec::new() } else { all_policies(n, attrs) }).collect();
    for l in 1..leaves {
        for left in &smaller[l] {
            for right in &smaller[leaves - l] {
                f(&PolicyAst::and(left.clone(), right.clone()));
                f(&PolicyAst::or(left.clone(), right.clone()));
            }
        }
    }
}

pub fn random_policy<R: Rng + ?Sized>(rng: &mut R, leaves: usize, attrs: &[&str]) -> PolicyAst {
    if leaves <= 1 {
        return PolicyAst::attr(attrs[rng.gen_range(0..attrs.len())]);
    }
    let split = rng.gen_range(1..leaves);
    let l = random_policy(rng, split, attrs);
    let r = random_policy(rng, leaves - split, attrs);
    if rng.gen_bool(0.5) {
        PolicyAst::and(l, r)
    } else {
        PolicyAst::or(l, r)
    }
}

/// All subsets of `attrs`, as bitmask-indexed sets.
pub fn subsets(attrs: &[&str]) -> Vec<BTreeSet<String>> {
    (0u32..1 << attrs.len())
        .map(|mask| {
            attrs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a.to_string()).collect()
        })
        .collect()
}

pub fn random_bytes<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> Vec<u8> {
    let n = rng.gen_range(0..=max_len);
    let mut v = vec![0u8; n];
    rng.fill(&mut v[..]);
    v
}

/// Decodes every single-byte corruption of `bytes`; returns how many were
/// accepted as an object different from `original`.
pub fn silent_flips<T: Wire + PartialEq, R: Rng + ?Sized>(original: &T, rng: &mut R) -> usize {
    let bytes = original.to_bytes();
    let mut silent = 0;
    for i in 0..bytes.len() {
        let mut b = bytes.clone();
        b[i] ^= rng.gen_range(1..=255u8);
        if let Ok(decoded) = T::from_bytes(&b) {
            if decoded != *original {
                silent += 1;
            }
        }
    }
    silent
}
