// SPDX-License-Identifier: Apache-2.0

//! Filesystem-backed cloud storage together with the semi-trusted authority.
//!
//! ```text
//! <root>/pp.bin              public parameters
//! <root>/msk.bin             master secret, owner-only
//! <root>/auditors/bundle.bin (pp, msk) handed to auditors, owner-only
//! <root>/rl.bin              published revocation list
//! <root>/table.bin           identity table
//! <root>/objects/<id>.env    envelopes, named by ciphertext uuid
//! <root>/.lock               advisory lock held while a service is open
//! ```
//!
//! Every file is replaced by write-to-temp, fsync, rename. On revocation the
//! list is written before the objects, so an interrupted update leaves
//! objects that are merely stale; [`CloudService::open`] refreshes them.
//!
//! Within a process the service is shared by reference: readers take an
//! immutable [`Snapshot`], mutations are serialized by an internal writer lock
//! and publish a new snapshot when they finish.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::NaiveDateTime;
use rand::RngCore;
use thiserror::Error;

use crate::codec::{tag, CodecError, Reader, Wire, Writer};
use crate::envelope::{update_envelope, EnvelopeObject};
use crate::scheme::{
    self, keygen, IdentityTable, MasterSecret, PublicParams, RevocationEntry, RevocationList, SchemeError, SecretKey,
};
use crate::time::{EpochConfig, TimeError};

const PP_FILE: &str = "pp.bin";
const MSK_FILE: &str = "msk.bin";
const BUNDLE_FILE: &str = "auditors/bundle.bin";
const RL_FILE: &str = "rl.bin";
const TABLE_FILE: &str = "table.bin";
const OBJECTS_DIR: &str = "objects";
const LOCK_FILE: &str = ".lock";
const OBJECT_EXT: &str = "env";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("a store already exists at {0}")]
    StoreExists(PathBuf),
    #[error("no store at {0}")]
    NoStore(PathBuf),
    #[error("object {0} not found")]
    NotFound(String),
    #[error("object {0} is already stored with different content")]
    ObjectConflict(String),
    #[error("identity {0:?} already holds a live key")]
    DuplicateIdentity(String),
    #[error("identity {0:?} was never registered")]
    UnknownIdentity(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl From<TimeError> for StoreError {
    fn from(e: TimeError) -> Self {
        StoreError::Scheme(e.into())
    }
}

pub type Result<T> = std::result::Result<T, StoreError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// What the authority hands each auditor at setup: `(Pp, msk)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditorBundle {
    pub pp: PublicParams,
    pub msk: MasterSecret,
}

impl Wire for AuditorBundle {
    const TYPE_TAG: u8 = tag::AUDITOR_BUNDLE;

    fn write_body(&self, w: &mut Writer) {
        self.pp.write_body(w);
        self.msk.write_body(w);
    }

    fn read_body(r: &mut Reader<'_>) -> std::result::Result<Self, CodecError> {
        Ok(AuditorBundle { pp: PublicParams::read_body(r)?, msk: MasterSecret::read_body(r)? })
    }
}

/// Whether a file may be read by anyone but its owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileMode {
    Public,
    Secret,
}

/// Atomically replaces `path` with `bytes`.
pub fn write_file_atomic(path: &Path, bytes: &[u8], mode: FileMode) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| StoreError::Io {
        path: path.to_path_buf(),
        source: io::Error::new(io::ErrorKind::InvalidInput, "not a file path"),
    })?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let _ = fs::remove_file(&tmp);
    let mut opts = OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(if mode == FileMode::Secret { 0o600 } else { 0o644 });
    }
    #[cfg(not(unix))]
    let _ = mode;
    let mut f = opts.open(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

fn read_wire<T: Wire>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(T::from_bytes(&bytes)?)
}

fn write_wire<T: Wire>(path: &Path, value: &T, mode: FileMode) -> Result<()> {
    write_file_atomic(path, &value.to_bytes(), mode)
}

fn is_prefix_of(old: &RevocationList, new: &RevocationList) -> bool {
    old.version() <= new.version() && new.entries().starts_with(old.entries())
}

/// Immutable view of the mutable store state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Snapshot {
    rl: RevocationList,
    table: IdentityTable,
    objects: BTreeMap<String, Arc<EnvelopeObject>>,
}

impl Snapshot {
    pub fn rl(&self) -> &RevocationList {
        &self.rl
    }

    pub fn table(&self) -> &IdentityTable {
        &self.table
    }

    pub fn object(&self, oid: &str) -> Option<&Arc<EnvelopeObject>> {
        self.objects.get(oid)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }
}

pub struct CloudService {
    root: PathBuf,
    pp: PublicParams,
    msk: MasterSecret,
    state: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    _lock: File,
}

impl std::fmt::Debug for CloudService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CloudService").field("root", &self.root).finish_non_exhaustive()
    }
}

fn acquire_lock(root: &Path) -> Result<File> {
    let path = root.join(LOCK_FILE);
    let f = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(io_err(&path))?;
    f.lock().map_err(io_err(&path))?;
    Ok(f)
}

impl CloudService {
    /// System setup: creates the store, persists `Pp` publicly, `msk`
    /// privately and exports the auditor bundle.
    pub fn init<R: RngCore + ?Sized>(
        root: impl AsRef<Path>,
        selector: &str,
        universe: Option<BTreeSet<String>>,
        epoch_cfg: EpochConfig,
        rng: &mut R,
    ) -> Result<CloudService> {
        let root = root.as_ref().to_path_buf();
        if root.join(PP_FILE).exists() {
            return Err(StoreError::StoreExists(root));
        }
        for dir in [root.clone(), root.join("auditors"), root.join(OBJECTS_DIR)] {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        let lock = acquire_lock(&root)?;
        if root.join(PP_FILE).exists() {
            return Err(StoreError::StoreExists(root));
        }

        let (pp, msk, rl) = scheme::setup(selector, universe, epoch_cfg, rng)?;
        let table = IdentityTable::new();
        write_wire(&root.join(MSK_FILE), &msk, FileMode::Secret)?;
        let bundle = AuditorBundle { pp: pp.clone(), msk: msk.clone() };
        write_wire(&root.join(BUNDLE_FILE), &bundle, FileMode::Secret)?;
        write_wire(&root.join(RL_FILE), &rl, FileMode::Public)?;
        write_wire(&root.join(TABLE_FILE), &table, FileMode::Public)?;
        // pp.bin last: its presence marks a complete store
        write_wire(&root.join(PP_FILE), &pp, FileMode::Public)?;

        Ok(CloudService {
            root,
            pp,
            msk,
            state: RwLock::new(Arc::new(Snapshot { rl, table, objects: BTreeMap::new() })),
            writer: Mutex::new(()),
            _lock: lock,
        })
    }

    /// Loads an existing store, blocking until its advisory lock is free.
    /// Objects left stale by an interrupted revocation are refreshed here.
    pub fn open<R: RngCore + ?Sized>(root: impl AsRef<Path>, rng: &mut R) -> Result<CloudService> {
        let root = root.as_ref().to_path_buf();
        if !root.join(PP_FILE).exists() {
            return Err(StoreError::NoStore(root));
        }
        let lock = acquire_lock(&root)?;
        let pp: PublicParams = read_wire(&root.join(PP_FILE))?;
        let msk: MasterSecret = read_wire(&root.join(MSK_FILE))?;
        let rl: RevocationList = read_wire(&root.join(RL_FILE))?;
        let table: IdentityTable = read_wire(&root.join(TABLE_FILE))?;

        let dir = root.join(OBJECTS_DIR);
        let mut objects = BTreeMap::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            if stem.starts_with('.') || path.extension().and_then(|e| e.to_str()) != Some(OBJECT_EXT) {
                continue;
            }
            let mut env: EnvelopeObject = read_wire(&path)?;
            if env.object_id() != stem {
                return Err(
                    CodecError::Invariant(format!("{} holds object {}", path.display(), env.object_id())).into()
                );
            }
            if !is_prefix_of(&env.abe_ct.rl_snapshot, &rl) {
                return Err(CodecError::Invariant(format!("object {stem} carries an unknown revocation list")).into());
            }
            if env.abe_ct.rl_snapshot.version() < rl.version() {
                env = update_envelope(&pp, &env, &rl, rng)?;
                write_wire(&path, &env, FileMode::Public)?;
            }
            objects.insert(stem.to_string(), Arc::new(env));
        }

        Ok(CloudService {
            root,
            pp,
            msk,
            state: RwLock::new(Arc::new(Snapshot { rl, table, objects })),
            writer: Mutex::new(()),
            _lock: lock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pp(&self) -> &PublicParams {
        &self.pp
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.state.read().unwrap().clone()
    }

    /// The currently published revocation list; data owners encrypt under it.
    pub fn rl(&self) -> RevocationList {
        self.snapshot().rl.clone()
    }

    pub fn auditor_bundle(&self) -> Result<AuditorBundle> {
        read_wire(&self.root.join(BUNDLE_FILE))
    }

    fn commit<T>(&self, f: impl FnOnce(&mut Snapshot) -> Result<T>) -> Result<T> {
        let _w = self.writer.lock().unwrap();
        let mut next = Snapshot::clone(&self.snapshot());
        let out = f(&mut next)?;
        *self.state.write().unwrap() = Arc::new(next);
        Ok(out)
    }

    fn object_path(&self, oid: &str) -> PathBuf {
        self.root.join(OBJECTS_DIR).join(format!("{oid}.{OBJECT_EXT}"))
    }

    /// User registration. An identity holding a key that is neither revoked
    /// nor expired at `now` is refused.
    pub fn register_user<R: RngCore + ?Sized>(
        &self,
        id: &str,
        attrs: &BTreeSet<String>,
        validity: u64,
        now: NaiveDateTime,
        rng: &mut R,
    ) -> Result<SecretKey> {
        self.commit(|st| {
            let epoch = self.pp.epoch_cfg().epoch_at(now)?;
            let live = st.table.tags_for(id).any(|(tag, rec)| !st.rl.contains(tag) && rec.ten.expiry_epoch() >= epoch);
            if live {
                return Err(StoreError::DuplicateIdentity(id.to_string()));
            }
            self.issue(st, id, attrs, validity, now, rng)
        })
    }

    /// Issues a fresh credential to a known identity with its latest attribute set.
    pub fn reissue<R: RngCore + ?Sized>(
        &self,
        id: &str,
        validity: u64,
        now: NaiveDateTime,
        rng: &mut R,
    ) -> Result<SecretKey> {
        self.commit(|st| {
            let attrs = st
                .table
                .issued()
                .into_iter()
                .rev()
                .find(|(_, r)| r.id == id)
                .map(|(_, r)| r.attrs.clone())
                .ok_or_else(|| StoreError::UnknownIdentity(id.to_string()))?;
            self.issue(st, id, &attrs, validity, now, rng)
        })
    }

    fn issue<R: RngCore + ?Sized>(
        &self,
        st: &mut Snapshot,
        id: &str,
        attrs: &BTreeSet<String>,
        validity: u64,
        now: NaiveDateTime,
        rng: &mut R,
    ) -> Result<SecretKey> {
        let cfg = self.pp.epoch_cfg();
        let epoch = cfg.epoch_at(now)?;
        let ten = cfg.time_encode(now.date(), validity)?;
        let sk = keygen(&self.pp, &self.msk, id, attrs, ten, &mut st.table, epoch, rng)?;
        write_wire(&self.root.join(TABLE_FILE), &st.table, FileMode::Public)?;
        Ok(sk)
    }

    /// Stores an envelope under its ciphertext uuid. An envelope encrypted
    /// under an older revocation list is refreshed before it is written.
    pub fn store_object<R: RngCore + ?Sized>(&self, env: &EnvelopeObject, rng: &mut R) -> Result<String> {
        self.commit(|st| {
            let oid = env.object_id();
            if let Some(existing) = st.objects.get(&oid) {
                if **existing == *env {
                    return Ok(oid);
                }
                return Err(StoreError::ObjectConflict(oid));
            }
            if !is_prefix_of(&env.abe_ct.rl_snapshot, &st.rl) {
                return Err(CodecError::Invariant("envelope carries an unknown revocation list".into()).into());
            }
            let env = if env.abe_ct.rl_snapshot.version() < st.rl.version() {
                update_envelope(&self.pp, env, &st.rl, rng)?
            } else {
                env.clone()
            };
            write_wire(&self.object_path(&oid), &env, FileMode::Public)?;
            st.objects.insert(oid.clone(), Arc::new(env));
            Ok(oid)
        })
    }

    pub fn store_encoded<R: RngCore + ?Sized>(&self, bytes: &[u8], rng: &mut R) -> Result<String> {
        self.store_object(&EnvelopeObject::from_bytes(bytes)?, rng)
    }

    pub fn fetch_object(&self, oid: &str) -> Result<Arc<EnvelopeObject>> {
        self.snapshot().objects.get(oid).cloned().ok_or_else(|| StoreError::NotFound(oid.to_string()))
    }

    pub fn fetch_encoded(&self, oid: &str) -> Result<Vec<u8>> {
        Ok(self.fetch_object(oid)?.to_bytes())
    }

    /// Object ids in ascending order.
    pub fn list_objects(&self) -> Vec<String> {
        self.snapshot().objects.keys().cloned().collect()
    }

    /// Revokes every credential ever issued to `id`, then re-randomizes all
    /// stored ciphertexts under the new list. Returns the list version; if
    /// everything was already revoked nothing is written.
    pub fn revoke_and_update<R: RngCore + ?Sized>(&self, id: &str, now: NaiveDateTime, rng: &mut R) -> Result<u64> {
        self.commit(|st| {
            let tags: Vec<_> = st.table.tags_for(id).map(|(t, _)| t).collect();
            if tags.is_empty() {
                return Err(StoreError::UnknownIdentity(id.to_string()));
            }
            let epoch = self.pp.epoch_cfg().epoch_at(now)?;
            let entries = tags.into_iter().map(|tag| RevocationEntry { tag, id: id.to_string(), epoch });
            let Some(version) = st.rl.revoke(entries) else {
                return Ok(st.rl.version());
            };
            let mut updated = BTreeMap::new();
            for (oid, env) in &st.objects {
                updated.insert(oid.clone(), Arc::new(update_envelope(&self.pp, env, &st.rl, rng)?));
            }
            write_wire(&self.root.join(RL_FILE), &st.rl, FileMode::Public)?;
            for (oid, env) in &updated {
                write_wire(&self.object_path(oid), env.as_ref(), FileMode::Public)?;
            }
            st.objects = updated;
            Ok(version)
        })
    }
}
