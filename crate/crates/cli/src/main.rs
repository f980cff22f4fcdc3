// SPDX-License-Identifier: Apache-2.0

//! `cloudplus`: operator front end for a cloudplus store.
//!
//! Exit status: 0 success, 2 access denied, 3 malformed input,
//! 4 audit found the accused guilty, 5 store or internal failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cloudplus::bench::BenchConfig;
use cloudplus::codec::Wire;
use cloudplus::scheme::SecretKey;
use cloudplus::store::{write_file_atomic, CloudService, FileMode};
use cloudplus::time::{parse_date, Clock, ManualClock, SystemClock};
use cloudplus::workflow::{self, ErrorClass, TraceResult, WorkflowError};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const EXIT_DENIED: u8 = 2;
const EXIT_MALFORMED: u8 = 3;
const EXIT_GUILTY: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "cloudplus", version, about = "Traceable attribute-based encrypted file store")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Fixed current time, YYYY-MM-DD or YYYY-MM-DDTHH:MM:SS (UTC). The wall clock is not read when set.
    #[arg(long, global = true)]
    now: Option<String>,
    /// Seed for the random number generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Auditor panel size for `audit`.
    #[arg(long, global = true, default_value_t = cloudplus::audit::DEFAULT_PANEL)]
    auditors: usize,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create a store with fresh system parameters.
    Setup {
        #[arg(long)]
        lifetime_epochs: u64,
        #[arg(long)]
        genesis: String,
    },
    /// Issue a key; written owner-only to `<ID>.key` unless --out is given.
    Register {
        #[arg(long)]
        id: String,
        /// Comma-separated attributes.
        #[arg(long)]
        attrs: String,
        /// Validity in epochs (days).
        #[arg(long)]
        validity: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encrypt a file under a policy and store it; prints the object id.
    Outsource {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        policy: String,
    },
    /// Fetch and decrypt a stored object.
    Access {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        object: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace a leaked key to its owner and revoke them.
    Trace {
        #[arg(long)]
        leaked: PathBuf,
    },
    /// Revoke an identity and update every stored ciphertext.
    Revoke {
        #[arg(long)]
        id: String,
    },
    /// Ask the auditor panel whether a leaked key belongs to the accused.
    Audit {
        #[arg(long)]
        accused: PathBuf,
        #[arg(long)]
        leaked: PathBuf,
    },
    /// Issue a fresh key to a known identity.
    Reissue {
        #[arg(long)]
        id: String,
        #[arg(long)]
        validity: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time KeyGen/Encrypt/Decrypt against the plain baseline; writes CSV.
    Bench {
        #[arg(long)]
        max_attrs: usize,
        #[arg(long)]
        step: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 15)]
        trials: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Workflow(WorkflowError),
    /// Could not read an input file or make sense of an argument.
    Input(String),
    /// Could not write an output file.
    Output(String),
}

impl From<WorkflowError> for Failure {
    fn from(e: WorkflowError) -> Self {
        Failure::Workflow(e)
    }
}

impl From<cloudplus::store::StoreError> for Failure {
    fn from(e: cloudplus::store::StoreError) -> Self {
        Failure::Workflow(e.into())
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_key(path: &Path) -> Result<SecretKey, Failure> {
    Ok(workflow::decode_key(&read_input(path)?)?)
}

fn key_path(id: &str, out: Option<PathBuf>) -> Result<PathBuf, Failure> {
    match out {
        Some(p) => Ok(p),
        None if id.starts_with('.') || id.contains(['/', '\\']) => {
            Err(Failure::Input(format!("identity {id:?} is not a safe file name; pass --out")))
        }
        None => Ok(PathBuf::from(format!("{id}.key"))),
    }
}

fn write_key(path: &Path, sk: &SecretKey) -> Result<(), Failure> {
    write_file_atomic(path, &sk.to_bytes(), FileMode::Secret).map_err(|e| Failure::Output(e.to_string()))
}

struct Env {
    store: Option<PathBuf>,
    clock: Box<dyn Clock>,
    rng: ChaCha20Rng,
}

impl Env {
    fn store_dir(&self) -> Result<&Path, Failure> {
        self.store.as_deref().ok_or_else(|| Failure::Input("--store is required".into()))
    }

    fn open(&mut self) -> Result<CloudService, Failure> {
        let dir = self.store_dir()?.to_path_buf();
        Ok(CloudService::open(dir, &mut self.rng)?)
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let clock: Box<dyn Clock> = match &cli.now {
        Some(s) => Box::new(ManualClock::new(workflow::parse_now(s)?)),
        None => Box::new(SystemClock),
    };
    let rng = match cli.seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    };
    let mut env = Env { store: cli.store, clock, rng };

    match cli.cmd {
        Command::Setup { lifetime_epochs, genesis } => {
            let genesis = parse_date(&genesis).map_err(|_| Failure::Input(format!("bad --genesis {genesis:?}")))?;
            let dir = env.store_dir()?.to_path_buf();
            let svc = workflow::setup(&dir, genesis, lifetime_epochs, &mut env.rng)?;
            println!("initialized store {} lifetime {lifetime_epochs} epochs", svc.root().display());
        }
        Command::Register { id, attrs, validity, out } => {
            let attrs = workflow::parse_attrs(&attrs)?;
            let path = key_path(&id, out)?;
            let svc = env.open()?;
            let sk = workflow::register(&svc, &id, &attrs, validity, env.clock.now(), &mut env.rng)?;
            write_key(&path, &sk)?;
            println!("registered {id} expires-epoch {} key {}", sk.ten.expiry_epoch(), path.display());
        }
        Command::Outsource { file, policy } => {
            let bytes = read_input(&file)?;
            let hint = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let svc = env.open()?;
            let oid = workflow::outsource(&svc, &bytes, &policy, &hint, env.clock.now(), &mut env.rng)?;
            println!("{oid}");
        }
        Command::Access { key, object, out } => {
            let sk = read_key(&key)?;
            let svc = env.open()?;
            let file = workflow::access(&svc, &sk, &object, env.clock.now())?;
            write_file_atomic(&out, &file, FileMode::Public).map_err(|e| Failure::Output(e.to_string()))?;
            println!("wrote {} bytes to {}", file.len(), out.display());
        }
        Command::Trace { leaked } => {
            let bytes = read_input(&leaked)?;
            let svc = env.open()?;
            match workflow::trace(&svc, &bytes, env.clock.now(), &mut env.rng)? {
                TraceResult::Revoked { id, rl_version } => println!("traced {id} revoked rl-version {rl_version}"),
                TraceResult::NoTraceReq => println!("noTraceReq"),
            }
        }
        Command::Revoke { id } => {
            let svc = env.open()?;
            let v = workflow::revoke(&svc, &id, env.clock.now(), &mut env.rng)?;
            println!("revoked {id} rl-version {v}");
        }
        Command::Audit { accused, leaked } => {
            let accused = read_key(&accused)?;
            let leaked = read_key(&leaked)?;
            let svc = env.open()?;
            let outcome = workflow::audit(&svc, &accused, &leaked, cli.auditors, env.clock.now(), &mut env.rng)?;
            println!("{}", outcome.report);
            if let Some((id, v)) = outcome.revoked {
                eprintln!("guilty: revoked {id} rl-version {v}");
                return Ok(EXIT_GUILTY);
            }
        }
        Command::Reissue { id, validity, out } => {
            let path = key_path(&id, out)?;
            let svc = env.open()?;
            let sk = workflow::reissue(&svc, &id, validity, env.clock.now(), &mut env.rng)?;
            write_key(&path, &sk)?;
            println!("reissued {id} expires-epoch {} key {}", sk.ten.expiry_epoch(), path.display());
        }
        Command::Bench { max_attrs, step, out, trials } => {
            let cfg = BenchConfig { max_n: max_attrs, step, trials, ..BenchConfig::default() };
            let csv = workflow::bench(&cfg, &mut env.rng)?;
            write_file_atomic(&out, csv.as_bytes(), FileMode::Public).map_err(|e| Failure::Output(e.to_string()))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_MALFORMED } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Workflow(e)) => {
            let code = match e.class() {
                ErrorClass::Denied => EXIT_DENIED,
                ErrorClass::Malformed => EXIT_MALFORMED,
                ErrorClass::Internal => EXIT_INTERNAL,
            };
            match e.denial_reason() {
                Some(reason) => eprintln!("access denied: {reason} ({e})"),
                None => eprintln!("error: {e}"),
            }
            ExitCode::from(code)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_MALFORMED)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
