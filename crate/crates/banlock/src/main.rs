use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use banlock::attack::{sat_attack, AttackOptions, AttackStatus, Oracle, RelaxedModelKind};
use banlock::cnf::solver::Budget;
use banlock::harness::{
    read_csv, run_sweep, summarize, write_csv, write_report, ExperimentSpec,
};
use banlock::locking::map::leb_lock;
use banlock::locking::{
    full_lock, key_from_string, key_to_string, verify_key, LockMetadata, LockedCircuit, Scheme,
    VerifyOutcome,
};
use banlock::netlist::bench::{parse_bench, write_bench};
use banlock::netlist::Netlist;

#[derive(Parser)]
#[command(
    name = "banlock",
    about = "Lock combinational netlists (Full-Lock, logic-enhanced Banyan) and attack them with the miter-based SAT attack",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    #[value(name = "full-lock")]
    FullLock,
    Leb,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::FullLock => Scheme::FullLock,
            SchemeArg::Leb => Scheme::Leb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Exact,
    #[value(name = "a2a-mux")]
    A2aMux,
    #[value(name = "a2a-edge")]
    A2aEdge,
    #[value(name = "a2ax-mux")]
    A2axMux,
    #[value(name = "a2ax-edge")]
    A2axEdge,
}

impl From<ModelArg> for RelaxedModelKind {
    fn from(m: ModelArg) -> RelaxedModelKind {
        match m {
            ModelArg::Exact => RelaxedModelKind::Exact,
            ModelArg::A2aMux => RelaxedModelKind::A2aMux,
            ModelArg::A2aEdge => RelaxedModelKind::A2aEdge,
            ModelArg::A2axMux => RelaxedModelKind::A2axMux,
            ModelArg::A2axEdge => RelaxedModelKind::A2axEdge,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lock a circuit and write the locked netlist plus key/metadata sidecars.
    Lock {
        #[arg(long)]
        scheme: SchemeArg,
        #[arg(long)]
        width: u32,
        #[arg(long, default_value_t = 2)]
        lut_arity: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Correct-key sidecar path (default: <out stem>.key).
        #[arg(long)]
        key: Option<PathBuf>,
        /// Metadata sidecar path (default: <out stem>.meta).
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Attack a locked circuit; the oracle is the locked netlist under
    /// its correct key.
    Attack {
        #[arg(long, default_value = "exact")]
        model: ModelArg,
        #[arg(long, default_value_t = false)]
        sym_break: bool,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        /// Per-solve conflict cap.
        #[arg(long)]
        conflicts: Option<u64>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Correct-key file backing the oracle.
        #[arg(long)]
        key: PathBuf,
        /// Metadata sidecar (default: <in stem>.meta).
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Where to write the recovered key (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the per-iteration DI/DO trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a key: exit 0 when locked-with-key matches the original.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        key: PathBuf,
        /// The reference (unlocked) netlist.
        #[arg(long)]
        original: PathBuf,
        /// Metadata sidecar (default: <in stem>.meta).
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Run a sweep grid described by a TOML spec; write CSV records.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the spec's parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate a sweep CSV into per-cell medians.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn sidecar(base: &Path, ext: &str) -> PathBuf {
    base.with_extension(ext)
}

fn read_netlist(path: &Path) -> Result<Netlist, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_bench(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_key(path: &Path) -> Result<Vec<bool>, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    key_from_string(&text).ok_or_else(|| format!("{}: not a binary key string", path.display()))
}

fn read_meta(path: &Path) -> Result<LockMetadata, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Lock {
            scheme,
            width,
            lut_arity,
            input,
            seed,
            out,
            key,
            meta,
        } => {
            let host = read_netlist(&input)?;
            let scheme: Scheme = scheme.into();
            let lc = match scheme {
                Scheme::FullLock => full_lock(&host, width, lut_arity, seed),
                Scheme::Leb => leb_lock(&host, width, seed),
            }
            .map_err(|e| e.to_string())?;
            write_file(&out, &write_bench(&lc.locked))?;
            let key_path = key.unwrap_or_else(|| sidecar(&out, "key"));
            write_file(&key_path, &(key_to_string(&lc.correct_key) + "\n"))?;
            let meta_path = meta.unwrap_or_else(|| sidecar(&out, "meta"));
            let meta_text =
                toml::to_string(&lc.meta).map_err(|e| format!("metadata: {e}"))?;
            write_file(&meta_path, &meta_text)?;
            println!(
                "locked {} with {} width {}: {} key bits -> {}",
                input.display(),
                scheme,
                width,
                lc.correct_key.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack {
            model,
            sym_break,
            budget,
            conflicts,
            input,
            key,
            meta,
            out,
            trace,
        } => {
            let locked = read_netlist(&input)?;
            let correct_key = read_key(&key)?;
            let meta_path = meta.unwrap_or_else(|| sidecar(&input, "meta"));
            let meta = read_meta(&meta_path)?;
            let lc = LockedCircuit {
                locked,
                correct_key,
                meta,
            };
            let oracle = Oracle::from_locked(&lc);
            let opts = AttackOptions {
                model: model.into(),
                sym_break,
                wall: budget.map(Duration::from_secs_f64),
                conflicts,
            };
            let result = sat_attack(&lc, &oracle, &opts).map_err(|e| e.to_string())?;
            println!(
                "status={} iterations={} wall_ms={} key_vars={} total_vars={} clauses={}",
                result.status,
                result.iterations,
                result.wall.as_millis(),
                result.key_vars,
                result.total_vars,
                result.clauses
            );
            if let Some(path) = trace {
                let mut buf = Vec::new();
                result.write_trace(&mut buf).map_err(|e| e.to_string())?;
                write_file(&path, &String::from_utf8_lossy(&buf))?;
            }
            match (result.status, result.key) {
                (AttackStatus::KeyFound, Some(found)) => {
                    let text = key_to_string(&found) + "\n";
                    match out {
                        Some(path) => write_file(&path, &text)?,
                        None => print!("{text}"),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                (AttackStatus::Timeout, _) => Ok(ExitCode::SUCCESS),
                _ => Ok(ExitCode::from(1)),
            }
        }
        Command::Verify {
            input,
            key,
            original,
            meta,
        } => {
            let locked = read_netlist(&input)?;
            let reference = read_netlist(&original)?;
            let key_bits = read_key(&key)?;
            let meta_path = meta.unwrap_or_else(|| sidecar(&input, "meta"));
            let meta = read_meta(&meta_path)?;
            let lc = LockedCircuit {
                locked,
                correct_key: key_bits.clone(),
                meta,
            };
            match verify_key(&lc, &key_bits, &reference, &Budget::UNLIMITED)
                .map_err(|e| e.to_string())?
            {
                VerifyOutcome::Pass => {
                    println!("PASS");
                    Ok(ExitCode::SUCCESS)
                }
                VerifyOutcome::Counterexample(bits) => {
                    let vector: String =
                        bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    println!("FAIL counterexample={vector}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Sweep { spec, out, jobs } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| format!("{}: {e}", spec.display()))?;
            let mut spec = ExperimentSpec::from_toml(&text).map_err(|e| e.to_string())?;
            if let Some(jobs) = jobs {
                spec.jobs = jobs;
            }
            let records = run_sweep(&spec).map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            write_csv(&records, &mut buf).map_err(|e| e.to_string())?;
            let text = String::from_utf8_lossy(&buf).to_string();
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, out } => {
            let file = std::fs::File::open(&input)
                .map_err(|e| format!("{}: {e}", input.display()))?;
            let records = read_csv(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
            let summaries = summarize(&records);
            let mut buf = Vec::new();
            write_report(&summaries, &mut buf).map_err(|e| e.to_string())?;
            let text = String::from_utf8_lossy(&buf).to_string();
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
