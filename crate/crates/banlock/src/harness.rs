//! Experiment harness: declarative sweep grids over (circuit, scheme,
//! width, model, symmetry breaking, repetition), run records, and CSV
//! reporting. Runs never abort the grid; failures become ERROR rows.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::attack::{
    sat_attack, AttackOptions, AttackStatus, Oracle, RelaxedModelKind,
};
use crate::cnf::solver::Budget;
use crate::locking::map::leb_lock;
use crate::locking::{full_lock, verify_key, LockError, LockedCircuit, Scheme, VerifyOutcome};
use crate::netlist::{bench::parse_bench, Builder, GateKind, NetId, Netlist};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("spec: {0}")]
    Spec(String),
    #[error("cannot read {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("cannot parse {path}: {err}")]
    Parse { path: PathBuf, err: String },
}

fn default_reps() -> usize {
    3
}
fn default_arity() -> usize {
    2
}
fn default_jobs() -> usize {
    1
}
fn default_sym() -> Vec<bool> {
    vec![false]
}

/// Declarative sweep description, read from a TOML file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Circuit names, or `all` for the bundled corpus, or `standalone`
    /// for a synthetic host whose keyed block is the entire logic.
    pub circuits: Vec<String>,
    pub scheme: Scheme,
    pub widths: Vec<u32>,
    /// Attack models by name (`exact`, `a2a-mux`, ...).
    pub models: Vec<String>,
    #[serde(default = "default_arity")]
    pub lut_arity: usize,
    #[serde(default = "default_sym")]
    pub sym_break: Vec<bool>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed_base: u64,
    /// Per-run wall budget in seconds.
    #[serde(default)]
    pub budget_secs: Option<f64>,
    /// Per-solve conflict cap (deterministic runs).
    #[serde(default)]
    pub conflicts: Option<u64>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Benchmark directory; defaults to `benchmarks/`.
    #[serde(default)]
    pub bench_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<ExperimentSpec, HarnessError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions < 1 {
            return Err(HarnessError::Spec("repetitions must be >= 1".into()));
        }
        for &w in &self.widths {
            if w < 4 || !w.is_power_of_two() {
                return Err(HarnessError::Spec(format!(
                    "width {w} is not a power of two >= 4"
                )));
            }
        }
        if self.circuits.is_empty() || self.widths.is_empty() || self.models.is_empty() {
            return Err(HarnessError::Spec("empty grid dimension".into()));
        }
        for m in &self.models {
            if RelaxedModelKind::parse(m).is_none() {
                return Err(HarnessError::Spec(format!("unknown model `{m}`")));
            }
        }
        if !(2..=5).contains(&self.lut_arity) {
            return Err(HarnessError::Spec(format!(
                "lut_arity {} outside 2..=5",
                self.lut_arity
            )));
        }
        Ok(())
    }

    pub fn bench_dir(&self) -> PathBuf {
        self.bench_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("benchmarks"))
    }
}

/// Stable CSV schema; golden-tested.
pub const CSV_HEADER: &str =
    "circuit,scheme,width,lut_arity,model,sym_break,seed,status,wall_ms,iterations,key_vars,total_vars,clauses";

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub circuit: String,
    pub scheme: Scheme,
    pub width: u32,
    pub lut_arity: usize,
    pub model: String,
    pub sym_break: bool,
    pub seed: u64,
    pub status: String,
    pub wall_ms: u128,
    pub iterations: usize,
    pub key_vars: usize,
    pub total_vars: usize,
    pub clauses: usize,
}

impl RunRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.circuit,
            self.scheme,
            self.width,
            self.lut_arity,
            self.model,
            self.sym_break,
            self.seed,
            self.status,
            self.wall_ms,
            self.iterations,
            self.key_vars,
            self.total_vars,
            self.clauses
        )
    }

    pub fn from_csv_row(line: &str) -> Option<RunRecord> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return None;
        }
        Some(RunRecord {
            circuit: f[0].to_string(),
            scheme: match f[1] {
                "full-lock" => Scheme::FullLock,
                "leb" => Scheme::Leb,
                _ => return None,
            },
            width: f[2].parse().ok()?,
            lut_arity: f[3].parse().ok()?,
            model: f[4].to_string(),
            sym_break: f[5].parse().ok()?,
            seed: f[6].parse().ok()?,
            status: f[7].to_string(),
            wall_ms: f[8].parse().ok()?,
            iterations: f[9].parse().ok()?,
            key_vars: f[10].parse().ok()?,
            total_vars: f[11].parse().ok()?,
            clauses: f[12].parse().ok()?,
        })
    }
}

pub fn write_csv(records: &[RunRecord], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_row())?;
    }
    Ok(())
}

pub fn read_csv(r: impl BufRead) -> Result<Vec<RunRecord>, HarnessError> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Spec(e.to_string()))?;
        if i == 0 {
            if line.trim() != CSV_HEADER {
                return Err(HarnessError::Spec("unexpected CSV header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let rec = RunRecord::from_csv_row(&line)
            .ok_or_else(|| HarnessError::Spec(format!("bad CSV row {}", i + 1)))?;
        records.push(rec);
    }
    Ok(records)
}

/// The bundled corpus names covered by `circuits = ["all"]`.
pub const CORPUS_ALL: &[&str] = &[
    "c432", "c499", "c880", "c1355", "c1908", "c2670", "c3540", "c5315", "c6288", "c7552",
];

pub fn load_circuit(dir: &Path, name: &str) -> Result<Netlist, HarnessError> {
    let path = dir.join(format!("{name}.bench"));
    let text = std::fs::read_to_string(&path).map_err(|err| HarnessError::Io {
        path: path.clone(),
        err,
    })?;
    parse_bench(&text).map_err(|err| HarnessError::Parse {
        path,
        err: err.to_string(),
    })
}

/// Synthetic host for standalone-network experiments: the keyed block
/// is the entire logic. For Full-Lock a passthrough layer of gates
/// consuming each input once; for LEB a small random circuit with
/// enough gates to map.
pub fn standalone_host(scheme: Scheme, width: u32, lut_arity: usize, seed: u64) -> Netlist {
    match scheme {
        Scheme::FullLock => {
            let mut b = Builder::new();
            let inputs: Vec<NetId> = (0..width).map(|i| b.input(&format!("x{i}"))).collect();
            let kinds = [
                GateKind::And,
                GateKind::Or,
                GateKind::Xor,
                GateKind::Nand,
                GateKind::Nor,
            ];
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7374_616e);
            let count = width as usize / lut_arity;
            for j in 0..count {
                let fanin: Vec<NetId> = (0..lut_arity)
                    .map(|p| inputs[j * lut_arity + p])
                    .collect();
                let kind = kinds[rng.gen_range(0..kinds.len())].clone();
                let out = b.intern(&format!("y{j}"));
                b.drive(out, kind, fanin);
                b.mark_output(out);
            }
            b.finish().expect("standalone host is valid")
        }
        Scheme::Leb => {
            crate::testutil::random_netlist(seed ^ 0x6c65_62, width as usize, 6 * width as usize)
        }
    }
}

/// One grid cell.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub circuit: String,
    pub scheme: Scheme,
    pub width: u32,
    pub lut_arity: usize,
    pub model: RelaxedModelKind,
    pub sym_break: bool,
    pub seed: u64,
    pub budget_secs: Option<f64>,
    pub conflicts: Option<u64>,
}

/// Lock, attack, verify one cell. Never panics on expected failures;
/// the record's status says what happened.
pub fn run_cell(host: &Netlist, spec: &RunSpec) -> RunRecord {
    let mut record = RunRecord {
        circuit: spec.circuit.clone(),
        scheme: spec.scheme,
        width: spec.width,
        lut_arity: spec.lut_arity,
        model: spec.model.name().to_string(),
        sym_break: spec.sym_break,
        seed: spec.seed,
        status: AttackStatus::Error.to_string(),
        wall_ms: 0,
        iterations: 0,
        key_vars: 0,
        total_vars: 0,
        clauses: 0,
    };
    let locked: Result<LockedCircuit, LockError> = match spec.scheme {
        Scheme::FullLock => full_lock(host, spec.width, spec.lut_arity, spec.seed),
        Scheme::Leb => leb_lock(host, spec.width, spec.seed),
    };
    let lc = match locked {
        Ok(lc) => lc,
        Err(_) => return record,
    };
    let oracle = Oracle::from_locked(&lc);
    let opts = AttackOptions {
        model: spec.model,
        sym_break: spec.sym_break,
        wall: spec.budget_secs.map(Duration::from_secs_f64),
        conflicts: spec.conflicts,
    };
    match sat_attack(&lc, &oracle, &opts) {
        Err(_) => record,
        Ok(result) => {
            record.wall_ms = result.wall.as_millis();
            record.iterations = result.iterations;
            record.key_vars = result.key_vars;
            record.total_vars = result.total_vars;
            record.clauses = result.clauses;
            record.status = result.status.to_string();
            if result.status == AttackStatus::KeyFound {
                // End-to-end soundness: a found key must verify.
                let ok = matches!(
                    verify_key(&lc, result.key.as_ref().unwrap(), host, &Budget::UNLIMITED),
                    Ok(VerifyOutcome::Pass)
                );
                if !ok {
                    record.status = AttackStatus::Error.to_string();
                }
            }
            record
        }
    }
}

/// Run the whole grid. Repetitions use consecutive seeds so each draws
/// a fresh random key. Rows come back sorted on the cell coordinates.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<RunRecord>, HarnessError> {
    spec.validate()?;
    let dir = spec.bench_dir();
    let mut circuit_names: Vec<String> = Vec::new();
    for name in &spec.circuits {
        if name == "all" {
            circuit_names.extend(CORPUS_ALL.iter().map(|s| s.to_string()));
        } else {
            circuit_names.push(name.clone());
        }
    }
    // Pre-load real circuits once; standalone hosts depend on the cell.
    let mut hosts: Vec<(String, Option<Netlist>)> = Vec::new();
    for name in &circuit_names {
        if name == "standalone" {
            hosts.push((name.clone(), None));
        } else {
            hosts.push((name.clone(), Some(load_circuit(&dir, name)?)));
        }
    }
    let mut cells: Vec<(RunSpec, Option<&Netlist>)> = Vec::new();
    for (name, host) in &hosts {
        for &width in &spec.widths {
            for model in &spec.models {
                let model = RelaxedModelKind::parse(model).expect("validated");
                for &sym in &spec.sym_break {
                    if sym && !model.is_edge() {
                        continue;
                    }
                    for rep in 0..spec.repetitions {
                        cells.push((
                            RunSpec {
                                circuit: name.clone(),
                                scheme: spec.scheme,
                                width,
                                lut_arity: spec.lut_arity,
                                model,
                                sym_break: sym,
                                seed: spec.seed_base + rep as u64,
                                budget_secs: spec.budget_secs,
                                conflicts: spec.conflicts,
                            },
                            host.as_ref(),
                        ));
                    }
                }
            }
        }
    }
    let run_one = |(cell, host): &(RunSpec, Option<&Netlist>)| -> RunRecord {
        match host {
            Some(h) => run_cell(h, cell),
            None => {
                let h = standalone_host(cell.scheme, cell.width, cell.lut_arity, cell.seed);
                run_cell(&h, cell)
            }
        }
    };
    let mut records: Vec<RunRecord> = if spec.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| HarnessError::Spec(e.to_string()))?;
        pool.install(|| cells.par_iter().map(run_one).collect())
    } else {
        cells.iter().map(run_one).collect()
    };
    records.sort_by(|a, b| {
        (
            &a.circuit,
            a.width,
            &a.model,
            a.sym_break,
            a.seed,
        )
            .cmp(&(&b.circuit, b.width, &b.model, b.sym_break, b.seed))
    });
    Ok(records)
}

/// Aggregate rows per cell: status counts and wall-time median/min/max.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub circuit: String,
    pub scheme: Scheme,
    pub width: u32,
    pub lut_arity: usize,
    pub model: String,
    pub sym_break: bool,
    pub runs: usize,
    pub key_found: usize,
    pub timeouts: usize,
    pub errors: usize,
    pub median_wall_ms: u128,
    pub min_wall_ms: u128,
    pub max_wall_ms: u128,
}

pub const REPORT_HEADER: &str = "circuit,scheme,width,lut_arity,model,sym_break,runs,key_found,timeouts,errors,median_wall_ms,min_wall_ms,max_wall_ms";

pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, String, u32, usize, String, bool), Vec<&RunRecord>> =
        BTreeMap::new();
    for r in records {
        groups
            .entry((
                r.circuit.clone(),
                r.scheme.to_string(),
                r.width,
                r.lut_arity,
                r.model.clone(),
                r.sym_break,
            ))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((circuit, _scheme, width, lut_arity, model, sym_break), rows)| {
            let mut walls: Vec<u128> = rows.iter().map(|r| r.wall_ms).collect();
            walls.sort_unstable();
            CellSummary {
                circuit,
                scheme: rows[0].scheme,
                width,
                lut_arity,
                model,
                sym_break,
                runs: rows.len(),
                key_found: rows.iter().filter(|r| r.status == "KEY_FOUND").count(),
                timeouts: rows.iter().filter(|r| r.status == "TIMEOUT").count(),
                errors: rows.iter().filter(|r| r.status == "ERROR").count(),
                median_wall_ms: walls[walls.len() / 2],
                min_wall_ms: walls[0],
                max_wall_ms: *walls.last().unwrap(),
            }
        })
        .collect()
}

pub fn write_report(summaries: &[CellSummary], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.circuit,
            s.scheme,
            s.width,
            s.lut_arity,
            s.model,
            s.sym_break,
            s.runs,
            s.key_found,
            s.timeouts,
            s.errors,
            s.median_wall_ms,
            s.min_wall_ms,
            s.max_wall_ms
        )?;
    }
    Ok(())
}
