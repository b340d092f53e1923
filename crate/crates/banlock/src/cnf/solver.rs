//! The incremental SAT-solving contract and its backends.
//!
//! Construction code appends clauses to the session's [`CnfFormula`];
//! [`SolverSession::solve`] syncs the new clauses into the backend and
//! solves under assumptions. Backends are pluggable: the embedded
//! CaDiCaL backend is the default, and any external process speaking
//! DIMACS can be used instead (assumptions become appended unit
//! clauses). A session must not be shared across threads; distinct
//! sessions are fully independent.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::{CnfFormula, Lit, Var};

/// Per-solve resource budget. Both limits may be combined; either ends
/// the solve with [`SolveOutcome::Timeout`]. Conflict caps give
/// reproducible runs; wall-clock caps match human patience.
#[derive(Clone, Copy, Debug, Default)]
pub struct Budget {
    pub wall: Option<Duration>,
    pub conflicts: Option<u64>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        wall: None,
        conflicts: None,
    };

    pub fn wall_secs(secs: f64) -> Budget {
        Budget {
            wall: Some(Duration::from_secs_f64(secs)),
            conflicts: None,
        }
    }

    pub fn conflicts(n: u64) -> Budget {
        Budget {
            wall: None,
            conflicts: Some(n),
        }
    }

    pub fn is_unlimited(&self) -> bool {
        self.wall.is_none() && self.conflicts.is_none()
    }
}

/// A complete satisfying assignment, indexed by variable.
#[derive(Clone, Debug)]
pub struct Model {
    values: Vec<Option<bool>>,
}

impl Model {
    pub fn new(values: Vec<Option<bool>>) -> Model {
        Model { values }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.values
            .get(var.number() as usize - 1)
            .copied()
            .flatten()
    }

    /// Truth value of a literal; unassigned variables default to false.
    pub fn lit_value(&self, lit: Lit) -> bool {
        let v = self.value(lit.var()).unwrap_or(false);
        if lit.is_positive() {
            v
        } else {
            !v
        }
    }

    pub fn bits(&self, lits: &[Lit]) -> Vec<bool> {
        lits.iter().map(|&l| self.lit_value(l)).collect()
    }
}

#[derive(Debug)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    /// The budget was exhausted before an answer.
    Timeout,
}

impl SolveOutcome {
    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveOutcome::Sat(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat)
    }
}

/// Backend failures are faults, never misreported as UNSAT.
#[derive(Debug, Error)]
pub enum SolverFault {
    #[error("solver backend fault: {0}")]
    Backend(String),
    #[error("{backend} backend does not support a {what} budget")]
    UnsupportedBudget {
        backend: &'static str,
        what: &'static str,
    },
    #[error("external solver i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver produced unparseable output: {0}")]
    BadOutput(String),
}

/// Incremental solving backend: add-only clauses, solving under
/// assumptions, budget enforcement.
pub trait SatBackend {
    fn name(&self) -> &'static str;
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve(
        &mut self,
        num_vars: u32,
        assumptions: &[Lit],
        budget: &Budget,
    ) -> Result<SolveOutcome, SolverFault>;
}

/// An incremental solving context holding a [`CnfFormula`].
///
/// Clauses and variables are created on the owned formula; `solve`
/// pushes anything not yet seen by the backend, so the formula and the
/// backend always agree. Learned state persists across solves.
pub struct SolverSession {
    formula: CnfFormula,
    backend: Box<dyn SatBackend>,
    synced_clauses: usize,
}

impl SolverSession {
    pub fn new(backend: Box<dyn SatBackend>) -> SolverSession {
        SolverSession {
            formula: CnfFormula::new(),
            backend,
            synced_clauses: 0,
        }
    }

    /// A session backed by the embedded CaDiCaL solver.
    pub fn embedded() -> SolverSession {
        SolverSession::new(Box::new(CadicalBackend::new()))
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    pub fn formula_mut(&mut self) -> &mut CnfFormula {
        &mut self.formula
    }

    pub fn fresh_var(&mut self) -> Var {
        self.formula.fresh_var()
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.formula.add_clause(lits);
    }

    pub fn num_vars(&self) -> u32 {
        self.formula.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.formula.num_clauses()
    }

    pub fn solve(
        &mut self,
        assumptions: &[Lit],
        budget: &Budget,
    ) -> Result<SolveOutcome, SolverFault> {
        while self.synced_clauses < self.formula.num_clauses() {
            self.backend.add_clause(self.formula.clause(self.synced_clauses));
            self.synced_clauses += 1;
        }
        self.backend
            .solve(self.formula.num_vars(), assumptions, budget)
    }
}

/// Embedded CDCL backend over the CaDiCaL library.
pub struct CadicalBackend {
    solver: cadical::Solver,
}

impl Default for CadicalBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl CadicalBackend {
    pub fn new() -> CadicalBackend {
        CadicalBackend {
            solver: cadical::Solver::new(),
        }
    }
}

impl SatBackend for CadicalBackend {
    fn name(&self) -> &'static str {
        "cadical"
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.solver.add_clause(lits.iter().map(|l| l.to_dimacs()));
    }

    fn solve(
        &mut self,
        num_vars: u32,
        assumptions: &[Lit],
        budget: &Budget,
    ) -> Result<SolveOutcome, SolverFault> {
        match budget.wall {
            Some(wall) => self
                .solver
                .set_callbacks(Some(cadical::Timeout::new(wall.as_secs_f32()))),
            None => self.solver.set_callbacks(None),
        }
        let conflicts = budget
            .conflicts
            .map(|c| c.min(i32::MAX as u64) as i32)
            .unwrap_or(-1);
        self.solver
            .set_limit("conflicts", conflicts)
            .map_err(|e| SolverFault::Backend(e.to_string()))?;
        let res = self
            .solver
            .solve_with(assumptions.iter().map(|l| l.to_dimacs()));
        match res {
            Some(true) => {
                let values = (1..=num_vars)
                    .map(|v| self.solver.value(v as i32))
                    .collect();
                Ok(SolveOutcome::Sat(Model::new(values)))
            }
            Some(false) => Ok(SolveOutcome::Unsat),
            None => Ok(SolveOutcome::Timeout),
        }
    }
}

/// External solver process speaking DIMACS on a file argument and the
/// SAT-competition `s `/`v ` output convention. Assumptions are appended
/// to the dump as unit clauses; learned state does not persist between
/// solves, which still satisfies the session contract.
pub struct ExternalDimacsBackend {
    command: Vec<String>,
    clauses: CnfFormula,
    workdir: PathBuf,
    counter: u64,
}

impl ExternalDimacsBackend {
    pub fn new(command: Vec<String>) -> ExternalDimacsBackend {
        assert!(!command.is_empty(), "external solver command is empty");
        ExternalDimacsBackend {
            command,
            clauses: CnfFormula::new(),
            workdir: std::env::temp_dir(),
            counter: 0,
        }
    }

    fn dump(&mut self, num_vars: u32, assumptions: &[Lit]) -> Result<PathBuf, SolverFault> {
        self.counter += 1;
        let path = self.workdir.join(format!(
            "banlock-{}-{}.cnf",
            std::process::id(),
            self.counter
        ));
        let mut text = format!(
            "p cnf {} {}\n",
            num_vars,
            self.clauses.num_clauses() + assumptions.len()
        );
        for clause in self.clauses.iter() {
            for lit in clause {
                text.push_str(&format!("{} ", lit.to_dimacs()));
            }
            text.push_str("0\n");
        }
        for a in assumptions {
            text.push_str(&format!("{} 0\n", a.to_dimacs()));
        }
        let mut file = std::fs::File::create(&path)?;
        file.write_all(text.as_bytes())?;
        Ok(path)
    }
}

impl SatBackend for ExternalDimacsBackend {
    fn name(&self) -> &'static str {
        "external-dimacs"
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        let max_var = lits.iter().map(|l| l.var().number()).max().unwrap_or(0);
        while self.clauses.num_vars() < max_var {
            self.clauses.fresh_var();
        }
        self.clauses.add_clause(lits);
    }

    fn solve(
        &mut self,
        num_vars: u32,
        assumptions: &[Lit],
        budget: &Budget,
    ) -> Result<SolveOutcome, SolverFault> {
        if budget.conflicts.is_some() {
            return Err(SolverFault::UnsupportedBudget {
                backend: self.name(),
                what: "conflict",
            });
        }
        let path = self.dump(num_vars, assumptions)?;
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(&path)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let started = Instant::now();
        let status = loop {
            match child.try_wait()? {
                Some(status) => break status,
                None => {
                    if let Some(wall) = budget.wall {
                        if started.elapsed() > wall {
                            let _ = child.kill();
                            let _ = child.wait();
                            let _ = std::fs::remove_file(&path);
                            return Ok(SolveOutcome::Timeout);
                        }
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
            }
        };
        let _ = status;
        let mut output = String::new();
        use std::io::Read;
        child
            .stdout
            .take()
            .expect("stdout piped")
            .read_to_string(&mut output)?;
        let _ = std::fs::remove_file(&path);
        parse_solver_output(&output, num_vars)
    }
}

fn parse_solver_output(output: &str, num_vars: u32) -> Result<SolveOutcome, SolverFault> {
    let mut answer: Option<bool> = None;
    let mut values = vec![None; num_vars as usize];
    for line in output.lines() {
        if let Some(rest) = line.strip_prefix("s ") {
            answer = match rest.trim() {
                "SATISFIABLE" => Some(true),
                "UNSATISFIABLE" => Some(false),
                "UNKNOWN" => return Ok(SolveOutcome::Timeout),
                other => {
                    return Err(SolverFault::BadOutput(format!("status line `{other}`")))
                }
            };
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let code: i64 = tok
                    .parse()
                    .map_err(|_| SolverFault::BadOutput(format!("model token `{tok}`")))?;
                if code == 0 {
                    continue;
                }
                let var = code.unsigned_abs() as usize;
                if var <= num_vars as usize {
                    values[var - 1] = Some(code > 0);
                }
            }
        }
    }
    match answer {
        Some(true) => Ok(SolveOutcome::Sat(Model::new(values))),
        Some(false) => Ok(SolveOutcome::Unsat),
        None => Err(SolverFault::BadOutput("missing `s` status line".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sat_output() {
        let out = "c comment\ns SATISFIABLE\nv 1 -2 3 0\n";
        match parse_solver_output(out, 3).unwrap() {
            SolveOutcome::Sat(m) => {
                assert_eq!(m.value(Var::new(1)), Some(true));
                assert_eq!(m.value(Var::new(2)), Some(false));
                assert_eq!(m.value(Var::new(3)), Some(true));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn parses_unsat_output() {
        assert!(parse_solver_output("s UNSATISFIABLE\n", 2)
            .unwrap()
            .is_unsat());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_solver_output("hello\n", 2).is_err());
    }
}
