//! The miter-based SAT attack: two key-differentiated copies of the
//! (possibly relaxed) locked circuit share their inputs; each SAT call
//! yields a differentiating input, the oracle supplies the true output,
//! and the pair constrains both copies until no differentiating input
//! remains. Any key satisfying the accumulated relationships is then
//! functionally correct.

pub mod model;
pub mod sym;

use std::collections::HashMap;
use std::io::Write;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::solver::{Budget, SolveOutcome, SolverFault, SolverSession};
use crate::cnf::{encode_gate, Lit};
use crate::locking::{LockedCircuit, Scheme};
use crate::netlist::{GateKind, Netlist};

pub use model::{recover_scheme_key, AttackModel, RelaxedKey, RelaxedModelKind};

// Functional key verification lives with the locking machinery.
pub use crate::locking::{verify_key, verify_lock, VerifyOutcome};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("locked circuit has no key inputs")]
    NoKeyInputs,
    #[error("{0} locking rejects relaxed models; use the exact model")]
    RelaxationUnsupported(Scheme),
    #[error("symmetry breaking requires an edge-based relaxed model")]
    SymBreakNeedsEdge,
    #[error("model substitution failed: {0}")]
    Substitution(String),
    #[error(transparent)]
    Solver(#[from] SolverFault),
    #[error("oracle input width mismatch")]
    OracleWidth,
    #[error("no routable key consistent with the learned relationships")]
    Unroutable,
}

/// Black-box access to correct circuit behavior. Backed by simulation of
/// either the original netlist or the locked netlist under its correct
/// key; the key is never exposed.
pub struct Oracle {
    netlist: Netlist,
    key: Vec<bool>,
    /// Primary-input positions, by name, for attack-order queries.
    by_name: HashMap<String, usize>,
}

impl Oracle {
    pub fn from_reference(netlist: Netlist) -> Oracle {
        assert!(
            netlist.key_inputs().is_empty(),
            "reference oracle must be key-free"
        );
        let by_name = index_inputs(&netlist);
        Oracle {
            netlist,
            key: Vec::new(),
            by_name,
        }
    }

    pub fn from_locked(lc: &LockedCircuit) -> Oracle {
        let by_name = index_inputs(&lc.locked);
        Oracle {
            netlist: lc.locked.clone(),
            key: lc.correct_key.clone(),
            by_name,
        }
    }

    pub fn input_count(&self) -> usize {
        self.netlist.primary_inputs().len()
    }

    /// Query outputs for an input assignment given in the oracle's own
    /// primary-input order.
    pub fn query(&self, inputs: &[bool]) -> Result<Vec<bool>, AttackError> {
        if inputs.len() != self.input_count() {
            return Err(AttackError::OracleWidth);
        }
        let mut assignment = inputs.to_vec();
        assignment.extend_from_slice(&self.key);
        self.netlist
            .simulate(&assignment)
            .map_err(|_| AttackError::OracleWidth)
    }

    /// Position of each of `names` in this oracle's input order.
    fn order_for(&self, names: &[String]) -> Result<Vec<usize>, AttackError> {
        names
            .iter()
            .map(|n| self.by_name.get(n).copied().ok_or(AttackError::OracleWidth))
            .collect()
    }
}

fn index_inputs(n: &Netlist) -> HashMap<String, usize> {
    n.primary_inputs()
        .iter()
        .enumerate()
        .map(|(i, &id)| (n.net_name(id).to_string(), i))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AttackStatus {
    KeyFound,
    Timeout,
    Error,
}

impl std::fmt::Display for AttackStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AttackStatus::KeyFound => "KEY_FOUND",
            AttackStatus::Timeout => "TIMEOUT",
            AttackStatus::Error => "ERROR",
        })
    }
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iteration: usize,
    pub di: Vec<bool>,
    pub dout: Vec<bool>,
    pub cumulative_clauses: usize,
    pub elapsed: Duration,
}

#[derive(Debug)]
pub struct AttackResult {
    pub status: AttackStatus,
    /// Scheme-native recovered key on `KeyFound`.
    pub key: Option<Vec<bool>>,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub wall: Duration,
    pub key_vars: usize,
    pub total_vars: usize,
    pub clauses: usize,
    pub error: Option<String>,
}

impl AttackResult {
    /// Line-delimited trace: iteration, DI (hex), DO (hex), cumulative
    /// clauses, elapsed ms.
    pub fn write_trace(&self, w: &mut impl Write) -> std::io::Result<()> {
        for rec in &self.trace {
            writeln!(
                w,
                "{},{},{},{},{}",
                rec.iteration,
                bits_to_hex(&rec.di),
                bits_to_hex(&rec.dout),
                rec.cumulative_clauses,
                rec.elapsed.as_millis()
            )?;
        }
        Ok(())
    }
}

/// Bit vector (index 0 = LSB) rendered as fixed-width hex.
pub fn bits_to_hex(bits: &[bool]) -> String {
    let digits = bits.len().div_ceil(4).max(1);
    let mut out = vec![0u8; digits];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 4] |= 1 << (i % 4);
        }
    }
    let mut s = String::with_capacity(digits + 2);
    s.push_str("0x");
    for d in out.iter().rev() {
        s.push(char::from_digit(*d as u32, 16).unwrap());
    }
    s
}

/// Attack configuration.
#[derive(Clone, Debug)]
pub struct AttackOptions {
    pub model: RelaxedModelKind,
    pub sym_break: bool,
    /// Whole-attack wall-clock budget.
    pub wall: Option<Duration>,
    /// Per-solve conflict cap (deterministic timeouts).
    pub conflicts: Option<u64>,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            model: RelaxedModelKind::Exact,
            sym_break: false,
            wall: None,
            conflicts: None,
        }
    }
}

/// The miter: two key-renamed copies of the modeled circuit with shared
/// inputs, output comparators, and the difference asserted. Learned IO
/// pairs are conjoined incrementally.
pub struct MiterInstance {
    model: AttackModel,
    session: SolverSession,
    inputs: Vec<Lit>,
    keys: [Vec<Lit>; 2],
    io_pairs: Vec<(Vec<bool>, Vec<bool>)>,
    const_true: Lit,
}

impl MiterInstance {
    pub fn build(lc: &LockedCircuit, opts: &AttackOptions) -> Result<MiterInstance, AttackError> {
        if lc.locked.key_inputs().is_empty() {
            return Err(AttackError::NoKeyInputs);
        }
        let mut model = AttackModel::relaxed(lc, opts.model)?;
        if opts.sym_break {
            if !opts.model.is_edge() {
                return Err(AttackError::SymBreakNeedsEdge);
            }
            model.sym_break = true;
        }
        let mut session = SolverSession::embedded();
        let f = session.formula_mut();
        let const_true = f.fresh_var().positive();
        f.add_unit(const_true);
        let inputs = f.fresh_lits(model.primary_input_count());
        let keys = [f.fresh_lits(model.key_count()), f.fresh_lits(model.key_count())];
        model.key_invariants(f, &keys[0]);
        model.key_invariants(f, &keys[1]);
        let y0 = model.instantiate(f, &keys[0], &inputs);
        let y1 = model.instantiate(f, &keys[1], &inputs);
        let mut diffs = Vec::with_capacity(y0.len());
        for (&a, &b) in y0.iter().zip(&y1) {
            let d = f.fresh_var().positive();
            encode_gate(f, &GateKind::Xor, d, &[a, b]);
            diffs.push(d);
        }
        f.add_clause(&diffs);
        Ok(MiterInstance {
            model,
            session,
            inputs,
            keys,
            io_pairs: Vec::new(),
            const_true,
        })
    }

    pub fn model(&self) -> &AttackModel {
        &self.model
    }

    pub fn num_clauses(&self) -> usize {
        self.session.num_clauses()
    }

    pub fn num_vars(&self) -> usize {
        self.session.num_vars() as usize
    }

    /// Conjoin an extra constraint over the miter variables.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.session.add_clause(lits);
    }

    fn const_lits(&self, bits: &[bool]) -> Vec<Lit> {
        bits.iter()
            .map(|&b| if b { self.const_true } else { !self.const_true })
            .collect()
    }

    /// Solve for a differentiating input under the accumulated
    /// constraints.
    pub fn solve_differentiating(
        &mut self,
        budget: &Budget,
    ) -> Result<DiOutcome, AttackError> {
        match self.session.solve(&[], budget)? {
            SolveOutcome::Sat(m) => Ok(DiOutcome::Differentiating(m.bits(&self.inputs))),
            SolveOutcome::Unsat => Ok(DiOutcome::Exhausted),
            SolveOutcome::Timeout => Ok(DiOutcome::Timeout),
        }
    }

    /// Record an IO pair: both copies must reproduce `dout` on `di`.
    pub fn add_io_constraint(&mut self, di: &[bool], dout: &[bool]) {
        let di_lits = self.const_lits(di);
        for copy in 0..2 {
            let keys = self.keys[copy].clone();
            let f = self.session.formula_mut();
            let y = self.model.instantiate(f, &keys, &di_lits);
            for (&lit, &want) in y.iter().zip(dout) {
                f.add_unit(if want { lit } else { !lit });
            }
        }
        self.io_pairs.push((di.to_vec(), dout.to_vec()));
    }

    /// Solve the accumulated IO relationships alone for a witness key,
    /// then map it to the native key space. Relaxed keys that are not
    /// routable through the real network are blocked and re-solved.
    pub fn extract_key(&mut self, budget: &Budget) -> Result<KeyOutcome, AttackError> {
        let mut session = SolverSession::embedded();
        let f = session.formula_mut();
        let const_true = f.fresh_var().positive();
        f.add_unit(const_true);
        let keys = f.fresh_lits(self.model.key_count());
        self.model.key_invariants(f, &keys);
        let pairs = self.io_pairs.clone();
        for (di, dout) in &pairs {
            let di_lits: Vec<Lit> = di
                .iter()
                .map(|&b| if b { const_true } else { !const_true })
                .collect();
            let f = session.formula_mut();
            let y = self.model.instantiate(f, &keys, &di_lits);
            for (&lit, &want) in y.iter().zip(dout) {
                f.add_unit(if want { lit } else { !lit });
            }
        }
        // Blocking loop: each non-routable routing choice is excluded.
        const MAX_BLOCKED: usize = 10_000;
        for _ in 0..MAX_BLOCKED {
            match session.solve(&[], budget)? {
                SolveOutcome::Timeout => return Ok(KeyOutcome::Timeout),
                SolveOutcome::Unsat => return Err(AttackError::Unroutable),
                SolveOutcome::Sat(m) => {
                    let bits = m.bits(&keys);
                    let decoded = self.model.decode_key(&bits);
                    let native = match &self.model.back_map {
                        None => match &decoded {
                            RelaxedKey::Native(k) => Some(k.clone()),
                            RelaxedKey::Routed { .. } => unreachable!("exact model"),
                        },
                        Some(back) => recover_scheme_key(&decoded, back),
                    };
                    match native {
                        Some(key) => return Ok(KeyOutcome::Key(key)),
                        None => {
                            let proj = self.model.routing_projection(&keys, &decoded);
                            let block: Vec<Lit> = proj.iter().map(|&l| !l).collect();
                            session.add_clause(&block);
                        }
                    }
                }
            }
        }
        Err(AttackError::Unroutable)
    }
}

pub enum DiOutcome {
    Differentiating(Vec<bool>),
    Exhausted,
    Timeout,
}

pub enum KeyOutcome {
    Key(Vec<bool>),
    Timeout,
}

/// Run the full miter-based attack loop against an oracle.
pub fn sat_attack(
    lc: &LockedCircuit,
    oracle: &Oracle,
    opts: &AttackOptions,
) -> Result<AttackResult, AttackError> {
    let started = Instant::now();
    let mut miter = MiterInstance::build(lc, opts)?;
    // The model's input order may differ from the oracle's; translate.
    let order = oracle.order_for(&miter.model.input_names())?;
    let mut trace = Vec::new();
    let deadline = opts.wall.map(|w| started + w);

    let result = |status: AttackStatus,
                  key: Option<Vec<bool>>,
                  error: Option<String>,
                  trace: Vec<IterationRecord>,
                  miter: &MiterInstance| AttackResult {
        status,
        key,
        iterations: trace.len(),
        trace,
        wall: started.elapsed(),
        key_vars: miter.model.key_count(),
        total_vars: miter.num_vars(),
        clauses: miter.num_clauses(),
        error,
    };

    loop {
        let budget = match remaining(deadline, opts.conflicts) {
            Some(b) => b,
            None => return Ok(result(AttackStatus::Timeout, None, None, trace, &miter)),
        };
        match miter.solve_differentiating(&budget)? {
            DiOutcome::Timeout => {
                return Ok(result(AttackStatus::Timeout, None, None, trace, &miter));
            }
            DiOutcome::Differentiating(di) => {
                let mut oracle_in = vec![false; di.len()];
                for (pos, &bit) in order.iter().zip(&di) {
                    oracle_in[*pos] = bit;
                }
                let dout_oracle = oracle.query(&oracle_in)?;
                miter.add_io_constraint(&di, &dout_oracle);
                trace.push(IterationRecord {
                    iteration: trace.len() + 1,
                    di,
                    dout: dout_oracle,
                    cumulative_clauses: miter.num_clauses(),
                    elapsed: started.elapsed(),
                });
            }
            DiOutcome::Exhausted => {
                let budget = match remaining(deadline, opts.conflicts) {
                    Some(b) => b,
                    None => {
                        return Ok(result(AttackStatus::Timeout, None, None, trace, &miter))
                    }
                };
                return match miter.extract_key(&budget) {
                    Ok(KeyOutcome::Key(key)) => {
                        Ok(result(AttackStatus::KeyFound, Some(key), None, trace, &miter))
                    }
                    Ok(KeyOutcome::Timeout) => {
                        Ok(result(AttackStatus::Timeout, None, None, trace, &miter))
                    }
                    Err(e) => Ok(result(
                        AttackStatus::Error,
                        None,
                        Some(e.to_string()),
                        trace,
                        &miter,
                    )),
                };
            }
        }
    }
}

/// Remaining budget before the attack deadline; `None` when already past.
fn remaining(deadline: Option<Instant>, conflicts: Option<u64>) -> Option<Budget> {
    let wall = match deadline {
        None => None,
        Some(d) => {
            let now = Instant::now();
            if now >= d {
                return None;
            }
            Some(d - now)
        }
    };
    Some(Budget { wall, conflicts })
}

#[cfg(test)]
mod tests;
