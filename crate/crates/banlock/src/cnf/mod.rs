//! CNF construction: literals, clause storage, the circuit-to-CNF
//! transformation, cardinality encodings, and the incremental solving
//! contract.

pub mod card;
pub mod solver;

use std::collections::HashMap;
use std::io::{self, Write};

use crate::netlist::{GateKind, NetId, Netlist};

/// A propositional variable, numbered from 1 (DIMACS convention).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Var(u32);

impl Var {
    pub fn new(n: u32) -> Var {
        assert!(n >= 1, "variables are numbered from 1");
        Var(n)
    }

    pub fn number(self) -> u32 {
        self.0
    }

    pub fn positive(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn negative(self) -> Lit {
        Lit::new(self, false)
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }
}

/// A literal: a variable with a polarity. Negation is an involution.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(if positive { var.0 as i32 } else { -(var.0 as i32) })
    }

    pub fn from_dimacs(code: i32) -> Lit {
        assert!(code != 0);
        Lit(code)
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> Var {
        Var(self.0.unsigned_abs())
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A clause database with a fresh-variable allocator.
///
/// Clauses are stored flat; an explicit empty clause marks the formula
/// unsatisfiable.
#[derive(Clone, Default)]
pub struct CnfFormula {
    lits: Vec<Lit>,
    clause_ends: Vec<usize>,
    num_vars: u32,
    empty_clauses: usize,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_var(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars)
    }

    pub fn fresh_lits(&mut self, n: usize) -> Vec<Lit> {
        (0..n).map(|_| self.fresh_var().positive()).collect()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clause_ends.len()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.empty_clauses > 0
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        debug_assert!(
            lits.iter().all(|l| l.var().0 <= self.num_vars),
            "clause references unallocated variable"
        );
        if lits.is_empty() {
            self.empty_clauses += 1;
        }
        self.lits.extend_from_slice(lits);
        self.clause_ends.push(self.lits.len());
    }

    pub fn add_unit(&mut self, lit: Lit) {
        self.add_clause(&[lit]);
    }

    pub fn clause(&self, idx: usize) -> &[Lit] {
        let start = if idx == 0 { 0 } else { self.clause_ends[idx - 1] };
        &self.lits[start..self.clause_ends[idx]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Lit]> + '_ {
        (0..self.num_clauses()).map(|i| self.clause(i))
    }

    /// DIMACS CNF serialization: `p cnf <vars> <clauses>` then
    /// zero-terminated clause lines. Variable numbering is stable for a
    /// given netlist and construction order.
    pub fn write_dimacs(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "p cnf {} {}", self.num_vars, self.num_clauses())?;
        for clause in self.iter() {
            for lit in clause {
                write!(w, "{} ", lit.to_dimacs())?;
            }
            writeln!(w, "0")?;
        }
        Ok(())
    }

    pub fn to_dimacs_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dimacs(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dimacs is ascii")
    }
}

/// Bidirectional net-to-variable correspondence from circuit encoding.
#[derive(Clone, Default)]
pub struct VarMap {
    net_to_var: HashMap<NetId, Var>,
    var_to_net: HashMap<Var, NetId>,
}

impl VarMap {
    pub fn insert(&mut self, net: NetId, var: Var) {
        let prev = self.net_to_var.insert(net, var);
        debug_assert!(prev.is_none(), "net mapped twice");
        let prev = self.var_to_net.insert(var, net);
        debug_assert!(prev.is_none(), "variable mapped twice");
    }

    pub fn var(&self, net: NetId) -> Option<Var> {
        self.net_to_var.get(&net).copied()
    }

    pub fn lit(&self, net: NetId) -> Option<Lit> {
        self.var(net).map(Var::positive)
    }

    pub fn net(&self, var: Var) -> Option<NetId> {
        self.var_to_net.get(&var).copied()
    }

    pub fn len(&self) -> usize {
        self.net_to_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net_to_var.is_empty()
    }
}

/// Tseitin-transform a netlist into a fresh formula.
///
/// The formula is satisfiable exactly when some input/output assignment
/// is consistent with the circuit; any model restricted to mapped
/// variables is a valid simulation trace. Acyclicity is guaranteed by
/// the [`Netlist`] type itself.
pub fn tseitin(n: &Netlist) -> (CnfFormula, VarMap) {
    let mut f = CnfFormula::new();
    let map = encode_netlist(&mut f, n, &HashMap::new());
    (f, map)
}

/// Tseitin-encode `n` into an existing formula, with `bound` nets forced
/// to equal the given literals instead of receiving fresh variables.
///
/// Unbound nets receive fresh variables in dense net order, so variable
/// numbering is reproducible for a fixed netlist and call sequence.
pub fn encode_netlist(f: &mut CnfFormula, n: &Netlist, bound: &HashMap<NetId, Lit>) -> VarMap {
    let mut lits: Vec<Lit> = Vec::with_capacity(n.num_nets());
    let mut map = VarMap::default();
    for i in 0..n.num_nets() {
        let net = NetId(i as u32);
        if let Some(&lit) = bound.get(&net) {
            lits.push(lit);
        } else {
            let v = f.fresh_var();
            map.insert(net, v);
            lits.push(v.positive());
        }
    }
    for gate in n.gates() {
        let out = lits[gate.output.index()];
        let ins: Vec<Lit> = gate.fanin.iter().map(|&id| lits[id.index()]).collect();
        encode_gate(f, &gate.kind, out, &ins);
    }
    map
}

/// Clauses for `out = AND(ins)`.
fn and_clauses(f: &mut CnfFormula, out: Lit, ins: &[Lit]) {
    let mut long = Vec::with_capacity(ins.len() + 1);
    for &i in ins {
        f.add_clause(&[!out, i]);
        long.push(!i);
    }
    long.push(out);
    f.add_clause(&long);
}

/// Clauses for `out = XOR(a, b)`.
fn xor_clauses(f: &mut CnfFormula, out: Lit, a: Lit, b: Lit) {
    f.add_clause(&[!out, a, b]);
    f.add_clause(&[!out, !a, !b]);
    f.add_clause(&[out, !a, b]);
    f.add_clause(&[out, a, !b]);
}

fn eq_clauses(f: &mut CnfFormula, a: Lit, b: Lit) {
    f.add_clause(&[!a, b]);
    f.add_clause(&[a, !b]);
}

/// Encode one gate relation into the formula.
pub fn encode_gate(f: &mut CnfFormula, kind: &GateKind, out: Lit, ins: &[Lit]) {
    match kind {
        GateKind::And => and_clauses(f, out, ins),
        GateKind::Nand => and_clauses(f, !out, ins),
        GateKind::Or => {
            let neg: Vec<Lit> = ins.iter().map(|&l| !l).collect();
            and_clauses(f, !out, &neg);
        }
        GateKind::Nor => {
            let neg: Vec<Lit> = ins.iter().map(|&l| !l).collect();
            and_clauses(f, out, &neg);
        }
        GateKind::Xor | GateKind::Xnor => {
            let invert = matches!(kind, GateKind::Xnor);
            match ins.len() {
                1 => eq_clauses(f, if invert { !out } else { out }, ins[0]),
                2 => xor_clauses(f, if invert { !out } else { out }, ins[0], ins[1]),
                _ => {
                    // Chain through fresh parity variables.
                    let mut acc = ins[0];
                    for &next in &ins[1..ins.len() - 1] {
                        let t = f.fresh_var().positive();
                        xor_clauses(f, t, acc, next);
                        acc = t;
                    }
                    let target = if invert { !out } else { out };
                    xor_clauses(f, target, acc, ins[ins.len() - 1]);
                }
            }
        }
        GateKind::Not => eq_clauses(f, out, !ins[0]),
        GateKind::Buf => eq_clauses(f, out, ins[0]),
        GateKind::Mux => {
            let (s, a, b) = (ins[0], ins[1], ins[2]);
            f.add_clause(&[s, !a, out]);
            f.add_clause(&[s, a, !out]);
            f.add_clause(&[!s, !b, out]);
            f.add_clause(&[!s, b, !out]);
            // Redundant but propagation-friendly.
            f.add_clause(&[!a, !b, out]);
            f.add_clause(&[a, b, !out]);
        }
        GateKind::Lut(table) => {
            for (row, &t) in table.iter().enumerate() {
                let mut clause: Vec<Lit> = ins
                    .iter()
                    .enumerate()
                    .map(|(p, &l)| if row >> p & 1 == 1 { !l } else { l })
                    .collect();
                clause.push(if t { out } else { !out });
                f.add_clause(&clause);
            }
        }
        GateKind::Const(c) => f.add_unit(if *c { out } else { !out }),
    }
}

#[cfg(test)]
mod tests;
