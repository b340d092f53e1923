//! Combinational equivalence checking: random-vector screening, then a
//! structurally hashed miter settled by SAT. Circuits are compared over
//! primary inputs matched by name and outputs matched by position.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::solver::{Budget, SolveOutcome, SolverFault, SolverSession};
use crate::cnf::{encode_gate, CnfFormula, Lit};
use crate::netlist::{GateKind, Netlist};

#[derive(Debug, Error)]
pub enum CecError {
    #[error("circuits are not comparable: {0}")]
    Mismatch(String),
    #[error("equivalence check exhausted its budget")]
    Timeout,
    #[error(transparent)]
    Solver(#[from] SolverFault),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivResult {
    Equivalent,
    /// An input assignment (over the left circuit's primary-input order)
    /// on which the two circuits disagree.
    Counterexample(Vec<bool>),
}

/// Number of random vectors simulated before falling back to SAT.
const SCREEN_VECTORS: usize = 64;

/// Check functional equivalence of two key-free netlists.
pub fn check_equivalence(
    left: &Netlist,
    right: &Netlist,
    budget: &Budget,
) -> Result<EquivResult, CecError> {
    if !left.key_inputs().is_empty() || !right.key_inputs().is_empty() {
        return Err(CecError::Mismatch(
            "key inputs must be bound before equivalence checking".into(),
        ));
    }
    if left.primary_outputs().len() != right.primary_outputs().len() {
        return Err(CecError::Mismatch(format!(
            "output counts differ: {} vs {}",
            left.primary_outputs().len(),
            right.primary_outputs().len()
        )));
    }
    let left_names: Vec<&str> = left
        .primary_inputs()
        .iter()
        .map(|&id| left.net_name(id))
        .collect();
    let mut right_pos: HashMap<&str, usize> = HashMap::new();
    for (i, &id) in right.primary_inputs().iter().enumerate() {
        right_pos.insert(right.net_name(id), i);
    }
    if left_names.len() != right_pos.len()
        || left_names.iter().any(|n| !right_pos.contains_key(n))
    {
        return Err(CecError::Mismatch("input name sets differ".into()));
    }

    // Fast path: random simulation.
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69_7465);
    for _ in 0..SCREEN_VECTORS {
        let bits: Vec<bool> = (0..left_names.len()).map(|_| rng.gen()).collect();
        if differs(left, right, &right_pos, &bits) {
            return Ok(EquivResult::Counterexample(bits));
        }
    }

    // Structural merge of both circuits over shared input nodes.
    let mut merger = Merger::default();
    let left_outs = merger.add(left);
    let right_outs = merger.add(right);
    if left_outs == right_outs {
        return Ok(EquivResult::Equivalent);
    }

    // SAT miter over the merged graph.
    let mut f = CnfFormula::new();
    let node_lits = merger.encode(&mut f);
    let mut diffs = Vec::new();
    for (&l, &r) in left_outs.iter().zip(&right_outs) {
        if l == r {
            continue;
        }
        let d = f.fresh_var().positive();
        encode_gate(
            &mut f,
            &GateKind::Xor,
            d,
            &[node_lits[l], node_lits[r]],
        );
        diffs.push(d);
    }
    f.add_clause(&diffs);
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f;
    match session.solve(&[], budget)? {
        SolveOutcome::Unsat => Ok(EquivResult::Equivalent),
        SolveOutcome::Timeout => Err(CecError::Timeout),
        SolveOutcome::Sat(model) => {
            let bits: Vec<bool> = left_names
                .iter()
                .map(|name| model.lit_value(node_lits[merger.input_nodes[*name]]))
                .collect();
            debug_assert!(differs(left, right, &right_pos, &bits));
            Ok(EquivResult::Counterexample(bits))
        }
    }
}

fn differs(
    left: &Netlist,
    right: &Netlist,
    right_pos: &HashMap<&str, usize>,
    left_bits: &[bool],
) -> bool {
    let lo = left.simulate(left_bits).expect("width checked");
    let mut right_bits = vec![false; left_bits.len()];
    for (i, &id) in left.primary_inputs().iter().enumerate() {
        right_bits[right_pos[left.net_name(id)]] = left_bits[i];
    }
    let ro = right.simulate(&right_bits).expect("width checked");
    lo != ro
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct NodeKey {
    kind: KeyKind,
    fanin: Vec<usize>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum KeyKind {
    Input(String),
    Const(bool),
    Gate(&'static str),
    Lut(Vec<bool>),
}

/// Hash-consed union of circuit DAGs. Buffers are transparent;
/// commutative gates sort their fanins so argument order never blocks a
/// merge.
#[derive(Default)]
struct Merger {
    defs: Vec<(GateKind, Vec<usize>)>,
    index: HashMap<NodeKey, usize>,
    input_nodes: HashMap<String, usize>,
}

impl Merger {
    fn node(&mut self, key: NodeKey, kind: GateKind) -> usize {
        if let Some(&n) = self.index.get(&key) {
            return n;
        }
        let id = self.defs.len();
        self.defs.push((kind, key.fanin.clone()));
        self.index.insert(key, id);
        id
    }

    /// Merge a netlist in; returns the node ids of its primary outputs.
    fn add(&mut self, n: &Netlist) -> Vec<usize> {
        let mut net_node: Vec<Option<usize>> = vec![None; n.num_nets()];
        for &id in n.primary_inputs() {
            let name = n.net_name(id).to_string();
            let node = match self.input_nodes.get(&name) {
                Some(&node) => node,
                None => {
                    let node = self.node(
                        NodeKey {
                            kind: KeyKind::Input(name.clone()),
                            fanin: vec![],
                        },
                        GateKind::Buf, // placeholder; inputs get free variables
                    );
                    self.input_nodes.insert(name, node);
                    node
                }
            };
            net_node[id.index()] = Some(node);
        }
        for &g in n.topo_order() {
            let gate = n.gate(g);
            let mut fanin: Vec<usize> = gate
                .fanin
                .iter()
                .map(|f| net_node[f.index()].expect("topo order"))
                .collect();
            let node = match &gate.kind {
                GateKind::Buf => fanin[0],
                GateKind::Const(c) => self.node(
                    NodeKey {
                        kind: KeyKind::Const(*c),
                        fanin: vec![],
                    },
                    gate.kind.clone(),
                ),
                GateKind::Lut(table) => self.node(
                    NodeKey {
                        kind: KeyKind::Lut(table.clone()),
                        fanin,
                    },
                    gate.kind.clone(),
                ),
                kind => {
                    if matches!(
                        kind,
                        GateKind::And
                            | GateKind::Or
                            | GateKind::Xor
                            | GateKind::Xnor
                            | GateKind::Nand
                            | GateKind::Nor
                    ) {
                        fanin.sort_unstable();
                    }
                    self.node(
                        NodeKey {
                            kind: KeyKind::Gate(kind.name()),
                            fanin,
                        },
                        kind.clone(),
                    )
                }
            };
            net_node[gate.output.index()] = Some(node);
        }
        n.primary_outputs()
            .iter()
            .map(|&id| net_node[id.index()].expect("outputs driven"))
            .collect()
    }

    /// Allocate one variable per node and emit gate clauses.
    fn encode(&self, f: &mut CnfFormula) -> Vec<Lit> {
        let lits: Vec<Lit> = (0..self.defs.len())
            .map(|_| f.fresh_var().positive())
            .collect();
        for (i, (kind, fanin)) in self.defs.iter().enumerate() {
            if fanin.is_empty() && !matches!(kind, GateKind::Const(_)) {
                continue; // input node: free variable
            }
            let ins: Vec<Lit> = fanin.iter().map(|&n| lits[n]).collect();
            encode_gate(f, kind, lits[i], &ins);
        }
        lits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::bench::parse_bench;
    use crate::testutil::load_corpus;

    #[test]
    fn identical_circuits_merge_without_sat() {
        let a = load_corpus("c432");
        let b = load_corpus("c432");
        assert_eq!(
            check_equivalence(&a, &b, &Budget::UNLIMITED).unwrap(),
            EquivResult::Equivalent
        );
    }

    #[test]
    fn structurally_different_but_equivalent() {
        let a = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
        let b = parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(c)\nna = NOT(a)\nnb = NOT(b)\nd = NOR(na, nb)\nc = BUF(d)",
        )
        .unwrap();
        assert_eq!(
            check_equivalence(&a, &b, &Budget::UNLIMITED).unwrap(),
            EquivResult::Equivalent
        );
    }

    #[test]
    fn finds_counterexample() {
        let a = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
        let b = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = OR(a, b)").unwrap();
        match check_equivalence(&a, &b, &Budget::UNLIMITED).unwrap() {
            EquivResult::Counterexample(bits) => {
                assert_ne!(
                    a.simulate(&bits).unwrap(),
                    b.simulate(&bits).unwrap()
                );
            }
            EquivResult::Equivalent => panic!("AND and OR are not equivalent"),
        }
    }

    #[test]
    fn split_equivalence_on_corpus_circuit() {
        let n = load_corpus("c432");
        let split = n.split_to_two_input();
        assert_eq!(
            check_equivalence(&n, &split, &Budget::UNLIMITED).unwrap(),
            EquivResult::Equivalent
        );
    }

    #[test]
    fn multiplier_twin_with_rewritten_cone() {
        // c6288 against itself with one gate rewritten into a different
        // but equivalent form; the merged miter must stay easy because
        // everything outside the rewritten cone hashes together.
        let n = load_corpus("c6288");
        let mut b = crate::netlist::Builder::new();
        let map: Vec<crate::netlist::NetId> = (0..n.num_nets())
            .map(|i| b.intern(n.net_name(crate::netlist::NetId(i as u32))))
            .collect();
        for &id in n.primary_inputs() {
            b.mark_input(map[id.index()]);
        }
        let mut rewrote = false;
        for &g in n.topo_order() {
            let gate = n.gate(g);
            let fanin: Vec<crate::netlist::NetId> =
                gate.fanin.iter().map(|f| map[f.index()]).collect();
            let out = map[gate.output.index()];
            if !rewrote && gate.kind == GateKind::And && fanin.len() == 2 {
                let nand = b.gate(GateKind::Nand, &fanin);
                b.drive(out, GateKind::Not, vec![nand]);
                rewrote = true;
            } else {
                b.drive(out, gate.kind.clone(), fanin);
            }
        }
        for &id in n.primary_outputs() {
            b.mark_output(map[id.index()]);
        }
        let twin = b.finish().unwrap();
        assert!(rewrote);
        let start = std::time::Instant::now();
        assert_eq!(
            check_equivalence(&n, &twin, &Budget::wall_secs(60.0)).unwrap(),
            EquivResult::Equivalent
        );
        assert!(start.elapsed().as_secs() < 30, "merged miter must be easy");
    }
}
