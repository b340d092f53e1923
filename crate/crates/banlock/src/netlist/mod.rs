//! Gate-level combinational netlists: representation, simulation, and
//! structural transforms.
//!
//! A [`Netlist`] is immutable once built; every transforming operation
//! returns a new netlist, so values can be shared freely across threads.

pub mod bench;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Identifies a net by its dense index within one netlist.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct NetId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    /// Select-first multiplexer: output = fanin[0] ? fanin[2] : fanin[1].
    Mux,
    /// Lookup table. Bit `i` of the table is the output when the fanin
    /// values, read as a binary number with fanin[0] least significant,
    /// equal `i`.
    Lut(Vec<bool>),
    /// Constant driver (no fanins). Written to `.bench` as a buffered
    /// `vcc`/`gnd` pseudo-input.
    Const(bool),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux => "MUX",
            GateKind::Lut(_) => "LUT",
            GateKind::Const(_) => "CONST",
        }
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => n >= 1,
            GateKind::Xor | GateKind::Xnor => n >= 1,
            GateKind::Not | GateKind::Buf => n == 1,
            GateKind::Mux => n == 3,
            GateKind::Lut(table) => table.len() == 1 << n && table.len().is_power_of_two(),
            GateKind::Const(_) => n == 0,
        }
    }

    /// Evaluate the gate over concrete fanin values.
    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            GateKind::And => inputs.iter().all(|&b| b),
            GateKind::Nand => !inputs.iter().all(|&b| b),
            GateKind::Or => inputs.iter().any(|&b| b),
            GateKind::Nor => !inputs.iter().any(|&b| b),
            GateKind::Xor => inputs.iter().filter(|&&b| b).count() % 2 == 1,
            GateKind::Xnor => inputs.iter().filter(|&&b| b).count() % 2 == 0,
            GateKind::Not => !inputs[0],
            GateKind::Buf => inputs[0],
            GateKind::Mux => {
                if inputs[0] {
                    inputs[2]
                } else {
                    inputs[1]
                }
            }
            GateKind::Lut(table) => {
                let mut idx = 0usize;
                for (p, &b) in inputs.iter().enumerate() {
                    if b {
                        idx |= 1 << p;
                    }
                }
                table[idx]
            }
            GateKind::Const(b) => *b,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub kind: GateKind,
    pub fanin: Vec<NetId>,
    pub output: NetId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    /// Primary or key input.
    Input,
    /// Driven by `gates[idx]`.
    Gate(usize),
}

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("net `{0}` has no driver")]
    Undriven(String),
    #[error("net `{0}` has more than one driver")]
    DuplicateDriver(String),
    #[error("combinational cycle through nets {}", join_names(.0))]
    Cycle(Vec<String>),
    #[error("gate `{gate}` of kind {kind} has invalid fanin arity {arity}")]
    BadArity {
        gate: String,
        kind: &'static str,
        arity: usize,
    },
    #[error("assignment has {got} bits, expected {want} (inputs + keys)")]
    AssignmentWidth { got: usize, want: usize },
}

fn join_names(names: &[String]) -> String {
    names.join(", ")
}

/// A validated combinational netlist.
#[derive(Clone)]
pub struct Netlist {
    names: Vec<String>,
    name_index: HashMap<String, NetId>,
    gates: Vec<Gate>,
    drivers: Vec<Driver>,
    primary_inputs: Vec<NetId>,
    primary_outputs: Vec<NetId>,
    key_inputs: Vec<NetId>,
    /// Gate indices in dependency order (fanins precede gates).
    topo: Vec<usize>,
}

impl fmt::Debug for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Netlist({} nets, {} gates, {} in, {} key, {} out)",
            self.names.len(),
            self.gates.len(),
            self.primary_inputs.len(),
            self.key_inputs.len(),
            self.primary_outputs.len()
        )
    }
}

/// Compute a dependency order over gates, or report a cycle.
///
/// On success the returned indices order `gates` so that every gate's
/// fanin nets are driven either by inputs or by earlier gates. On failure
/// the witness lists the nets of one cycle, in path order.
pub fn check_acyclic(
    num_nets: usize,
    gates: &[Gate],
    drivers: &[Driver],
) -> Result<Vec<usize>, Vec<NetId>> {
    debug_assert_eq!(num_nets, drivers.len());
    let mut state = vec![0u8; gates.len()]; // 0 = unvisited, 1 = on stack, 2 = done
    let mut order = Vec::with_capacity(gates.len());
    // Iterative DFS over gates; explicit stack holds (gate, next fanin position).
    for root in 0..gates.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (g, ref mut pos)) = stack.last_mut() {
            let gate = &gates[g];
            if *pos < gate.fanin.len() {
                let net = gate.fanin[*pos];
                *pos += 1;
                if let Driver::Gate(dep) = drivers[net.index()] {
                    match state[dep] {
                        0 => {
                            state[dep] = 1;
                            stack.push((dep, 0));
                        }
                        1 => {
                            // Found a back edge: the cycle is the stack
                            // suffix starting at `dep`.
                            let start = stack.iter().position(|&(s, _)| s == dep).unwrap();
                            let cycle =
                                stack[start..].iter().map(|&(s, _)| gates[s].output).collect();
                            return Err(cycle);
                        }
                        _ => {}
                    }
                }
            } else {
                state[g] = 2;
                order.push(g);
                stack.pop();
            }
        }
    }
    Ok(order)
}

impl Netlist {
    /// Validate raw parts into a netlist, establishing every invariant.
    pub fn new(
        names: Vec<String>,
        gates: Vec<Gate>,
        primary_inputs: Vec<NetId>,
        primary_outputs: Vec<NetId>,
        key_inputs: Vec<NetId>,
    ) -> Result<Self, NetlistError> {
        let mut drivers = vec![None; names.len()];
        for id in primary_inputs.iter().chain(&key_inputs) {
            if drivers[id.index()].replace(Driver::Input).is_some() {
                return Err(NetlistError::DuplicateDriver(names[id.index()].clone()));
            }
        }
        for (idx, gate) in gates.iter().enumerate() {
            if !gate.kind.arity_ok(gate.fanin.len()) {
                return Err(NetlistError::BadArity {
                    gate: names[gate.output.index()].clone(),
                    kind: gate.kind.name(),
                    arity: gate.fanin.len(),
                });
            }
            if drivers[gate.output.index()].replace(Driver::Gate(idx)).is_some() {
                return Err(NetlistError::DuplicateDriver(
                    names[gate.output.index()].clone(),
                ));
            }
        }
        let drivers: Vec<Driver> = drivers
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| NetlistError::Undriven(names[i].clone())))
            .collect::<Result<_, _>>()?;
        let topo = check_acyclic(names.len(), &gates, &drivers)
            .map_err(|cycle| {
                NetlistError::Cycle(cycle.iter().map(|n| names[n.index()].clone()).collect())
            })?;
        let name_index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NetId(i as u32)))
            .collect();
        Ok(Netlist {
            names,
            name_index,
            gates,
            drivers,
            primary_inputs,
            primary_outputs,
            key_inputs,
            topo,
        })
    }

    pub fn num_nets(&self) -> usize {
        self.names.len()
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, idx: usize) -> &Gate {
        &self.gates[idx]
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net.index()]
    }

    /// The gate driving `net`, if it is not an input.
    pub fn driver_gate(&self, net: NetId) -> Option<&Gate> {
        match self.drivers[net.index()] {
            Driver::Gate(idx) => Some(&self.gates[idx]),
            Driver::Input => None,
        }
    }

    pub fn primary_inputs(&self) -> &[NetId] {
        &self.primary_inputs
    }

    pub fn primary_outputs(&self) -> &[NetId] {
        &self.primary_outputs
    }

    pub fn key_inputs(&self) -> &[NetId] {
        &self.key_inputs
    }

    /// All inputs in assignment order: primary inputs, then key inputs.
    pub fn all_inputs(&self) -> impl Iterator<Item = NetId> + '_ {
        self.primary_inputs.iter().chain(&self.key_inputs).copied()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.names[net.index()]
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.name_index.get(name).copied()
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Evaluate all nets under the given input/key assignment.
    ///
    /// The assignment covers primary inputs followed by key inputs, in
    /// declaration order.
    pub fn eval_all(&self, assignment: &[bool]) -> Result<Vec<bool>, NetlistError> {
        let want = self.primary_inputs.len() + self.key_inputs.len();
        if assignment.len() != want {
            return Err(NetlistError::AssignmentWidth {
                got: assignment.len(),
                want,
            });
        }
        let mut values = vec![false; self.names.len()];
        for (net, &v) in self.all_inputs().zip(assignment) {
            values[net.index()] = v;
        }
        let mut fanin_buf = Vec::with_capacity(8);
        for &g in &self.topo {
            let gate = &self.gates[g];
            fanin_buf.clear();
            fanin_buf.extend(gate.fanin.iter().map(|n| values[n.index()]));
            values[gate.output.index()] = gate.kind.eval(&fanin_buf);
        }
        Ok(values)
    }

    /// Simulate and return primary-output values in declaration order.
    pub fn simulate(&self, assignment: &[bool]) -> Result<Vec<bool>, NetlistError> {
        let values = self.eval_all(assignment)?;
        Ok(self
            .primary_outputs
            .iter()
            .map(|n| values[n.index()])
            .collect())
    }

    /// Rewrite gates of arity three or more into trees of two-input
    /// gates. The association is level-wise pairing, which keeps the
    /// added depth logarithmic.
    pub fn split_to_two_input(&self) -> Netlist {
        let mut b = Builder::new();
        let map: Vec<NetId> = self
            .names
            .iter()
            .enumerate()
            .map(|(i, name)| match self.drivers[i] {
                Driver::Input => b.intern(name),
                Driver::Gate(_) => b.intern(name),
            })
            .collect();
        for &id in &self.primary_inputs {
            b.mark_input(map[id.index()]);
        }
        for &id in &self.key_inputs {
            b.mark_key_input(map[id.index()]);
        }
        for &g in &self.topo {
            let gate = &self.gates[g];
            let fanin: Vec<NetId> = gate.fanin.iter().map(|n| map[n.index()]).collect();
            let out = map[gate.output.index()];
            match &gate.kind {
                GateKind::And | GateKind::Or | GateKind::Xor if fanin.len() > 2 => {
                    let tree = b.balanced_tree(gate.kind.clone(), &fanin);
                    b.drive(out, GateKind::Buf, vec![tree]);
                }
                GateKind::Nand | GateKind::Nor | GateKind::Xnor if fanin.len() > 2 => {
                    let inner = match gate.kind {
                        GateKind::Nand => GateKind::And,
                        GateKind::Nor => GateKind::Or,
                        _ => GateKind::Xor,
                    };
                    let tree = b.balanced_tree(inner, &fanin);
                    b.drive(out, GateKind::Not, vec![tree]);
                }
                GateKind::Mux => {
                    // s ? hi : lo  ->  OR(AND(NOT s, lo), AND(s, hi))
                    let ns = b.gate(GateKind::Not, &[fanin[0]]);
                    let lo = b.gate(GateKind::And, &[ns, fanin[1]]);
                    let hi = b.gate(GateKind::And, &[fanin[0], fanin[2]]);
                    b.drive(out, GateKind::Or, vec![lo, hi]);
                }
                GateKind::Lut(table) if fanin.len() > 2 => {
                    let lowered = b.shannon_lut(table, &fanin);
                    b.drive(out, GateKind::Buf, vec![lowered]);
                }
                kind => {
                    b.drive(out, kind.clone(), fanin);
                }
            }
        }
        for &id in &self.primary_outputs {
            b.mark_output(map[id.index()]);
        }
        b.finish().expect("splitting preserves validity")
    }

    /// Fix some nets to constants and propagate, returning a simplified
    /// netlist over the remaining inputs. Bound input nets disappear
    /// from the input lists; gates that collapse become constants or
    /// buffers.
    pub fn apply_constants(&self, bindings: &HashMap<NetId, bool>) -> Netlist {
        let mut b = Builder::new();
        let mut vals: Vec<Option<FoldValue>> = vec![None; self.names.len()];
        for i in 0..self.names.len() {
            let id = NetId(i as u32);
            if let Some(&c) = bindings.get(&id) {
                vals[i] = Some(FoldValue::Const(c));
            } else if self.drivers[i] == Driver::Input {
                let new = b.intern(&self.names[i]);
                if self.key_inputs.contains(&id) {
                    b.mark_key_input(new);
                } else {
                    b.mark_input(new);
                }
                vals[i] = Some(FoldValue::Net(new));
            }
        }
        for &g in &self.topo {
            let gate = &self.gates[g];
            let out_idx = gate.output.index();
            if vals[out_idx].is_some() {
                continue; // an input or pre-bound net
            }
            let fanin: Vec<FoldValue> =
                gate.fanin.iter().map(|n| vals[n.index()].unwrap()).collect();
            let folded = fold_gate(&mut b, &gate.kind, &fanin);
            vals[out_idx] = Some(match folded {
                FoldResult::Const(c) => FoldValue::Const(c),
                FoldResult::Net(n) => FoldValue::Net(n),
                FoldResult::Build(kind, nets) => {
                    let out = b.intern(&self.names[out_idx]);
                    b.drive(out, kind, nets);
                    FoldValue::Net(out)
                }
            });
        }
        for &id in &self.primary_outputs {
            let v = vals[id.index()].unwrap();
            let net = match v {
                FoldValue::Net(n) => {
                    // Keep the output name if the value landed on a
                    // different net (e.g. collapsed buffer chains).
                    if b.name(n) == self.names[id.index()] {
                        n
                    } else {
                        let named = b.intern(&self.names[id.index()]);
                        b.drive(named, GateKind::Buf, vec![n]);
                        named
                    }
                }
                FoldValue::Const(c) => {
                    let named = b.intern(&self.names[id.index()]);
                    b.drive(named, GateKind::Const(c), vec![]);
                    named
                }
            };
            b.mark_output(net);
        }
        b.finish().expect("constant propagation preserves validity")
    }
}

/// A gate fanin during simplification: an already-known constant or a
/// net of the netlist under construction.
#[derive(Clone, Copy)]
pub enum FoldValue {
    Const(bool),
    Net(NetId),
}

impl FoldValue {
    fn as_const(&self) -> Option<bool> {
        match self {
            FoldValue::Const(c) => Some(*c),
            FoldValue::Net(_) => None,
        }
    }
    fn as_net(&self) -> Option<NetId> {
        match self {
            FoldValue::Net(n) => Some(*n),
            FoldValue::Const(_) => None,
        }
    }
}

enum FoldResult {
    Const(bool),
    Net(NetId),
    Build(GateKind, Vec<NetId>),
}

/// Simplify one gate whose fanins are a mix of constants and nets.
fn fold_gate(b: &mut Builder, kind: &GateKind, fanin: &[FoldValue]) -> FoldResult {
    use FoldResult::*;
    let consts: Vec<Option<bool>> = fanin.iter().map(|v| v.as_const()).collect();
    let nets: Vec<Option<NetId>> = fanin.iter().map(|v| v.as_net()).collect();
    match kind {
        GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => {
            let (absorbing, inverted) = match kind {
                GateKind::And => (false, false),
                GateKind::Nand => (false, true),
                GateKind::Or => (true, false),
                _ => (true, true),
            };
            if consts.iter().any(|&c| c == Some(absorbing)) {
                return Const(absorbing ^ inverted);
            }
            let live: Vec<NetId> = nets.iter().flatten().copied().collect();
            match (live.len(), inverted) {
                (0, inv) => Const(!absorbing ^ inv),
                (1, false) => Net(live[0]),
                (1, true) => Build(GateKind::Not, live),
                (_, false) => Build(
                    if absorbing { GateKind::Or } else { GateKind::And },
                    live,
                ),
                (_, true) => Build(
                    if absorbing { GateKind::Nor } else { GateKind::Nand },
                    live,
                ),
            }
        }
        GateKind::Xor | GateKind::Xnor => {
            let mut parity = matches!(kind, GateKind::Xnor);
            let mut live: Vec<NetId> = Vec::new();
            for v in fanin {
                match (v.as_const(), v.as_net()) {
                    (Some(c), _) => parity ^= c,
                    (_, Some(n)) => live.push(n),
                    _ => unreachable!(),
                }
            }
            match (live.len(), parity) {
                (0, p) => Const(p),
                (1, false) => Net(live[0]),
                (1, true) => Build(GateKind::Not, live),
                (_, false) => Build(GateKind::Xor, live),
                (_, true) => Build(GateKind::Xnor, live),
            }
        }
        GateKind::Not => match (consts[0], nets[0]) {
            (Some(c), _) => Const(!c),
            (_, Some(n)) => Build(GateKind::Not, vec![n]),
            _ => unreachable!(),
        },
        GateKind::Buf => match (consts[0], nets[0]) {
            (Some(c), _) => Const(c),
            // Keep explicit buffers so propagation does not reshape
            // constant-free regions.
            (_, Some(n)) => Build(GateKind::Buf, vec![n]),
            _ => unreachable!(),
        },
        GateKind::Mux => {
            let (s, a, c) = (&fanin[0], &fanin[1], &fanin[2]);
            if let Some(sel) = s.as_const() {
                let branch = if sel { c } else { a };
                return match (branch.as_const(), branch.as_net()) {
                    (Some(b_), _) => Const(b_),
                    (_, Some(n)) => Net(n),
                    _ => unreachable!(),
                };
            }
            let sn = s.as_net().unwrap();
            match (a.as_const(), a.as_net(), c.as_const(), c.as_net()) {
                (Some(x), _, Some(y), _) => {
                    if x == y {
                        Const(x)
                    } else if y {
                        Net(sn) // 0 -> a=0, 1 -> c=1: output = select
                    } else {
                        Build(GateKind::Not, vec![sn])
                    }
                }
                (Some(false), _, _, Some(cn)) => Build(GateKind::And, vec![sn, cn]),
                (Some(true), _, _, Some(cn)) => {
                    let ns = b.fresh("mx");
                    b.drive(ns, GateKind::Not, vec![sn]);
                    Build(GateKind::Or, vec![ns, cn])
                }
                (_, Some(an), Some(false), _) => {
                    let ns = b.fresh("mx");
                    b.drive(ns, GateKind::Not, vec![sn]);
                    Build(GateKind::And, vec![ns, an])
                }
                (_, Some(an), Some(true), _) => Build(GateKind::Or, vec![sn, an]),
                (_, Some(an), _, Some(cn)) => {
                    if an == cn {
                        Net(an)
                    } else {
                        Build(GateKind::Mux, vec![sn, an, cn])
                    }
                }
                _ => unreachable!(),
            }
        }
        GateKind::Lut(table) => {
            // Project the table onto the non-constant pins.
            let live: Vec<(usize, NetId)> = fanin
                .iter()
                .enumerate()
                .filter_map(|(p, v)| v.as_net().map(|n| (p, n)))
                .collect();
            let const_mask: usize = fanin
                .iter()
                .enumerate()
                .filter(|(_, v)| v.as_const() == Some(true))
                .map(|(p, _)| 1 << p)
                .sum();
            let mut tbl = vec![false; 1 << live.len()];
            for (v, slot) in tbl.iter_mut().enumerate() {
                let mut orig = const_mask;
                for (bit, &(p, _)) in live.iter().enumerate() {
                    if v >> bit & 1 == 1 {
                        orig |= 1 << p;
                    }
                }
                *slot = table[orig];
            }
            if tbl.iter().all(|&t| t) {
                return Const(true);
            }
            if tbl.iter().all(|&t| !t) {
                return Const(false);
            }
            let live: Vec<NetId> = live.into_iter().map(|(_, n)| n).collect();
            if live.len() == 1 {
                return if tbl == [false, true] {
                    Net(live[0])
                } else {
                    Build(GateKind::Not, vec![live[0]])
                };
            }
            Build(GateKind::Lut(tbl), live)
        }
        GateKind::Const(c) => Const(*c),
    }
}

/// Structural equality up to net-index relabeling, matching nets by name.
pub fn isomorphic(a: &Netlist, b: &Netlist) -> bool {
    let names = |list: &[NetId], n: &Netlist| -> Vec<String> {
        list.iter().map(|&id| n.net_name(id).to_string()).collect()
    };
    if names(&a.primary_inputs, a) != names(&b.primary_inputs, b)
        || names(&a.primary_outputs, a) != names(&b.primary_outputs, b)
        || names(&a.key_inputs, a) != names(&b.key_inputs, b)
        || a.gates.len() != b.gates.len()
    {
        return false;
    }
    for gate in &a.gates {
        let out_name = a.net_name(gate.output);
        let Some(other_id) = b.find_net(out_name) else {
            return false;
        };
        let Some(other) = b.driver_gate(other_id) else {
            return false;
        };
        if other.kind != gate.kind {
            return false;
        }
        let fa = names(&gate.fanin, a);
        let fb = names(&other.fanin, b);
        if fa != fb {
            return false;
        }
    }
    true
}

/// Incremental netlist construction with name interning.
pub struct Builder {
    names: Vec<String>,
    name_index: HashMap<String, NetId>,
    gates: Vec<Gate>,
    driven: Vec<bool>,
    primary_inputs: Vec<NetId>,
    primary_outputs: Vec<NetId>,
    key_inputs: Vec<NetId>,
    fresh_counter: u64,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Self {
        Builder {
            names: Vec::new(),
            name_index: HashMap::new(),
            gates: Vec::new(),
            driven: Vec::new(),
            primary_inputs: Vec::new(),
            primary_outputs: Vec::new(),
            key_inputs: Vec::new(),
            fresh_counter: 0,
        }
    }

    pub fn intern(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.name_index.get(name) {
            return id;
        }
        let id = NetId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.name_index.insert(name.to_string(), id);
        self.driven.push(false);
        id
    }

    pub fn name(&self, id: NetId) -> &str {
        &self.names[id.index()]
    }

    pub fn name_id(&self, name: &str) -> Option<NetId> {
        self.name_index.get(name).copied()
    }

    /// Intern a unique net name with the given prefix.
    pub fn fresh(&mut self, prefix: &str) -> NetId {
        loop {
            let name = format!("{prefix}_{}", self.fresh_counter);
            self.fresh_counter += 1;
            if !self.name_index.contains_key(&name) {
                return self.intern(&name);
            }
        }
    }

    pub fn mark_input(&mut self, id: NetId) {
        self.driven[id.index()] = true;
        self.primary_inputs.push(id);
    }

    pub fn mark_key_input(&mut self, id: NetId) {
        self.driven[id.index()] = true;
        self.key_inputs.push(id);
    }

    pub fn mark_output(&mut self, id: NetId) {
        self.primary_outputs.push(id);
    }

    pub fn input(&mut self, name: &str) -> NetId {
        let id = self.intern(name);
        self.mark_input(id);
        id
    }

    pub fn key_input(&mut self, name: &str) -> NetId {
        let id = self.intern(name);
        self.mark_key_input(id);
        id
    }

    /// Add a gate driving an existing net.
    pub fn drive(&mut self, out: NetId, kind: GateKind, fanin: Vec<NetId>) {
        self.driven[out.index()] = true;
        self.gates.push(Gate {
            kind,
            fanin,
            output: out,
        });
    }

    /// Add a gate driving a fresh net and return that net.
    pub fn gate(&mut self, kind: GateKind, fanin: &[NetId]) -> NetId {
        let out = self.fresh("g");
        self.drive(out, kind, fanin.to_vec());
        out
    }

    /// Reduce `nets` with `kind` gates, pairing level-wise.
    pub fn balanced_tree(&mut self, kind: GateKind, nets: &[NetId]) -> NetId {
        assert!(!nets.is_empty());
        let mut layer = nets.to_vec();
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len() / 2 + 1);
            for pair in layer.chunks(2) {
                if pair.len() == 2 {
                    next.push(self.gate(kind.clone(), pair));
                } else {
                    next.push(pair[0]);
                }
            }
            layer = next;
        }
        layer[0]
    }

    /// Lower a LUT to two-input gates by Shannon expansion on the top
    /// pin, returning the net holding the result.
    pub fn shannon_lut(&mut self, table: &[bool], pins: &[NetId]) -> NetId {
        if table.iter().all(|&t| t == table[0]) {
            return self.gate(GateKind::Const(table[0]), &[]);
        }
        if pins.len() == 1 {
            return if table[1] {
                self.gate(GateKind::Buf, &[pins[0]])
            } else {
                self.gate(GateKind::Not, &[pins[0]])
            };
        }
        if pins.len() == 2 {
            return self.gate(GateKind::Lut(table.to_vec()), pins);
        }
        let top = pins.len() - 1;
        let (lo_tbl, hi_tbl) = table.split_at(table.len() / 2);
        if lo_tbl == hi_tbl {
            return self.shannon_lut(lo_tbl, &pins[..top]);
        }
        let lo = self.shannon_lut(lo_tbl, &pins[..top]);
        let hi = self.shannon_lut(hi_tbl, &pins[..top]);
        let ns = self.gate(GateKind::Not, &[pins[top]]);
        let a = self.gate(GateKind::And, &[ns, lo]);
        let b = self.gate(GateKind::And, &[pins[top], hi]);
        self.gate(GateKind::Or, &[a, b])
    }

    pub fn is_driven(&self, id: NetId) -> bool {
        self.driven[id.index()]
    }

    pub fn num_nets_so_far(&self) -> usize {
        self.names.len()
    }

    pub fn finish(self) -> Result<Netlist, NetlistError> {
        Netlist::new(
            self.names,
            self.gates,
            self.primary_inputs,
            self.primary_outputs,
            self.key_inputs,
        )
    }
}

#[cfg(test)]
mod tests;
