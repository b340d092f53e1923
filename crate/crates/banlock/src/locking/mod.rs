//! Locking schemes: Full-Lock (keyed Banyan routing with inversions
//! feeding programmable LUTs) and logic-enhanced Banyan locking (LEB,
//! circuit gates absorbed into keyed switch-box function tables).

pub mod map;

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banyan::{build_banyan, BanyanError, BoxMode};
use crate::cec::{check_equivalence, CecError, EquivResult};
use crate::cnf::solver::Budget;
use crate::netlist::{Builder, GateKind, NetId, Netlist};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FullLock,
    Leb,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::FullLock => "full-lock",
            Scheme::Leb => "leb",
        })
    }
}

#[derive(Debug, Error)]
pub enum LockError {
    #[error(transparent)]
    Banyan(#[from] BanyanError),
    #[error("host circuit already has key inputs")]
    AlreadyKeyed,
    #[error("not enough selectable gates: need {need} of arity {arity}, usable {usable}")]
    InsufficientGates {
        need: usize,
        arity: usize,
        usable: usize,
    },
    #[error("LUT arity {0} outside supported range 2..=5")]
    BadArity(usize),
    #[error("gate mapping infeasible: {0}")]
    Infeasible(String),
    #[error("locked and reference circuits have different IO signatures: {0}")]
    IoMismatch(String),
    #[error(transparent)]
    Cec(#[from] CecError),
    #[error("key length {got} does not match circuit key width {want}")]
    KeyWidth { got: usize, want: usize },
}

/// Which LUT pin (if any) each network output line feeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LutPlacement {
    /// Original gate this LUT replaces (its output net name).
    pub gate: String,
    /// Network output lines feeding pins 0.. of this LUT.
    pub lines: Vec<u32>,
    /// Key-input names of the table entries, index order.
    pub key_names: Vec<String>,
}

/// Everything needed to re-derive the lock structure: written as a TOML
/// sidecar next to the locked netlist.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LockMetadata {
    pub scheme: Scheme,
    pub width: u32,
    pub lut_arity: usize,
    pub seed: u64,
    /// Output-net names of the selected (Full-Lock) or mapped (LEB) gates.
    pub mapped_gates: Vec<String>,
    /// Net driving each network input line (after polarity inverters).
    pub input_line_nets: Vec<String>,
    /// Net carried by each network output line inside the locked netlist.
    pub output_line_nets: Vec<String>,
    /// Every net created for the network fragment (for substitution).
    pub fragment_nets: Vec<String>,
    /// Key-input names in network layout order (swap, aux0, aux1 per box).
    pub network_key_names: Vec<String>,
    /// LUT placements (Full-Lock only).
    pub luts: Vec<LutPlacement>,
}

/// A locked netlist bundled with its correct key and lock metadata.
///
/// Defining property: simulating the locked netlist with the correct key
/// equals simulating the original on every input.
#[derive(Clone, Debug)]
pub struct LockedCircuit {
    pub locked: Netlist,
    pub correct_key: Vec<bool>,
    pub meta: LockMetadata,
}

impl LockedCircuit {
    /// The locked netlist with the given key bound and propagated.
    pub fn with_key(&self, key: &[bool]) -> Result<Netlist, LockError> {
        let keys = self.locked.key_inputs();
        if key.len() != keys.len() {
            return Err(LockError::KeyWidth {
                got: key.len(),
                want: keys.len(),
            });
        }
        let bindings: HashMap<NetId, bool> =
            keys.iter().copied().zip(key.iter().copied()).collect();
        Ok(self.locked.apply_constants(&bindings))
    }

    /// Simulate the locked circuit under an explicit key.
    pub fn simulate_with_key(&self, inputs: &[bool], key: &[bool]) -> Result<Vec<bool>, LockError> {
        let keys = self.locked.key_inputs();
        if key.len() != keys.len() {
            return Err(LockError::KeyWidth {
                got: key.len(),
                want: keys.len(),
            });
        }
        let mut assignment = inputs.to_vec();
        assignment.extend_from_slice(key);
        self.locked
            .simulate(&assignment)
            .map_err(|e| LockError::IoMismatch(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Pass,
    /// Primary-input assignment on which locked-with-key and the
    /// reference disagree.
    Counterexample(Vec<bool>),
}

/// Check the defining lock property: locked-with-correct-key is
/// equivalent to the reference circuit. Exhaustive for up to 16 inputs,
/// miter-based beyond.
pub fn verify_lock(
    lc: &LockedCircuit,
    reference: &Netlist,
    budget: &Budget,
) -> Result<VerifyOutcome, LockError> {
    verify_key(lc, &lc.correct_key, reference, budget)
}

/// Check an arbitrary key against a reference circuit. The key may
/// differ from the stored correct key and still pass: success is
/// functional, not syntactic.
pub fn verify_key(
    lc: &LockedCircuit,
    key: &[bool],
    reference: &Netlist,
    budget: &Budget,
) -> Result<VerifyOutcome, LockError> {
    let keyed = lc.with_key(key)?;
    if !same_io_signature(&keyed, reference) {
        return Err(LockError::IoMismatch(
            "primary inputs/outputs differ".into(),
        ));
    }
    let width = reference.primary_inputs().len();
    if width <= 16 {
        // Exhaustive sweep; input order matched by name.
        let order: Vec<usize> = keyed
            .primary_inputs()
            .iter()
            .map(|&id| {
                reference
                    .primary_inputs()
                    .iter()
                    .position(|&r| reference.net_name(r) == keyed.net_name(id))
                    .expect("signature checked")
            })
            .collect();
        for v in 0u64..1 << width {
            let ref_bits: Vec<bool> = (0..width).map(|k| v >> k & 1 == 1).collect();
            let keyed_bits: Vec<bool> = order.iter().map(|&p| ref_bits[p]).collect();
            if keyed.simulate(&keyed_bits).unwrap() != reference.simulate(&ref_bits).unwrap() {
                return Ok(VerifyOutcome::Counterexample(ref_bits));
            }
        }
        return Ok(VerifyOutcome::Pass);
    }
    match check_equivalence(&keyed, reference, budget)? {
        EquivResult::Equivalent => Ok(VerifyOutcome::Pass),
        EquivResult::Counterexample(bits) => {
            // Translate to the reference input order.
            let mut ref_bits = vec![false; bits.len()];
            for (i, &id) in keyed.primary_inputs().iter().enumerate() {
                let pos = reference
                    .primary_inputs()
                    .iter()
                    .position(|&r| reference.net_name(r) == keyed.net_name(id))
                    .expect("signature checked");
                ref_bits[pos] = bits[i];
            }
            Ok(VerifyOutcome::Counterexample(ref_bits))
        }
    }
}

fn same_io_signature(a: &Netlist, b: &Netlist) -> bool {
    let names = |ids: &[NetId], n: &Netlist| -> HashSet<String> {
        ids.iter().map(|&id| n.net_name(id).to_string()).collect()
    };
    names(a.primary_inputs(), a) == names(b.primary_inputs(), b)
        && a.primary_outputs().len() == b.primary_outputs().len()
}

/// Apply Full-Lock: randomly select gates of the configured arity,
/// replace them with key-programmed LUTs, and feed their (randomly
/// inverted) fanin nets through a keyed Banyan network. Gate selection
/// rejects candidates whose insertion would close a combinational path
/// through the network, so the locked netlist stays acyclic.
pub fn full_lock(
    n: &Netlist,
    width: u32,
    lut_arity: usize,
    seed: u64,
) -> Result<LockedCircuit, LockError> {
    if !n.key_inputs().is_empty() {
        return Err(LockError::AlreadyKeyed);
    }
    if !(2..=5).contains(&lut_arity) {
        return Err(LockError::BadArity(lut_arity));
    }
    let network = build_banyan(width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width_us = width as usize;
    let max_luts = width_us / lut_arity;
    if max_luts == 0 {
        return Err(LockError::InsufficientGates {
            need: 1,
            arity: lut_arity,
            usable: 0,
        });
    }

    // Use as many LUTs as the host supports, padding leftover network
    // lines with feedthrough taps.
    let selection = select_gates(n, lut_arity, max_luts, &mut rng)?;
    let num_luts = selection.len();
    let pads = width_us - num_luts * lut_arity;
    let pad_nets = select_pads(n, &selection, pads, &mut rng)?;

    // Sample the full network key and trace where each output line's
    // value comes from and with what accumulated inversion parity.
    let net_key: Vec<bool> = (0..network.key_bit_count()).map(|_| rng.gen()).collect();
    let (perm, pol) = network.trace_full_lock(&net_key);

    // Required net per output line: LUT pins first, pads after.
    let selected_set: HashSet<usize> = selection.iter().copied().collect();
    let line_net = |o: usize| -> NetId {
        if o < num_luts * lut_arity {
            let gate = n.gate(selection[o / lut_arity]);
            gate.fanin[o % lut_arity]
        } else {
            pad_nets[o - num_luts * lut_arity]
        }
    };

    // Input-line wiring and per-line polarity flips.
    let mut wires = vec![NetId(0); width_us];
    for o in 0..width_us {
        wires[perm[o] as usize] = line_net(o);
    }
    let flips: Vec<bool> = (0..width_us).map(|_| rng.gen()).collect();

    // Rebuild the netlist without the selected gates.
    let mut b = Builder::new();
    let map: Vec<NetId> = (0..n.num_nets())
        .map(|i| b.intern(n.net_name(NetId(i as u32))))
        .collect();
    for &id in n.primary_inputs() {
        b.mark_input(map[id.index()]);
    }
    for &g in n.topo_order() {
        if selected_set.contains(&g) {
            continue;
        }
        let gate = n.gate(g);
        b.drive(
            map[gate.output.index()],
            gate.kind.clone(),
            gate.fanin.iter().map(|f| map[f.index()]).collect(),
        );
    }

    // Key inputs: network bits, then LUT table bits.
    let total_keys = network.key_bit_count() + num_luts * (1 << lut_arity);
    let key_nets: Vec<NetId> = (0..total_keys)
        .map(|k| b.key_input(&format!("keyinput{k}")))
        .collect();
    let net_key_nets = &key_nets[..network.key_bit_count()];

    // Polarity inverters stay part of the host circuit; only the
    // network fragment itself is replaceable by relaxed models.
    let line_drivers: Vec<NetId> = (0..width_us)
        .map(|l| {
            let src = map[wires[l].index()];
            if flips[l] {
                b.gate(GateKind::Not, &[src])
            } else {
                src
            }
        })
        .collect();
    let frag_start = b.num_nets_so_far();
    let out_lines = network.emit_fragment(&mut b, &line_drivers, net_key_nets, &BoxMode::FullLockInvert);
    let frag_end = b.num_nets_so_far();

    // LUT tables: compensate per-pin polarity inside the table and
    // drive the original output net with a key-programmed MUX tree.
    let mut correct_key = net_key.clone();
    let mut luts = Vec::with_capacity(num_luts);
    for (j, &gidx) in selection.iter().enumerate() {
        let gate = n.gate(gidx);
        let pin_lines: Vec<u32> = (0..lut_arity).map(|p| (j * lut_arity + p) as u32).collect();
        let pin_err: Vec<bool> = pin_lines
            .iter()
            .map(|&o| flips[perm[o as usize] as usize] ^ pol[o as usize])
            .collect();
        let table: Vec<bool> = (0..1usize << lut_arity)
            .map(|idx| {
                let args: Vec<bool> = (0..lut_arity)
                    .map(|p| (idx >> p & 1 == 1) ^ pin_err[p])
                    .collect();
                gate.kind.eval(&args)
            })
            .collect();
        let key_base = network.key_bit_count() + j * (1 << lut_arity);
        correct_key.extend(&table);
        let entry_nets: Vec<NetId> = (0..1 << lut_arity)
            .map(|k| key_nets[key_base + k])
            .collect();
        let pin_nets: Vec<NetId> = pin_lines.iter().map(|&o| out_lines[o as usize]).collect();
        let tree = mux_tree(&mut b, &entry_nets, &pin_nets);
        b.drive(map[gate.output.index()], GateKind::Buf, vec![tree]);
        luts.push(LutPlacement {
            gate: n.net_name(gate.output).to_string(),
            lines: pin_lines,
            key_names: entry_nets
                .iter()
                .map(|&id| b.name(id).to_string())
                .collect(),
        });
    }
    for &id in n.primary_outputs() {
        b.mark_output(map[id.index()]);
    }
    let fragment_nets: Vec<String> = (frag_start..frag_end)
        .map(|i| b.name(NetId(i as u32)).to_string())
        .collect();
    let meta = LockMetadata {
        scheme: Scheme::FullLock,
        width,
        lut_arity,
        seed,
        mapped_gates: selection
            .iter()
            .map(|&g| n.net_name(n.gate(g).output).to_string())
            .collect(),
        input_line_nets: line_drivers
            .iter()
            .map(|&id| b.name(id).to_string())
            .collect(),
        output_line_nets: out_lines.iter().map(|&id| b.name(id).to_string()).collect(),
        fragment_nets,
        network_key_names: net_key_nets
            .iter()
            .map(|&id| b.name(id).to_string())
            .collect(),
        luts,
    };
    let locked = b.finish().expect("locked netlist is valid");
    debug_assert_eq!(correct_key.len(), locked.key_inputs().len());
    Ok(LockedCircuit {
        locked,
        correct_key,
        meta,
    })
}

/// Key-programmed LUT: a MUX tree selecting among table-entry key nets,
/// pin 0 as the least-significant index bit.
fn mux_tree(b: &mut Builder, entries: &[NetId], pins: &[NetId]) -> NetId {
    if pins.is_empty() {
        return entries[0];
    }
    let top = pins.len() - 1;
    let (lo, hi) = entries.split_at(entries.len() / 2);
    let lo_net = mux_tree(b, lo, &pins[..top]);
    let hi_net = mux_tree(b, hi, &pins[..top]);
    b.gate(GateKind::Mux, &[pins[top], lo_net, hi_net])
}

/// Random selection of `count` gates with exactly `arity` fanins such
/// that replacing them with network-routed LUTs cannot form a cycle: no
/// remaining path from any selected output to any selected fanin net.
fn select_gates(
    n: &Netlist,
    arity: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, LockError> {
    let consumers = consumer_index(n);
    let mut candidates: Vec<usize> = (0..n.num_gates())
        .filter(|&g| n.gate(g).fanin.len() == arity)
        .collect();
    let usable = candidates.len();
    candidates.shuffle(rng);
    let mut selected: Vec<usize> = Vec::with_capacity(count);
    let mut fanin_nets: HashSet<NetId> = HashSet::new();
    let mut output_nets: HashSet<NetId> = HashSet::new();
    for g in candidates {
        if selected.len() == count {
            break;
        }
        let gate = n.gate(g);
        let mut f2 = fanin_nets.clone();
        f2.extend(gate.fanin.iter().copied());
        let mut o2 = output_nets.clone();
        o2.insert(gate.output);
        let mut blocked: HashSet<usize> = selected.iter().copied().collect();
        blocked.insert(g);
        if reaches(n, &consumers, &o2, &f2, &blocked) {
            continue;
        }
        selected.push(g);
        fanin_nets = f2;
        output_nets = o2;
    }
    if selected.is_empty() {
        return Err(LockError::InsufficientGates {
            need: count,
            arity,
            usable,
        });
    }
    Ok(selected)
}

/// Pad lines carry arbitrary nets through the network; they must also
/// not be reachable from any selected LUT output.
fn select_pads(
    n: &Netlist,
    selection: &[usize],
    pads: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NetId>, LockError> {
    if pads == 0 {
        return Ok(Vec::new());
    }
    let consumers = consumer_index(n);
    let blocked: HashSet<usize> = selection.iter().copied().collect();
    let outputs: HashSet<NetId> = selection.iter().map(|&g| n.gate(g).output).collect();
    let mut pool: Vec<NetId> = (0..n.num_nets()).map(|i| NetId(i as u32)).collect();
    pool.shuffle(rng);
    let mut chosen = Vec::with_capacity(pads);
    for net in pool {
        if chosen.len() == pads {
            break;
        }
        let targets: HashSet<NetId> = [net].into_iter().collect();
        if !reaches(n, &consumers, &outputs, &targets, &blocked) {
            chosen.push(net);
        }
    }
    if chosen.len() < pads {
        return Err(LockError::InsufficientGates {
            need: pads,
            arity: 0,
            usable: 0,
        });
    }
    Ok(chosen)
}

fn consumer_index(n: &Netlist) -> Vec<Vec<usize>> {
    let mut consumers = vec![Vec::new(); n.num_nets()];
    for (g, gate) in n.gates().iter().enumerate() {
        for f in &gate.fanin {
            consumers[f.index()].push(g);
        }
    }
    consumers
}

/// Forward reachability from `sources` to any of `targets` in the
/// netlist with `blocked` gates removed.
fn reaches(
    n: &Netlist,
    consumers: &[Vec<usize>],
    sources: &HashSet<NetId>,
    targets: &HashSet<NetId>,
    blocked: &HashSet<usize>,
) -> bool {
    if sources.iter().any(|s| targets.contains(s)) {
        return true;
    }
    let mut seen = vec![false; n.num_nets()];
    let mut stack: Vec<NetId> = sources.iter().copied().collect();
    for s in &stack {
        seen[s.index()] = true;
    }
    while let Some(net) = stack.pop() {
        for &g in &consumers[net.index()] {
            if blocked.contains(&g) {
                continue;
            }
            let out = n.gate(g).output;
            if targets.contains(&out) {
                return true;
            }
            if !seen[out.index()] {
                seen[out.index()] = true;
                stack.push(out);
            }
        }
    }
    false
}

/// Serialize the correct key as one line of `0`/`1`, network bits first.
pub fn key_to_string(key: &[bool]) -> String {
    key.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn key_from_string(s: &str) -> Option<Vec<bool>> {
    let t = s.trim();
    if t.is_empty() || !t.chars().all(|c| c == '0' || c == '1') {
        return None;
    }
    Some(t.chars().map(|c| c == '1').collect())
}
