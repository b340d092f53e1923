//! System models for the miter-based attack: the exact locked netlist,
//! and relaxed substitutes for the Banyan network (all-to-all and
//! all-to-all-exclusive, each in MUX-based and edge-based encodings).

use std::collections::HashMap;

use crate::banyan::{build_banyan, BanyanNetwork};
use crate::cnf::{encode_gate, encode_netlist, CnfFormula, Lit};
use crate::locking::{LockedCircuit, Scheme};
use crate::netlist::{Builder, GateKind, NetId, Netlist};

use super::AttackError;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RelaxedModelKind {
    Exact,
    A2aMux,
    A2aEdge,
    A2axMux,
    A2axEdge,
}

impl RelaxedModelKind {
    pub const ALL: [RelaxedModelKind; 5] = [
        RelaxedModelKind::Exact,
        RelaxedModelKind::A2aMux,
        RelaxedModelKind::A2aEdge,
        RelaxedModelKind::A2axMux,
        RelaxedModelKind::A2axEdge,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RelaxedModelKind::Exact => "exact",
            RelaxedModelKind::A2aMux => "a2a-mux",
            RelaxedModelKind::A2aEdge => "a2a-edge",
            RelaxedModelKind::A2axMux => "a2ax-mux",
            RelaxedModelKind::A2axEdge => "a2ax-edge",
        }
    }

    pub fn parse(s: &str) -> Option<RelaxedModelKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_edge(&self) -> bool {
        matches!(self, RelaxedModelKind::A2aEdge | RelaxedModelKind::A2axEdge)
    }

    pub fn is_exclusive(&self) -> bool {
        matches!(self, RelaxedModelKind::A2axMux | RelaxedModelKind::A2axEdge)
    }
}

impl std::fmt::Display for RelaxedModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One LUT's pins, as network output-line indices in pin order.
#[derive(Clone, Debug)]
pub struct LutGroup {
    pub lines: Vec<u32>,
}

/// How relaxed key variables map back to the native key space.
pub struct BackMap {
    pub network: BanyanNetwork,
    /// Native key length (network bits plus LUT bits).
    pub native_len: usize,
    /// Offset of LUT table bits within the native key.
    pub lut_offset: usize,
    /// Output lines feeding each LUT's pins, in pin order; the LUT
    /// table bits follow the same LUT order in the native key.
    pub lut_groups: Vec<Vec<u32>>,
}

enum ModelImpl {
    /// A complete keyed netlist (exact model, or MUX-based substitutes).
    /// `assume` nets are forced true in every instantiation.
    Gates { netlist: Netlist, assume: Vec<NetId> },
    /// Edge-based relaxation: the network region is encoded directly as
    /// clauses over per-connection key variables.
    Edge {
        stripped: Netlist,
        in_lines: Vec<NetId>,
        out_lines: Vec<NetId>,
        lut_keys: Vec<NetId>,
    },
}

/// A ready-to-instantiate system model for one locked circuit.
pub struct AttackModel {
    pub kind: RelaxedModelKind,
    imp: ModelImpl,
    width: usize,
    pub lut_groups: Vec<LutGroup>,
    pub back_map: Option<BackMap>,
    /// When set, LUT input-ordering clauses join the key invariants.
    pub sym_break: bool,
    pub sym_clauses_added: usize,
}

/// Number of select bits per output in the MUX-based encodings.
fn select_bits(width: usize) -> usize {
    width.trailing_zeros() as usize
}

impl AttackModel {
    /// The exact system model: the locked netlist as-is.
    pub fn exact(lc: &LockedCircuit) -> AttackModel {
        AttackModel {
            kind: RelaxedModelKind::Exact,
            imp: ModelImpl::Gates {
                netlist: lc.locked.clone(),
                assume: Vec::new(),
            },
            width: lc.meta.width as usize,
            lut_groups: lc
                .meta
                .luts
                .iter()
                .map(|l| LutGroup {
                    lines: l.lines.clone(),
                })
                .collect(),
            back_map: None,
            sym_break: false,
            sym_clauses_added: 0,
        }
    }

    /// Replace the Banyan fragment by a relaxed model. Only Full-Lock
    /// supports relaxation: LEB's intra-network logic breaks the
    /// permutation abstraction, so anything but the exact model is a
    /// hard error.
    pub fn relaxed(lc: &LockedCircuit, kind: RelaxedModelKind) -> Result<AttackModel, AttackError> {
        if kind == RelaxedModelKind::Exact {
            return Ok(AttackModel::exact(lc));
        }
        if lc.meta.scheme != Scheme::FullLock {
            return Err(AttackError::RelaxationUnsupported(lc.meta.scheme));
        }
        let width = lc.meta.width as usize;
        let network = build_banyan(lc.meta.width).expect("locked width is valid");
        let back_map = BackMap {
            native_len: lc.correct_key.len(),
            lut_offset: network.key_bit_count(),
            lut_groups: lc.meta.luts.iter().map(|l| l.lines.clone()).collect(),
            network,
        };
        let lut_groups: Vec<LutGroup> = lc
            .meta
            .luts
            .iter()
            .map(|l| LutGroup {
                lines: l.lines.clone(),
            })
            .collect();
        let model = if kind.is_edge() {
            let (stripped, in_lines, out_lines, lut_keys) = strip_network(lc)?;
            ModelImpl::Edge {
                stripped,
                in_lines,
                out_lines,
                lut_keys,
            }
        } else {
            let netlist_and_assumes = build_mux_substitute(lc, kind.is_exclusive())?;
            ModelImpl::Gates {
                netlist: netlist_and_assumes.0,
                assume: netlist_and_assumes.1,
            }
        };
        Ok(AttackModel {
            kind,
            imp: model,
            width,
            lut_groups,
            back_map: Some(back_map),
            sym_break: false,
            sym_clauses_added: 0,
        })
    }

    pub fn primary_input_count(&self) -> usize {
        match &self.imp {
            ModelImpl::Gates { netlist, .. } => netlist.primary_inputs().len(),
            ModelImpl::Edge { stripped, .. } => stripped.primary_inputs().len(),
        }
    }

    pub fn output_count(&self) -> usize {
        match &self.imp {
            ModelImpl::Gates { netlist, .. } => netlist.primary_outputs().len(),
            ModelImpl::Edge { stripped, .. } => stripped.primary_outputs().len(),
        }
    }

    /// Primary-input order of the model (matches the locked netlist).
    pub fn input_names(&self) -> Vec<String> {
        let n = match &self.imp {
            ModelImpl::Gates { netlist, .. } => netlist,
            ModelImpl::Edge { stripped, .. } => stripped,
        };
        n.primary_inputs()
            .iter()
            .map(|&id| n.net_name(id).to_string())
            .collect()
    }

    /// Width of one key-variable copy.
    pub fn key_count(&self) -> usize {
        match &self.imp {
            ModelImpl::Gates { netlist, .. } => netlist.key_inputs().len(),
            ModelImpl::Edge { lut_keys, .. } => {
                self.width * self.width + self.width + lut_keys.len()
            }
        }
    }

    fn edge_var(&self, keys: &[Lit], input: usize, line: usize) -> Lit {
        keys[line * self.width + input]
    }

    fn polarity_var(&self, keys: &[Lit], line: usize) -> Lit {
        keys[self.width * self.width + line]
    }

    /// Key-level constraints, added once per key copy: exactly-one
    /// groups for the edge encodings and, when enabled, the LUT
    /// input-ordering symmetry-breaking clauses.
    pub fn key_invariants(&mut self, f: &mut CnfFormula, keys: &[Lit]) {
        debug_assert_eq!(keys.len(), self.key_count());
        if let ModelImpl::Edge { .. } = &self.imp {
            let width = self.width;
            // Each output line reads exactly one input.
            for line in 0..width {
                let group: Vec<Lit> = (0..width).map(|i| keys[line * width + i]).collect();
                crate::cnf::card::exactly_one(f, &group);
            }
            if self.kind.is_exclusive() {
                // Each input feeds exactly one output line.
                for i in 0..width {
                    let group: Vec<Lit> = (0..width).map(|line| keys[line * width + i]).collect();
                    crate::cnf::card::exactly_one(f, &group);
                }
            }
            if self.sym_break {
                let added =
                    super::sym::add_lut_ordering(f, width, &self.lut_groups, &|i, line| {
                        keys[line * width + i]
                    });
                self.sym_clauses_added += added;
            }
        }
    }

    /// Instantiate one copy of the system relation: primary inputs bound
    /// to `inputs`, keys bound to `keys`; returns output literals.
    pub fn instantiate(&self, f: &mut CnfFormula, keys: &[Lit], inputs: &[Lit]) -> Vec<Lit> {
        match &self.imp {
            ModelImpl::Gates { netlist, assume } => {
                let mut bound: HashMap<NetId, Lit> = HashMap::new();
                for (&id, &lit) in netlist.primary_inputs().iter().zip(inputs) {
                    bound.insert(id, lit);
                }
                for (&id, &lit) in netlist.key_inputs().iter().zip(keys) {
                    bound.insert(id, lit);
                }
                let map = encode_netlist(f, netlist, &bound);
                let lit_of = |id: NetId| bound.get(&id).copied().or_else(|| map.lit(id)).unwrap();
                for &a in assume {
                    f.add_unit(lit_of(a));
                }
                netlist.primary_outputs().iter().map(|&id| lit_of(id)).collect()
            }
            ModelImpl::Edge {
                stripped,
                in_lines,
                out_lines,
                lut_keys,
            } => {
                let mut bound: HashMap<NetId, Lit> = HashMap::new();
                for (&id, &lit) in stripped.primary_inputs().iter().zip(inputs) {
                    bound.insert(id, lit);
                }
                let lut_slice = &keys[self.width * self.width + self.width..];
                for (&id, &lit) in lut_keys.iter().zip(lut_slice) {
                    bound.insert(id, lit);
                }
                // The boundary nets where the network used to drive the
                // LUTs get fresh variables, constrained only by the
                // relaxed routing clauses below.
                for &out_net in out_lines {
                    bound.insert(out_net, f.fresh_var().positive());
                }
                let map = encode_netlist(f, stripped, &bound);
                let lit_of = |id: NetId| bound.get(&id).copied().or_else(|| map.lit(id)).unwrap();
                // Routed value per output line, before polarity.
                for (line, &out_net) in out_lines.iter().enumerate() {
                    let v = lit_of(out_net);
                    let w = f.fresh_var().positive();
                    // v = w xor polarity
                    encode_gate(
                        f,
                        &GateKind::Xor,
                        v,
                        &[w, self.polarity_var(keys, line)],
                    );
                    for (i, &in_net) in in_lines.iter().enumerate() {
                        let x = lit_of(in_net);
                        let k = self.edge_var(keys, i, line);
                        f.add_clause(&[!k, !x, w]);
                        f.add_clause(&[!k, x, !w]);
                    }
                }
                stripped
                    .primary_outputs()
                    .iter()
                    .map(|&id| lit_of(id))
                    .collect()
            }
        }
    }

    /// Interpret a solved key copy. Exact models yield the native key
    /// directly; relaxed models yield a routing-plus-polarity view that
    /// `recover_scheme_key` turns into a native key.
    pub fn decode_key(&self, bits: &[bool]) -> RelaxedKey {
        match self.kind {
            RelaxedModelKind::Exact => RelaxedKey::Native(bits.to_vec()),
            kind => {
                let (line_input, polarity, lut_bits) = if kind.is_edge() {
                    let mut line_input = Vec::with_capacity(self.width);
                    for line in 0..self.width {
                        let chosen: Vec<usize> = (0..self.width)
                            .filter(|&i| bits[line * self.width + i])
                            .collect();
                        line_input.push(chosen.first().copied().unwrap_or(0) as u32);
                    }
                    let polarity: Vec<bool> = (0..self.width)
                        .map(|line| bits[self.width * self.width + line])
                        .collect();
                    let lut_bits = bits[self.width * self.width + self.width..].to_vec();
                    (line_input, polarity, lut_bits)
                } else {
                    let sb = select_bits(self.width);
                    let mut line_input = Vec::with_capacity(self.width);
                    for line in 0..self.width {
                        let mut v = 0u32;
                        for b in 0..sb {
                            if bits[line * sb + b] {
                                v |= 1 << b;
                            }
                        }
                        line_input.push(v);
                    }
                    let polarity: Vec<bool> = (0..self.width)
                        .map(|line| bits[self.width * sb + line])
                        .collect();
                    let lut_bits = bits[self.width * sb + self.width..].to_vec();
                    (line_input, polarity, lut_bits)
                };
                RelaxedKey::Routed {
                    line_input,
                    polarity,
                    lut_bits,
                }
            }
        }
    }

    /// Literals whose assignment identifies the routing choice, used to
    /// block non-realizable relaxed keys.
    pub fn routing_projection(&self, keys: &[Lit], decoded: &RelaxedKey) -> Vec<Lit> {
        let RelaxedKey::Routed { line_input, .. } = decoded else {
            return Vec::new();
        };
        match self.kind.is_edge() {
            true => {
                let mut lits = Vec::new();
                for line in 0..self.width {
                    for i in 0..self.width {
                        let k = self.edge_var(keys, i, line);
                        lits.push(if line_input[line] == i as u32 { k } else { !k });
                    }
                }
                lits
            }
            false => {
                let sb = select_bits(self.width);
                let mut lits = Vec::new();
                for line in 0..self.width {
                    for b in 0..sb {
                        let k = keys[line * sb + b];
                        lits.push(if line_input[line] >> b & 1 == 1 { k } else { !k });
                    }
                }
                lits
            }
        }
    }
}

/// A solved key in model space.
#[derive(Clone, Debug)]
pub enum RelaxedKey {
    Native(Vec<bool>),
    Routed {
        /// Input line routed to each output line.
        line_input: Vec<u32>,
        /// Polarity bit per output line.
        polarity: Vec<bool>,
        /// LUT table bits, native order.
        lut_bits: Vec<bool>,
    },
}

/// Map a relaxed key back to a scheme-native key: route the recovered
/// output<-input map through the real Banyan network, place polarity
/// bits on the last-stage inversion keys, and emit the LUT tables.
///
/// The network realizes only a subset of all permutations, so the exact
/// recovered map may be unroutable even though an equivalent key exists:
/// permuting the inputs of a LUT while permuting its table (and moving
/// the per-pin polarities along) leaves the function unchanged. Routing
/// therefore fixes only the *set* of indices per LUT, pad lines roam
/// free, and the tables are permuted to undo whatever reordering the
/// router picked. Returns `None` when the map is not a permutation or
/// no member of its equivalence class routes.
pub fn recover_scheme_key(decoded: &RelaxedKey, back: &BackMap) -> Option<Vec<bool>> {
    match decoded {
        RelaxedKey::Native(bits) => Some(bits.clone()),
        RelaxedKey::Routed {
            line_input,
            polarity,
            lut_bits,
        } => {
            let network = &back.network;
            let width = network.width() as usize;
            let mut seen = vec![false; width];
            for &i in line_input {
                if i as usize >= width || seen[i as usize] {
                    return None;
                }
                seen[i as usize] = true;
            }
            // Exact routing first: no pin reordering, tables verbatim.
            let exact = network
                .route_permutation(line_input)
                .expect("validated permutation");
            let (swaps, realized) = match exact {
                Some(swaps) => (swaps, line_input.clone()),
                None => {
                    let groups: Vec<(Vec<u32>, Vec<u32>)> = back
                        .lut_groups
                        .iter()
                        .map(|lines| {
                            let indices = lines
                                .iter()
                                .map(|&l| line_input[l as usize])
                                .collect::<Vec<u32>>();
                            (lines.clone(), indices)
                        })
                        .collect();
                    network
                        .route_constrained(&groups)
                        .expect("validated group shapes")?
                }
            };
            let mut native = vec![false; back.native_len];
            for (bx, &s) in swaps.iter().enumerate() {
                native[crate::banyan::BITS_PER_BOX * bx] = s;
            }
            // Per-LUT pin reordering: realized indices are a permutation
            // of the requested ones; the table rows and per-pin
            // polarities follow the indices to their new pins.
            let last = network.stages() - 1;
            let mut new_polarity = polarity.clone();
            let mut lut_cursor = 0usize;
            let mut new_lut_bits = lut_bits.clone();
            for lines in &back.lut_groups {
                let a = lines.len();
                let table_len = 1usize << a;
                // m[k] = canonical pin whose index the realized pin k carries.
                let mut taken = vec![false; a];
                let mut m = vec![0usize; a];
                for (k, &line) in lines.iter().enumerate() {
                    let want = realized[line as usize];
                    let pos = (0..a).find(|&c| {
                        !taken[c] && line_input[lines[c] as usize] == want
                    })?;
                    taken[pos] = true;
                    m[k] = pos;
                    new_polarity[line as usize] = polarity[lines[pos] as usize];
                }
                let table = &lut_bits[lut_cursor..lut_cursor + table_len];
                let new_table = &mut new_lut_bits[lut_cursor..lut_cursor + table_len];
                for (row, slot) in new_table.iter_mut().enumerate() {
                    let mut v = 0usize;
                    for (k, &mk) in m.iter().enumerate() {
                        if row >> k & 1 == 1 {
                            v |= 1 << mk;
                        }
                    }
                    *slot = table[v];
                }
                lut_cursor += table_len;
            }
            for line in 0..width {
                if new_polarity[line] {
                    let (bx, out) = network.output_line_port(line as u32);
                    native[network.key_bit_index(last, bx, 1 + out)] = true;
                }
            }
            native[back.lut_offset..].copy_from_slice(&new_lut_bits);
            Some(native)
        }
    }
}

/// Remove the network fragment from the locked netlist, leaving the
/// input-line and output-line nets as the relaxation boundary. The
/// now-undriven output-line nets are declared as trailing key inputs so
/// the netlist stays valid; instantiation binds them to whatever the
/// active relaxed model computes.
fn strip_network(
    lc: &LockedCircuit,
) -> Result<(Netlist, Vec<NetId>, Vec<NetId>, Vec<NetId>), AttackError> {
    let meta = &lc.meta;
    let locked = &lc.locked;
    let fragment: std::collections::HashSet<&str> =
        meta.fragment_nets.iter().map(|s| s.as_str()).collect();
    let network_keys: std::collections::HashSet<&str> =
        meta.network_key_names.iter().map(|s| s.as_str()).collect();
    let mut b = Builder::new();
    let mut map: Vec<Option<NetId>> = vec![None; locked.num_nets()];
    let intern = |b: &mut Builder, map: &mut Vec<Option<NetId>>, id: NetId| -> NetId {
        if let Some(new) = map[id.index()] {
            return new;
        }
        let new = b.intern(locked.net_name(id));
        map[id.index()] = Some(new);
        new
    };
    for &id in locked.primary_inputs() {
        let new = intern(&mut b, &mut map, id);
        b.mark_input(new);
    }
    let mut lut_keys = Vec::new();
    for &id in locked.key_inputs() {
        if network_keys.contains(locked.net_name(id)) {
            continue;
        }
        let new = intern(&mut b, &mut map, id);
        b.mark_key_input(new);
        lut_keys.push(new);
    }
    for &g in locked.topo_order() {
        let gate = locked.gate(g);
        if fragment.contains(locked.net_name(gate.output)) {
            continue;
        }
        let fanin: Vec<NetId> = gate
            .fanin
            .iter()
            .map(|&fid| intern(&mut b, &mut map, fid))
            .collect();
        let out = intern(&mut b, &mut map, gate.output);
        b.drive(out, gate.kind.clone(), fanin);
    }
    for &id in locked.primary_outputs() {
        let new = intern(&mut b, &mut map, id);
        b.mark_output(new);
    }
    let in_lines: Vec<NetId> = meta
        .input_line_nets
        .iter()
        .map(|name| {
            let id = locked.find_net(name).expect("metadata names exist");
            intern(&mut b, &mut map, id)
        })
        .collect();
    let out_lines: Vec<NetId> = meta
        .output_line_nets
        .iter()
        .map(|name| {
            let id = locked.find_net(name).expect("metadata names exist");
            let new = intern(&mut b, &mut map, id);
            if !b.is_driven(new) {
                b.mark_key_input(new);
            }
            new
        })
        .collect();
    let stripped = b
        .finish()
        .map_err(|e| AttackError::Substitution(e.to_string()))?;
    Ok((stripped, in_lines, out_lines, lut_keys))
}

/// Build the MUX-based substitute: an N-to-1 selector per output line
/// with binary select keys and one polarity key per line; the exclusive
/// variant adds pairwise difference circuits whose outputs must hold.
fn build_mux_substitute(
    lc: &LockedCircuit,
    exclusive: bool,
) -> Result<(Netlist, Vec<NetId>), AttackError> {
    let (stripped, in_lines, out_lines, lut_keys) = strip_network(lc)?;
    let width = in_lines.len();
    let sb = select_bits(width);
    // Rebuild with new key inputs ahead of the surviving LUT keys; the
    // boundary nets become driven again by the selector trees.
    let mut b = Builder::new();
    let map: Vec<NetId> = (0..stripped.num_nets())
        .map(|i| b.intern(stripped.net_name(NetId(i as u32))))
        .collect();
    for &id in stripped.primary_inputs() {
        b.mark_input(map[id.index()]);
    }
    let select_keys: Vec<NetId> = (0..width * sb)
        .map(|k| b.key_input(&format!("rk_sel{k}")))
        .collect();
    let pol_keys: Vec<NetId> = (0..width)
        .map(|k| b.key_input(&format!("rk_pol{k}")))
        .collect();
    for &id in &lut_keys {
        b.mark_key_input(map[id.index()]);
    }
    for &g in stripped.topo_order() {
        let gate = stripped.gate(g);
        b.drive(
            map[gate.output.index()],
            gate.kind.clone(),
            gate.fanin.iter().map(|f| map[f.index()]).collect(),
        );
    }
    // Selector tree per output line.
    for (line, &out_net) in out_lines.iter().enumerate() {
        let entries: Vec<NetId> = in_lines.iter().map(|&id| map[id.index()]).collect();
        let pins: Vec<NetId> = (0..sb).map(|bit| select_keys[line * sb + bit]).collect();
        let routed = selector_tree(&mut b, &entries, &pins);
        b.drive(
            map[out_net.index()],
            GateKind::Xor,
            vec![routed, pol_keys[line]],
        );
    }
    // Difference circuitry for the exclusive variant.
    let mut assume = Vec::new();
    if exclusive {
        for a in 0..width {
            for c in a + 1..width {
                let diffs: Vec<NetId> = (0..sb)
                    .map(|bit| {
                        b.gate(
                            GateKind::Xor,
                            &[select_keys[a * sb + bit], select_keys[c * sb + bit]],
                        )
                    })
                    .collect();
                let neq = b.balanced_tree(GateKind::Or, &diffs);
                assume.push(neq);
            }
        }
    }
    for &id in stripped.primary_outputs() {
        b.mark_output(map[id.index()]);
    }
    let netlist = b
        .finish()
        .map_err(|e| AttackError::Substitution(e.to_string()))?;
    Ok((netlist, assume))
}

fn selector_tree(b: &mut Builder, entries: &[NetId], pins: &[NetId]) -> NetId {
    if entries.len() == 1 {
        return entries[0];
    }
    let top = pins.len() - 1;
    let (lo, hi) = entries.split_at(entries.len() / 2);
    let lo_net = selector_tree(b, lo, &pins[..top]);
    let hi_net = selector_tree(b, hi, &pins[..top]);
    b.gate(GateKind::Mux, &[pins[top], lo_net, hi_net])
}
