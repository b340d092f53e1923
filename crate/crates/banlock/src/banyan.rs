//! Banyan switching networks: staged 2x2 switch boxes with key-driven
//! swap and per-output auxiliary bits (inversion in Full-Lock mode,
//! function selection in LEB mode).
//!
//! The topology is a butterfly ladder concatenated with its mirror,
//! sharing the middle exchange distance, which gives exactly
//! `2*log2(N) - 2` stages. It is connected (every input reaches every
//! output under some key) but realizes only a subset of all
//! permutations.

use std::collections::BTreeSet;
use std::collections::HashMap;

use thiserror::Error;

use crate::cnf::solver::{Budget, SolverSession};
use crate::cnf::{encode_netlist, CnfFormula, Lit};
use crate::netlist::{Builder, GateKind, NetId, Netlist};

/// Key bits owned by one switch box: a swap bit plus two auxiliary bits.
pub const BITS_PER_BOX: usize = 3;

#[derive(Debug, Error)]
pub enum BanyanError {
    #[error("network width must be a power of two >= 4, got {0}")]
    BadWidth(u32),
    #[error("expected {want} swap bits, got {got}")]
    SwapWidth { want: usize, got: usize },
    #[error("width {0} too large for permutation enumeration")]
    TooWideToEnumerate(u32),
    #[error("target is not a permutation of line indices")]
    NotAPermutation,
}

/// A switch box output, the reference points gates map onto.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct BoxOutput {
    pub stage: usize,
    pub bx: usize,
    pub out: usize,
}

#[derive(Clone, Debug)]
pub struct BanyanNetwork {
    width: u32,
    /// Boundary permutations: `wiring[s][p]` is the stage-`s` input port
    /// that boundary position `p` feeds (for `s = stages`, the output
    /// line that the last stage's port `p` drives).
    wiring: Vec<Vec<u32>>,
}

/// Exchange-distance schedule: bits `n-2 .. 0` then `1 .. n-1`.
fn stage_bits(n: u32) -> Vec<u32> {
    let mut bits: Vec<u32> = (0..=n.saturating_sub(2)).rev().collect();
    bits.extend(1..n);
    bits
}

/// Build a Banyan network of the given width.
pub fn build_banyan(width: u32) -> Result<BanyanNetwork, BanyanError> {
    if width < 4 || !width.is_power_of_two() {
        return Err(BanyanError::BadWidth(width));
    }
    let n = width.trailing_zeros();
    let bits = stage_bits(n);
    debug_assert_eq!(bits.len(), (2 * n - 2) as usize);

    // Port map for exchange distance `beta`: lines x and x^(1<<beta)
    // meet in one box, box index = x with bit beta removed.
    let port = |beta: u32, line: u32| -> u32 {
        let low = line & ((1 << beta) - 1);
        let high = line >> (beta + 1);
        let bx = (high << beta) | low;
        2 * bx + (line >> beta & 1)
    };

    let mut wiring = Vec::with_capacity(bits.len() + 1);
    // Input boundary.
    wiring.push((0..width).map(|l| port(bits[0], l)).collect::<Vec<u32>>());
    // Between stages: previous stage's output port p carries the line
    // that mapped to p, entering the next stage at that line's port.
    for s in 1..bits.len() {
        let prev = bits[s - 1];
        let mut inv_prev = vec![0u32; width as usize];
        for line in 0..width {
            inv_prev[port(prev, line) as usize] = line;
        }
        wiring.push(
            (0..width)
                .map(|p| port(bits[s], inv_prev[p as usize]))
                .collect(),
        );
    }
    // Output boundary: last stage's port p drives line inv_port(p).
    let last = *bits.last().unwrap();
    let mut out = vec![0u32; width as usize];
    for line in 0..width {
        out[port(last, line) as usize] = line;
    }
    wiring.push(out);

    let net = BanyanNetwork { width, wiring };
    debug_assert!(net.wiring.iter().all(|w| {
        let mut seen = vec![false; width as usize];
        w.iter().for_each(|&p| seen[p as usize] = true);
        seen.iter().all(|&s| s)
    }));
    Ok(net)
}

impl BanyanNetwork {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn stages(&self) -> usize {
        self.wiring.len() - 1
    }

    pub fn boxes_per_stage(&self) -> usize {
        self.width as usize / 2
    }

    pub fn num_boxes(&self) -> usize {
        self.stages() * self.boxes_per_stage()
    }

    /// Total key bits: swap plus two auxiliary bits per box.
    pub fn key_bit_count(&self) -> usize {
        BITS_PER_BOX * self.num_boxes()
    }

    /// Position of one of a box's key bits in the stage-major,
    /// box-minor, (swap, aux0, aux1) layout.
    pub fn key_bit_index(&self, stage: usize, bx: usize, slot: usize) -> usize {
        debug_assert!(slot < BITS_PER_BOX);
        BITS_PER_BOX * (stage * self.boxes_per_stage() + bx) + slot
    }

    pub fn box_index(&self, stage: usize, bx: usize) -> usize {
        stage * self.boxes_per_stage() + bx
    }

    /// Dense index of a switch box output among all `stages * N` outputs.
    pub fn box_output_index(&self, s: BoxOutput) -> usize {
        s.stage * self.width as usize + 2 * s.bx + s.out
    }

    pub fn num_box_outputs(&self) -> usize {
        self.stages() * self.width as usize
    }

    pub fn box_outputs(&self) -> impl Iterator<Item = BoxOutput> + '_ {
        let width = self.width as usize;
        (0..self.stages()).flat_map(move |stage| {
            (0..width / 2).flat_map(move |bx| {
                (0..2).map(move |out| BoxOutput { stage, bx, out })
            })
        })
    }

    /// The two values feeding a box: either network input lines
    /// (stage 0) or box outputs of the previous stage.
    pub fn box_feeders(&self, stage: usize, bx: usize) -> [Feeder; 2] {
        let mut inv = [0u32; 2];
        for (i, p) in [2 * bx, 2 * bx + 1].into_iter().enumerate() {
            inv[i] = self.wiring[stage]
                .iter()
                .position(|&q| q as usize == p)
                .expect("wiring is a bijection") as u32;
        }
        if stage == 0 {
            [Feeder::InputLine(inv[0]), Feeder::InputLine(inv[1])]
        } else {
            let f = |p: u32| Feeder::Box(BoxOutput {
                stage: stage - 1,
                bx: p as usize / 2,
                out: p as usize % 2,
            });
            [f(inv[0]), f(inv[1])]
        }
    }

    /// The last-stage box and output slot driving the given output line.
    pub fn output_line_port(&self, line: u32) -> (usize, usize) {
        let bound = &self.wiring[self.stages()];
        let p = bound
            .iter()
            .position(|&l| l == line)
            .expect("wiring is a bijection");
        (p / 2, p % 2)
    }

    /// Where a box output goes: the next stage's box, or an output line.
    pub fn box_consumer(&self, s: BoxOutput) -> Consumer {
        let p = self.wiring[s.stage + 1][2 * s.bx + s.out] as usize;
        if s.stage + 1 == self.stages() {
            Consumer::OutputLine(p as u32)
        } else {
            Consumer::Box {
                bx: p / 2,
                port: p % 2,
            }
        }
    }

    /// The permutation realized by the given swap bits: `perm[o]` is the
    /// input line whose value appears on output line `o`.
    pub fn eval_permutation(&self, swap_bits: &[bool]) -> Result<Vec<u32>, BanyanError> {
        if swap_bits.len() != self.num_boxes() {
            return Err(BanyanError::SwapWidth {
                want: self.num_boxes(),
                got: swap_bits.len(),
            });
        }
        let width = self.width as usize;
        let mut carried: Vec<u32> = (0..self.width).collect();
        let mut next = vec![0u32; width];
        for (stage, bound) in self.wiring.iter().enumerate() {
            for (pos, &p) in bound.iter().enumerate() {
                next[p as usize] = carried[pos];
            }
            std::mem::swap(&mut carried, &mut next);
            if stage < self.stages() {
                for bx in 0..width / 2 {
                    if swap_bits[self.box_index(stage, bx)] {
                        carried.swap(2 * bx, 2 * bx + 1);
                    }
                }
            }
        }
        Ok(carried)
    }

    /// Trace both the permutation and the accumulated inversion parity
    /// per output line for a full key in Full-Lock mode.
    pub fn trace_full_lock(&self, key_bits: &[bool]) -> (Vec<u32>, Vec<bool>) {
        assert_eq!(key_bits.len(), self.key_bit_count());
        let width = self.width as usize;
        let mut carried: Vec<(u32, bool)> = (0..self.width).map(|l| (l, false)).collect();
        let mut next = vec![(0u32, false); width];
        for (stage, bound) in self.wiring.iter().enumerate() {
            for (pos, &p) in bound.iter().enumerate() {
                next[p as usize] = carried[pos];
            }
            std::mem::swap(&mut carried, &mut next);
            if stage < self.stages() {
                for bx in 0..width / 2 {
                    if key_bits[self.key_bit_index(stage, bx, 0)] {
                        carried.swap(2 * bx, 2 * bx + 1);
                    }
                    for out in 0..2 {
                        if key_bits[self.key_bit_index(stage, bx, 1 + out)] {
                            carried[2 * bx + out].1 ^= true;
                        }
                    }
                }
            }
        }
        let perm = carried.iter().map(|&(l, _)| l).collect();
        let pol = carried.iter().map(|&(_, p)| p).collect();
        (perm, pol)
    }

    /// Exact image of `eval_permutation` over all swap settings.
    /// Enumeration only; limited to widths 4 and 8.
    pub fn achievable_permutations(&self) -> Result<BTreeSet<Vec<u32>>, BanyanError> {
        if self.width > 8 {
            return Err(BanyanError::TooWideToEnumerate(self.width));
        }
        let boxes = self.num_boxes();
        let mut set = BTreeSet::new();
        for key in 0u64..1 << boxes {
            let bits: Vec<bool> = (0..boxes).map(|b| key >> b & 1 == 1).collect();
            set.insert(self.eval_permutation(&bits)?);
        }
        Ok(set)
    }

    /// Build the index-routing netlist: swap-bit inputs steer constant
    /// line indices through the network; outputs are the index bits per
    /// output line. Shared by SAT routing and tests.
    fn routing_netlist(&self) -> (Netlist, Vec<NetId>, Vec<Vec<NetId>>) {
        let n = self.width.trailing_zeros() as usize;
        let width = self.width as usize;
        let mut b = Builder::new();
        let swaps: Vec<NetId> = (0..self.num_boxes())
            .map(|i| b.input(&format!("sw{i}")))
            .collect();
        // Index bit nets carried per line, starting from constants.
        let mut carried: Vec<Vec<NetId>> = (0..width)
            .map(|l| {
                (0..n)
                    .map(|j| b.gate(GateKind::Const(l >> j & 1 == 1), &[]))
                    .collect()
            })
            .collect();
        let mut next = vec![Vec::new(); width];
        for (stage, bound) in self.wiring.iter().enumerate() {
            for (pos, &p) in bound.iter().enumerate() {
                next[p as usize] = carried[pos].clone();
            }
            std::mem::swap(&mut carried, &mut next);
            if stage < self.stages() {
                for bx in 0..width / 2 {
                    let sw = swaps[self.box_index(stage, bx)];
                    let (lo, hi) = (carried[2 * bx].clone(), carried[2 * bx + 1].clone());
                    carried[2 * bx] = (0..n)
                        .map(|j| b.gate(GateKind::Mux, &[sw, lo[j], hi[j]]))
                        .collect();
                    carried[2 * bx + 1] = (0..n)
                        .map(|j| b.gate(GateKind::Mux, &[sw, hi[j], lo[j]]))
                        .collect();
                }
            }
        }
        for line in &carried {
            for &bit in line {
                b.mark_output(bit);
            }
        }
        let netlist = b.finish().expect("routing netlist is valid");
        (netlist, swaps, carried)
    }

    /// Find swap bits realizing `target` (`target[o]` = input line for
    /// output `o`), or `None` when the network cannot route it. Solved
    /// over the network's own CNF encoding with the IO lines constrained.
    pub fn route_permutation(&self, target: &[u32]) -> Result<Option<Vec<bool>>, BanyanError> {
        let width = self.width as usize;
        if target.len() != width {
            return Err(BanyanError::NotAPermutation);
        }
        let mut seen = vec![false; width];
        for &t in target {
            if t as usize >= width || seen[t as usize] {
                return Err(BanyanError::NotAPermutation);
            }
            seen[t as usize] = true;
        }
        let n = self.width.trailing_zeros() as usize;
        let (netlist, swaps, outputs) = self.routing_netlist();
        let mut f = CnfFormula::new();
        let map = encode_netlist(&mut f, &netlist, &HashMap::new());
        let mut assumptions: Vec<Lit> = Vec::with_capacity(width * n);
        for (o, line) in outputs.iter().enumerate() {
            for (j, &bit) in line.iter().enumerate() {
                let lit = map.lit(bit).expect("output net is mapped");
                assumptions.push(if target[o] >> j & 1 == 1 { lit } else { !lit });
            }
        }
        let mut session = SolverSession::embedded();
        *session.formula_mut() = f;
        let outcome = session
            .solve(&assumptions, &Budget::UNLIMITED)
            .expect("embedded solver does not fault");
        match outcome.model() {
            Some(model) => {
                let bits = swaps
                    .iter()
                    .map(|&net| model.lit_value(map.lit(net).expect("swap net mapped")))
                    .collect();
                Ok(Some(bits))
            }
            None => Ok(None),
        }
    }

    /// Route with per-group freedom: each group is a set of output
    /// lines together with the multiset of input indices they must
    /// carry, in any order; lines outside every group are free. Returns
    /// the swap bits plus the realized permutation.
    ///
    /// This is the key-recovery workhorse: a LUT's pins may be permuted
    /// (the table compensates), so only the set of indices per LUT is
    /// fixed, not their order on the pins.
    pub fn route_constrained(
        &self,
        groups: &[(Vec<u32>, Vec<u32>)],
    ) -> Result<Option<(Vec<bool>, Vec<u32>)>, BanyanError> {
        let width = self.width as usize;
        let n = self.width.trailing_zeros() as usize;
        for (lines, indices) in groups {
            if lines.len() != indices.len() {
                return Err(BanyanError::NotAPermutation);
            }
            if lines.iter().any(|&l| l as usize >= width)
                || indices.iter().any(|&i| i as usize >= width)
            {
                return Err(BanyanError::NotAPermutation);
            }
        }
        let (netlist, swaps, outputs) = self.routing_netlist();
        let mut f = CnfFormula::new();
        let map = encode_netlist(&mut f, &netlist, &HashMap::new());
        let bit_lit = |map: &crate::cnf::VarMap, line: usize, j: usize| {
            map.lit(outputs[line][j]).expect("output net mapped")
        };
        for (lines, indices) in groups {
            let a = lines.len();
            // Bipartite matching between the group's lines and indices.
            let assign: Vec<Vec<Lit>> = (0..a).map(|_| f.fresh_lits(a)).collect();
            for row in &assign {
                crate::cnf::card::exactly_one(&mut f, row);
            }
            for v in 0..a {
                let col: Vec<Lit> = (0..a).map(|l| assign[l][v]).collect();
                crate::cnf::card::exactly_one(&mut f, &col);
            }
            for (l, &line) in lines.iter().enumerate() {
                for (v, &index) in indices.iter().enumerate() {
                    for j in 0..n {
                        let lit = bit_lit(&map, line as usize, j);
                        let want = if index >> j & 1 == 1 { lit } else { !lit };
                        f.add_clause(&[!assign[l][v], want]);
                    }
                }
            }
        }
        let mut session = SolverSession::embedded();
        *session.formula_mut() = f;
        let outcome = session
            .solve(&[], &Budget::UNLIMITED)
            .expect("embedded solver does not fault");
        let Some(model) = outcome.model() else {
            return Ok(None);
        };
        let bits: Vec<bool> = swaps
            .iter()
            .map(|&net| model.lit_value(map.lit(net).expect("swap net mapped")))
            .collect();
        let realized = self.eval_permutation(&bits)?;
        Ok(Some((bits, realized)))
    }

    /// Emit the gate-level realization of the network into a builder.
    ///
    /// `inputs` are the N driving nets; `key_nets` follow the key-bit
    /// layout (`key_bit_index`). Returns the N output-line nets.
    pub fn emit_fragment(
        &self,
        b: &mut Builder,
        inputs: &[NetId],
        key_nets: &[NetId],
        mode: &BoxMode,
    ) -> Vec<NetId> {
        assert_eq!(inputs.len(), self.width as usize);
        assert_eq!(key_nets.len(), self.key_bit_count());
        if let BoxMode::Leb(tables) = mode {
            assert_eq!(tables.len(), self.num_boxes(), "one table set per box");
        }
        let width = self.width as usize;
        let mut carried: Vec<NetId> = inputs.to_vec();
        let mut next = vec![NetId(0); width];
        for (stage, bound) in self.wiring.iter().enumerate() {
            for (pos, &p) in bound.iter().enumerate() {
                next[p as usize] = carried[pos];
            }
            std::mem::swap(&mut carried, &mut next);
            if stage < self.stages() {
                for bx in 0..width / 2 {
                    let sw = key_nets[self.key_bit_index(stage, bx, 0)];
                    let aux = [
                        key_nets[self.key_bit_index(stage, bx, 1)],
                        key_nets[self.key_bit_index(stage, bx, 2)],
                    ];
                    let (i0, i1) = (carried[2 * bx], carried[2 * bx + 1]);
                    let a = b.gate(GateKind::Mux, &[sw, i0, i1]);
                    let c = b.gate(GateKind::Mux, &[sw, i1, i0]);
                    match mode {
                        BoxMode::FullLockInvert => {
                            carried[2 * bx] = b.gate(GateKind::Xor, &[a, aux[0]]);
                            carried[2 * bx + 1] = b.gate(GateKind::Xor, &[c, aux[1]]);
                        }
                        BoxMode::Leb(tables) => {
                            let tbl = &tables[self.box_index(stage, bx)];
                            for out in 0..2 {
                                let cands: Vec<NetId> = (0..4)
                                    .map(|k| {
                                        b.gate(
                                            GateKind::Lut(tbl.tables[out][k].to_vec()),
                                            &[a, c],
                                        )
                                    })
                                    .collect();
                                let m0 = b.gate(GateKind::Mux, &[aux[0], cands[0], cands[1]]);
                                let m1 = b.gate(GateKind::Mux, &[aux[0], cands[2], cands[3]]);
                                carried[2 * bx + out] =
                                    b.gate(GateKind::Mux, &[aux[1], m0, m1]);
                            }
                        }
                    }
                }
            }
        }
        carried
    }

    /// Standalone netlist form of the network fragment: N primary
    /// inputs, declared key inputs, N outputs.
    pub fn to_netlist(&self, mode: &BoxMode) -> Netlist {
        let mut b = Builder::new();
        let inputs: Vec<NetId> = (0..self.width).map(|l| b.input(&format!("in{l}"))).collect();
        let keys: Vec<NetId> = (0..self.key_bit_count())
            .map(|k| b.key_input(&format!("keyinput{k}")))
            .collect();
        let outs = self.emit_fragment(&mut b, &inputs, &keys, mode);
        for (l, &net) in outs.iter().enumerate() {
            let named = b.intern(&format!("out{l}"));
            b.drive(named, GateKind::Buf, vec![net]);
            b.mark_output(named);
        }
        b.finish().expect("fragment netlist is valid")
    }
}

/// What feeds a switch box input port.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Feeder {
    /// Network input line (stage 0 only).
    InputLine(u32),
    Box(BoxOutput),
}

/// Where a switch box output goes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Consumer {
    /// Network output line (last stage only).
    OutputLine(u32),
    Box { bx: usize, port: usize },
}

/// Per-box function tables for LEB mode: for each of the two outputs,
/// four candidate 2-input truth tables over the post-swap pair, indexed
/// by the shared auxiliary bits as `aux1*2 + aux0`. Table rows are
/// indexed with the first post-swap line as the low bit.
#[derive(Clone, Debug)]
pub struct LebBox {
    pub tables: [[[bool; 4]; 4]; 2],
}

pub enum BoxMode<'a> {
    FullLockInvert,
    Leb(&'a [LebBox]),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn structural_counts_small() {
        let net = build_banyan(4).unwrap();
        assert_eq!(net.stages(), 2);
        assert_eq!(net.num_boxes(), 4);
        assert_eq!(net.key_bit_count(), 12);

        let net = build_banyan(8).unwrap();
        assert_eq!(net.stages(), 4);
        assert_eq!(net.num_boxes(), 16);
        assert_eq!(net.key_bit_count(), 48);
    }

    #[test]
    fn structural_counts_paper_scale() {
        let net = build_banyan(256).unwrap();
        assert_eq!(net.stages(), 14);
        assert_eq!(net.num_boxes(), 1792);
        // 5376 swap+inversion bits; with 512 LUT bits for 128 two-input
        // LUTs the total is 5888.
        assert_eq!(net.key_bit_count(), 5376);
        assert_eq!(net.key_bit_count() + 128 * 4, 5888);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(build_banyan(3).is_err());
        assert!(build_banyan(2).is_err());
        assert!(build_banyan(12).is_err());
    }

    #[test]
    fn all_zero_key_is_identity() {
        for width in [4u32, 8, 16, 32] {
            let net = build_banyan(width).unwrap();
            let perm = net
                .eval_permutation(&vec![false; net.num_boxes()])
                .unwrap();
            assert_eq!(perm, (0..width).collect::<Vec<u32>>());
        }
    }

    #[test]
    fn single_first_stage_swap_is_a_transposition() {
        // Derived by tracing the constructed wiring: stage 0 of the
        // 4-wide network pairs adjacent lines, so box 0 swaps lines 0,1.
        let net = build_banyan(4).unwrap();
        let mut bits = vec![false; net.num_boxes()];
        bits[net.box_index(0, 0)] = true;
        let perm = net.eval_permutation(&bits).unwrap();
        assert_eq!(perm, vec![1, 0, 2, 3]);
    }

    #[test]
    fn flipping_one_swap_bit_exchanges_two_outputs() {
        for width in [4u32, 8, 16] {
            let net = build_banyan(width).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7 + width as u64);
            for _ in 0..50 {
                let bits: Vec<bool> = (0..net.num_boxes()).map(|_| rng.gen()).collect();
                let base = net.eval_permutation(&bits).unwrap();
                let mut flipped = bits.clone();
                let k = rng.gen_range(0..flipped.len());
                flipped[k] = !flipped[k];
                let perm = net.eval_permutation(&flipped).unwrap();
                let diff: Vec<usize> =
                    (0..width as usize).filter(|&o| base[o] != perm[o]).collect();
                assert_eq!(diff.len(), 2, "one swap bit moves exactly two lines");
                assert_eq!(base[diff[0]], perm[diff[1]]);
                assert_eq!(base[diff[1]], perm[diff[0]]);
            }
        }
    }

    #[test]
    fn achievable_set_width4() {
        let net = build_banyan(4).unwrap();
        let set = net.achievable_permutations().unwrap();
        // Enumerated oracle: 16 distinct settings, strictly fewer than 4!.
        assert_eq!(set.len(), 16);
        assert!(set.len() < 24);
        assert!(set.contains(&vec![0, 1, 2, 3]));
        for perm in &set {
            let mut seen = vec![false; 4];
            perm.iter().for_each(|&p| seen[p as usize] = true);
            assert!(seen.iter().all(|&s| s), "every member is a bijection");
        }
    }

    #[test]
    fn connectivity_every_input_reaches_every_output() {
        for width in [4u32, 8] {
            let net = build_banyan(width).unwrap();
            let set = net.achievable_permutations().unwrap();
            for o in 0..width as usize {
                for i in 0..width {
                    assert!(
                        set.iter().any(|p| p[o] == i),
                        "width {width}: input {i} cannot reach output {o}"
                    );
                }
            }
        }
    }

    #[test]
    fn route_identity_and_all_achievable_width4() {
        let net = build_banyan(4).unwrap();
        let bits = net
            .route_permutation(&[0, 1, 2, 3])
            .unwrap()
            .expect("identity is routable");
        assert_eq!(net.eval_permutation(&bits).unwrap(), vec![0, 1, 2, 3]);
        for perm in net.achievable_permutations().unwrap() {
            let bits = net
                .route_permutation(&perm)
                .unwrap()
                .expect("achievable permutation must route");
            assert_eq!(net.eval_permutation(&bits).unwrap(), perm);
        }
    }

    #[test]
    fn route_rejects_unachievable_width4() {
        let net = build_banyan(4).unwrap();
        let achievable = net.achievable_permutations().unwrap();
        // Find a permutation of S4 outside the achievable set.
        let mut missing = None;
        let mut perm = vec![0u32, 1, 2, 3];
        'outer: loop {
            if !achievable.contains(&perm) {
                missing = Some(perm.clone());
                break;
            }
            // next_permutation
            let mut i = perm.len() - 1;
            while i > 0 && perm[i - 1] >= perm[i] {
                i -= 1;
            }
            if i == 0 {
                break 'outer;
            }
            let mut j = perm.len() - 1;
            while perm[j] <= perm[i - 1] {
                j -= 1;
            }
            perm.swap(i - 1, j);
            perm[i..].reverse();
        }
        let missing = missing.expect("4 boxes cannot cover all 24 permutations");
        assert!(net.route_permutation(&missing).unwrap().is_none());
    }

    #[test]
    fn route_matches_eval_on_random_keys() {
        for width in [16u32, 32] {
            let net = build_banyan(width).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(width as u64);
            for _ in 0..25 {
                let bits: Vec<bool> = (0..net.num_boxes()).map(|_| rng.gen()).collect();
                let perm = net.eval_permutation(&bits).unwrap();
                let routed = net
                    .route_permutation(&perm)
                    .unwrap()
                    .expect("evaluated permutations route back");
                assert_eq!(net.eval_permutation(&routed).unwrap(), perm);
            }
        }
    }

    #[test]
    fn route_rejects_non_permutation() {
        let net = build_banyan(4).unwrap();
        assert!(matches!(
            net.route_permutation(&[0, 0, 1, 2]),
            Err(BanyanError::NotAPermutation)
        ));
    }

    #[test]
    fn fragment_identity_under_zero_key() {
        let net = build_banyan(4).unwrap();
        let frag = net.to_netlist(&BoxMode::FullLockInvert);
        let zeros = vec![false; net.key_bit_count()];
        for v in 0u32..16 {
            let ins: Vec<bool> = (0..4).map(|k| v >> k & 1 == 1).collect();
            let mut assignment = ins.clone();
            assignment.extend(&zeros);
            assert_eq!(frag.simulate(&assignment).unwrap(), ins);
        }
    }

    #[test]
    fn single_inversion_bit_complements_one_output() {
        let net = build_banyan(4).unwrap();
        let frag = net.to_netlist(&BoxMode::FullLockInvert);
        for stage in 0..net.stages() {
            for bx in 0..net.boxes_per_stage() {
                for out in 0..2 {
                    let mut key = vec![false; net.key_bit_count()];
                    key[net.key_bit_index(stage, bx, 1 + out)] = true;
                    let (_, pol) = net.trace_full_lock(&key);
                    assert_eq!(pol.iter().filter(|&&p| p).count(), 1);
                    for v in 0u32..16 {
                        let ins: Vec<bool> = (0..4).map(|k| v >> k & 1 == 1).collect();
                        let mut assignment = ins.clone();
                        assignment.extend(&key);
                        let got = frag.simulate(&assignment).unwrap();
                        let want: Vec<bool> = ins
                            .iter()
                            .zip(&pol)
                            .map(|(&i, &p)| i ^ p)
                            .collect();
                        assert_eq!(got, want);
                    }
                }
            }
        }
    }

    #[test]
    fn inversion_bits_never_change_permutation() {
        let net = build_banyan(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let swaps: Vec<bool> = (0..net.num_boxes()).map(|_| rng.gen()).collect();
            let base = net.eval_permutation(&swaps).unwrap();
            let mut key = vec![false; net.key_bit_count()];
            for (bx, &s) in swaps.iter().enumerate() {
                key[BITS_PER_BOX * bx] = s;
            }
            for _ in 0..10 {
                let mut keyed = key.clone();
                for (i, bit) in keyed.iter_mut().enumerate() {
                    if i % BITS_PER_BOX != 0 && rng.gen() {
                        *bit = true;
                    }
                }
                let (perm, _) = net.trace_full_lock(&keyed);
                assert_eq!(perm, base);
            }
        }
    }

    fn table_for(f: fn(bool, bool) -> bool) -> [bool; 4] {
        let mut t = [false; 4];
        for (i, slot) in t.iter_mut().enumerate() {
            *slot = f(i & 1 == 1, i >> 1 & 1 == 1);
        }
        t
    }

    #[test]
    fn leb_box_function_selection() {
        // Candidates {AND, OR, XOR, NAND}; aux = binary 10 (aux1=1,
        // aux0=0) indexes entry 2, so each box output computes XOR.
        let cand = [
            table_for(|a, b| a && b),
            table_for(|a, b| a || b),
            table_for(|a, b| a ^ b),
            table_for(|a, b| !(a && b)),
        ];
        let net = build_banyan(4).unwrap();
        let boxes: Vec<LebBox> = (0..net.num_boxes())
            .map(|_| LebBox {
                tables: [cand, cand],
            })
            .collect();
        let frag = net.to_netlist(&BoxMode::Leb(&boxes));
        // All boxes: swap off, aux1 on, aux0 off.
        let mut key = vec![false; net.key_bit_count()];
        for stage in 0..net.stages() {
            for bx in 0..net.boxes_per_stage() {
                key[net.key_bit_index(stage, bx, 2)] = true;
            }
        }
        // Reference:  evaluate the staged XOR semantics directly.
        for v in 0u32..16 {
            let ins: Vec<bool> = (0..4).map(|k| v >> k & 1 == 1).collect();
            let mut expect = ins.clone();
            let mut next = vec![false; 4];
            for (stage, bound) in net.wiring.iter().enumerate() {
                for (pos, &p) in bound.iter().enumerate() {
                    next[p as usize] = expect[pos];
                }
                std::mem::swap(&mut expect, &mut next);
                if stage < net.stages() {
                    for bx in 0..2 {
                        let x = expect[2 * bx] ^ expect[2 * bx + 1];
                        expect[2 * bx] = x;
                        expect[2 * bx + 1] = x;
                    }
                }
            }
            let mut assignment = ins.clone();
            assignment.extend(&key);
            assert_eq!(frag.simulate(&assignment).unwrap(), expect);
        }
    }
}
