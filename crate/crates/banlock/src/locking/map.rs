//! LEB insertion: SAT-based mapping of circuit gates onto switch-box
//! outputs, an independent structural checker for the produced mapping,
//! and the locking transform that realizes mapped gates as keyed
//! function tables inside the network.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banyan::{build_banyan, BanyanNetwork, BoxMode, BoxOutput, Consumer, Feeder, LebBox};
use crate::cnf::card::{at_least_k, at_most_one};
use crate::cnf::solver::{Budget, SolverSession};
use crate::cnf::Lit;
use crate::netlist::{Builder, Driver, GateKind, NetId, Netlist};

use super::{LockError, LockMetadata, LockedCircuit, Scheme};

/// What can occupy a switch-box output: a circuit gate (computed or fed
/// through) or a primary input (fed through only).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Content {
    Gate(usize),
    Input(NetId),
}

/// A satisfying assignment to the mapping constraints: which content
/// occupies which switch-box output.
#[derive(Clone, Debug)]
pub struct GateMapping {
    pub width: u32,
    /// The at-least bound on distinct mapped gates this mapping was
    /// solved under (the network width unless overridden).
    pub min_gates: usize,
    pub pairs: Vec<(Content, BoxOutput)>,
}

impl GateMapping {
    pub fn content_at(&self) -> HashMap<BoxOutput, Content> {
        self.pairs.iter().map(|&(c, s)| (s, c)).collect()
    }

    pub fn mapped_real_gates(&self) -> HashSet<usize> {
        self.pairs
            .iter()
            .filter_map(|&(c, _)| match c {
                Content::Gate(g) => Some(g),
                Content::Input(_) => None,
            })
            .collect()
    }

    pub fn placements_of(&self, c: Content) -> Vec<BoxOutput> {
        self.pairs
            .iter()
            .filter(|&&(pc, _)| pc == c)
            .map(|&(_, s)| s)
            .collect()
    }
}

/// Cap on the candidate-gate pool; keeps the mapping instance tractable
/// on large hosts while leaving small hosts fully covered.
fn pool_cap(width: u32) -> usize {
    (32 * width as usize).max(320)
}

/// Fanin drivers of a gate as contents.
fn fanin_contents(n: &Netlist, g: usize) -> Vec<Content> {
    n.gate(g)
        .fanin
        .iter()
        .map(|&f| match n.driver(f) {
            Driver::Gate(d) => Content::Gate(d),
            Driver::Input => Content::Input(f),
        })
        .collect()
}

/// Consumers of a content's value, as contents.
fn fanout_contents(n: &Netlist, consumers: &[Vec<usize>], c: Content) -> Vec<Content> {
    let net = match c {
        Content::Gate(g) => n.gate(g).output,
        Content::Input(id) => id,
    };
    consumers[net.index()]
        .iter()
        .map(|&g| Content::Gate(g))
        .collect()
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

/// Find a mapping of circuit gates onto the network satisfying the
/// insertion constraints: at least `width` gates mapped, at most one
/// content per box output, no content in both the first and last layer,
/// fanin correspondence (with the feedthrough exception), and fanout
/// correspondence. The seed shuffles variable creation order, which
/// steers the solver's branching toward different solutions.
pub fn map_gates(
    n: &Netlist,
    network: &BanyanNetwork,
    seed: u64,
) -> Result<GateMapping, LockError> {
    map_gates_with_min(n, network, seed, network.width() as usize)
}

/// [`map_gates`] with an explicit lower bound on mapped gates, for hosts
/// smaller than the width-derived default.
pub fn map_gates_with_min(
    n: &Netlist,
    network: &BanyanNetwork,
    seed: u64,
    min_gates: usize,
) -> Result<GateMapping, LockError> {
    if n.gates().iter().any(|g| g.fanin.len() > 2) {
        return Err(LockError::Infeasible(
            "host must be split to two-input gates first".into(),
        ));
    }
    let width = network.width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d61_7067);
    let consumers = consumer_index(n);

    // Candidate pool: a connected region grown from a random start.
    let real_gates = grow_pool(n, &consumers, pool_cap(width), &mut rng);
    if real_gates.len() < min_gates {
        return Err(LockError::Infeasible(format!(
            "cannot map {min_gates} gates onto width {width}: only {} candidates",
            real_gates.len()
        )));
    }
    let mut contents: Vec<Content> = real_gates.iter().map(|&g| Content::Gate(g)).collect();
    let mut pi_adjacent: Vec<NetId> = Vec::new();
    let mut pi_seen: HashSet<NetId> = HashSet::new();
    for &g in &real_gates {
        for &f in &n.gate(g).fanin {
            if n.driver(f) == Driver::Input && pi_seen.insert(f) {
                pi_adjacent.push(f);
            }
        }
    }
    pi_adjacent.sort();
    contents.extend(pi_adjacent.iter().map(|&id| Content::Input(id)));
    contents.shuffle(&mut rng);

    let outputs: Vec<BoxOutput> = network.box_outputs().collect();
    let last_stage = network.stages() - 1;

    let mut session = SolverSession::embedded();
    let f = session.formula_mut();

    // Mapping variables, allocated in shuffled content order.
    let mut mvar: HashMap<(Content, BoxOutput), Lit> = HashMap::new();
    for &c in &contents {
        for &s in &outputs {
            mvar.insert((c, s), f.fresh_var().positive());
        }
    }
    let in_pool: HashSet<Content> = contents.iter().copied().collect();

    // At least `width` real gates mapped somewhere.
    let mut gate_mapped: Vec<Lit> = Vec::new();
    for &g in &real_gates {
        let og = f.fresh_var().positive();
        let mut clause = vec![!og];
        clause.extend(outputs.iter().map(|&s| mvar[&(Content::Gate(g), s)]));
        f.add_clause(&clause);
        gate_mapped.push(og);
    }
    at_least_k(f, &gate_mapped, min_gates);

    // At most one content per box output.
    for &s in &outputs {
        let lits: Vec<Lit> = contents.iter().map(|&c| mvar[&(c, s)]).collect();
        at_most_one(f, &lits);
    }

    // No content may appear in both the first and the last layer; that
    // would allow a path feeding straight through the network.
    for &c in &contents {
        let first = f.fresh_var().positive();
        let last = f.fresh_var().positive();
        for &s in &outputs {
            if s.stage == 0 {
                f.add_clause(&[!mvar[&(c, s)], first]);
            }
            if s.stage == last_stage {
                f.add_clause(&[!mvar[&(c, s)], last]);
            }
        }
        f.add_clause(&[!first, !last]);
    }

    // Fanin correspondence beyond the first layer: mapping c at s
    // requires each of its fanins at a feeder of s, or c itself fed
    // through from a feeder. Contents without fanins (primary inputs,
    // constant gates with none) can only feed through.
    for &c in &contents {
        let fanins: Vec<Content> = match c {
            Content::Gate(g) => fanin_contents(n, g),
            Content::Input(_) => Vec::new(),
        };
        for &s in &outputs {
            if s.stage == 0 {
                continue;
            }
            let feeders: Vec<BoxOutput> = network
                .box_feeders(s.stage, s.bx)
                .iter()
                .map(|fd| match fd {
                    Feeder::Box(b) => *b,
                    Feeder::InputLine(_) => unreachable!("stage > 0"),
                })
                .collect();
            let feed_self: Vec<Lit> = feeders
                .iter()
                .filter(|_| in_pool.contains(&c))
                .map(|&sf| mvar[&(c, sf)])
                .collect();
            if fanins.is_empty() {
                // Derivability for zero-fanin contents: must feed through.
                let mut clause = vec![!mvar[&(c, s)]];
                clause.extend(&feed_self);
                f.add_clause(&clause);
                continue;
            }
            for &d in &fanins {
                let mut clause = vec![!mvar[&(c, s)]];
                if in_pool.contains(&d) {
                    clause.extend(feeders.iter().map(|&sf| mvar[&(d, sf)]));
                }
                clause.extend(&feed_self);
                f.add_clause(&clause);
            }
        }
    }

    // Fanout correspondence before the last layer: some fanout of c (or
    // c itself, feeding through) occupies an output of the consuming box.
    for &c in &contents {
        let mut fanouts: Vec<Content> = fanout_contents(n, &consumers, c)
            .into_iter()
            .filter(|d| in_pool.contains(d))
            .collect();
        fanouts.push(c);
        fanouts.dedup();
        for &s in &outputs {
            if s.stage == last_stage {
                continue;
            }
            let (next_bx, _) = match network.box_consumer(s) {
                Consumer::Box { bx, port } => (bx, port),
                Consumer::OutputLine(_) => unreachable!("not last stage"),
            };
            let mut clause = vec![!mvar[&(c, s)]];
            for out in 0..2 {
                let sf = BoxOutput {
                    stage: s.stage + 1,
                    bx: next_bx,
                    out,
                };
                clause.extend(fanouts.iter().map(|&cf| mvar[&(cf, sf)]));
            }
            f.add_clause(&clause);
        }
    }

    match session
        .solve(&[], &Budget::UNLIMITED)
        .expect("embedded solver does not fault")
    {
        crate::cnf::solver::SolveOutcome::Sat(model) => {
            let mut pairs: Vec<(Content, BoxOutput)> = Vec::new();
            for &c in &contents {
                for &s in &outputs {
                    if model.lit_value(mvar[&(c, s)]) {
                        pairs.push((c, s));
                    }
                }
            }
            let mapping = GateMapping {
                width,
                min_gates,
                pairs,
            };
            check_mapping(n, network, &mapping)
                .map_err(|e| LockError::Infeasible(format!("solver mapping fails checks: {e}")))?;
            Ok(mapping)
        }
        crate::cnf::solver::SolveOutcome::Unsat => Err(LockError::Infeasible(format!(
            "no mapping of width {width} exists for this host"
        ))),
        crate::cnf::solver::SolveOutcome::Timeout => unreachable!("no budget set"),
    }
}

fn grow_pool(
    n: &Netlist,
    consumers: &[Vec<usize>],
    cap: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let total = n.num_gates();
    if total <= cap {
        return (0..total).collect();
    }
    let mut member = vec![false; total];
    let mut pool: Vec<usize> = Vec::with_capacity(cap);
    let mut frontier = vec![rng.gen_range(0..total)];
    while pool.len() < cap {
        let g = match frontier.pop() {
            Some(g) => g,
            None => {
                // Disconnected remainder: jump to a fresh random gate.
                let mut g = rng.gen_range(0..total);
                while member[g] {
                    g = (g + 1) % total;
                }
                g
            }
        };
        if member[g] {
            continue;
        }
        member[g] = true;
        pool.push(g);
        let gate = n.gate(g);
        for &fanin in &gate.fanin {
            if let Driver::Gate(d) = n.driver(fanin) {
                if !member[d] {
                    frontier.push(d);
                }
            }
        }
        for &c in &consumers[gate.output.index()] {
            if !member[c] {
                frontier.push(c);
            }
        }
        frontier.shuffle(rng);
    }
    pool
}

/// Independent structural validation of a mapping, with no SAT involved.
/// Checks exactly the insertion constraints, including the feedthrough
/// exceptions and the first/last-layer prohibition.
pub fn check_mapping(
    n: &Netlist,
    network: &BanyanNetwork,
    mapping: &GateMapping,
) -> Result<(), String> {
    let consumers = consumer_index(n);
    let last_stage = network.stages() - 1;

    // At least W distinct real gates.
    let real = mapping.mapped_real_gates();
    if real.len() < mapping.min_gates {
        return Err(format!(
            "only {} gates mapped, need {}",
            real.len(),
            mapping.min_gates
        ));
    }
    // At most one content per output.
    let mut seen: HashSet<BoxOutput> = HashSet::new();
    for &(_, s) in &mapping.pairs {
        if !seen.insert(s) {
            return Err(format!("box output {s:?} mapped twice"));
        }
    }
    // First/last layer exclusion.
    let distinct: HashSet<Content> = mapping.pairs.iter().map(|&(c, _)| c).collect();
    for &c in &distinct {
        let placements = mapping.placements_of(c);
        let in_first = placements.iter().any(|s| s.stage == 0);
        let in_last = placements.iter().any(|s| s.stage == last_stage);
        if in_first && in_last {
            return Err(format!("content {c:?} spans first and last layer"));
        }
    }
    let mapped: HashSet<(Content, BoxOutput)> = mapping.pairs.iter().copied().collect();
    for &(c, s) in &mapping.pairs {
        // Fanin condition beyond first layer.
        if s.stage > 0 {
            let feeders: Vec<BoxOutput> = network
                .box_feeders(s.stage, s.bx)
                .iter()
                .map(|fd| match fd {
                    Feeder::Box(b) => *b,
                    Feeder::InputLine(_) => unreachable!(),
                })
                .collect();
            let self_fed = feeders.iter().any(|&sf| mapped.contains(&(c, sf)));
            let fanins: Vec<Content> = match c {
                Content::Gate(g) => fanin_contents(n, g),
                Content::Input(_) => Vec::new(),
            };
            if fanins.is_empty() {
                if !self_fed {
                    return Err(format!("{c:?} at {s:?} has no feedthrough source"));
                }
            } else {
                for &d in &fanins {
                    let direct = feeders.iter().any(|&sf| mapped.contains(&(d, sf)));
                    if !direct && !self_fed {
                        return Err(format!(
                            "{c:?} at {s:?}: fanin {d:?} not at a feeder and no feedthrough"
                        ));
                    }
                }
            }
        }
        // Fanout condition before last layer.
        if s.stage < last_stage {
            let (next_bx, _) = match network.box_consumer(s) {
                Consumer::Box { bx, port } => (bx, port),
                Consumer::OutputLine(_) => unreachable!(),
            };
            let mut ok = false;
            let mut fanouts = fanout_contents(n, &consumers, c);
            fanouts.push(c);
            'search: for out in 0..2 {
                let sf = BoxOutput {
                    stage: s.stage + 1,
                    bx: next_bx,
                    out,
                };
                for &cf in &fanouts {
                    if mapped.contains(&(cf, sf)) {
                        ok = true;
                        break 'search;
                    }
                }
            }
            if !ok {
                return Err(format!("{c:?} at {s:?}: no fanout mapped at consuming box"));
            }
        }
    }
    Ok(())
}

/// How a mapped content is realized inside its box.
#[derive(Clone, Debug)]
enum Realization {
    /// The box computes the gate's function; `port_of_fanin[k]` is the
    /// input port carrying fanin `k`'s value.
    Compute { port_of_fanin: Vec<usize> },
    /// The box passes the content's own value through from `port`.
    Feedthrough { port: usize },
}

/// Apply logic-enhanced Banyan locking: split the host to two-input
/// gates, map a region onto the network, move mapped gates into keyed
/// 4-way switch-box function tables (the other three entries per output
/// are random decoys), and keep the result acyclic and functionally
/// equivalent under the correct key.
pub fn leb_lock(n: &Netlist, width: u32, seed: u64) -> Result<LockedCircuit, LockError> {
    if !n.key_inputs().is_empty() {
        return Err(LockError::AlreadyKeyed);
    }
    let network = build_banyan(width)?;
    let split = n.split_to_two_input();
    let mapping = map_gates(&split, &network, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c65_626c);
    lock_from_mapping(&split, &network, &mapping, width, seed, &mut rng)
}

fn lock_from_mapping(
    split: &Netlist,
    network: &BanyanNetwork,
    mapping: &GateMapping,
    width: u32,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<LockedCircuit, LockError> {
    let consumers = consumer_index(split);
    let content_at = mapping.content_at();
    let last_stage = network.stages() - 1;
    let width_us = width as usize;

    // Per-box correct key bits.
    let swap: Vec<bool> = (0..network.num_boxes()).map(|_| rng.gen()).collect();
    let correct_idx: Vec<u8> = (0..network.num_boxes()).map(|_| rng.gen_range(0..4)).collect();

    // Choose realizations stage by stage; stage-0 boxes also assign
    // nets to their input lines.
    let mut realization: HashMap<BoxOutput, Realization> = HashMap::new();
    let mut line_net: Vec<Option<NetId>> = vec![None; width_us];
    let mut keep: HashSet<usize> = HashSet::new();

    for bx in 0..network.boxes_per_stage() {
        let ports: Vec<u32> = network
            .box_feeders(0, bx)
            .iter()
            .map(|fd| match fd {
                Feeder::InputLine(l) => *l,
                Feeder::Box(_) => unreachable!("stage 0"),
            })
            .collect();
        let outs: Vec<(usize, Content)> = (0..2)
            .filter_map(|out| {
                content_at
                    .get(&BoxOutput { stage: 0, bx, out })
                    .map(|&c| (out, c))
            })
            .collect();
        // Joint choice per box, preferring compute realizations (which
        // let the gate be removed); feedthrough of each content's own
        // value always fits, so some option succeeds.
        let n_outs = outs.len();
        let option_sets: &[&[bool]] = match n_outs {
            0 => &[&[]],
            1 => &[&[true], &[false]],
            _ => &[
                &[true, true],
                &[true, false],
                &[false, true],
                &[false, false],
            ],
        };
        let mut committed = false;
        for &wants in option_sets {
            let mut trial: [Option<NetId>; 2] = [None, None];
            let mut plans: Vec<(BoxOutput, Realization)> = Vec::with_capacity(n_outs);
            let mut ok = true;
            for (&(out, c), &want_compute) in outs.iter().zip(wants) {
                let s = BoxOutput { stage: 0, bx, out };
                match plan_stage0(split, c, want_compute, &mut trial) {
                    Some(r) => plans.push((s, r)),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            for (s, r) in plans {
                if let Realization::Feedthrough { .. } = r {
                    if let Content::Gate(g) = content_at[&s] {
                        keep.insert(g);
                    }
                }
                realization.insert(s, r);
            }
            for (slot, net) in trial.iter().enumerate() {
                if let Some(net) = net {
                    line_net[ports[slot] as usize] = Some(*net);
                }
            }
            committed = true;
            break;
        }
        if !committed {
            return Err(LockError::Infeasible(format!(
                "stage-0 port conflict at box {bx}"
            )));
        }
    }
    for stage in 1..network.stages() {
        for bx in 0..network.boxes_per_stage() {
            let feeders: Vec<BoxOutput> = network
                .box_feeders(stage, bx)
                .iter()
                .map(|fd| match fd {
                    Feeder::Box(b) => *b,
                    Feeder::InputLine(_) => unreachable!(),
                })
                .collect();
            for out in 0..2 {
                let s = BoxOutput { stage, bx, out };
                let Some(&c) = content_at.get(&s) else {
                    continue;
                };
                let port_content =
                    |p: usize| -> Option<Content> { content_at.get(&feeders[p]).copied() };
                let r = plan_inner(split, c, &port_content);
                match r {
                    Some(r) => {
                        realization.insert(s, r);
                    }
                    None => {
                        return Err(LockError::Infeasible(format!(
                            "no realization for {c:?} at {s:?} (checker should prevent this)"
                        )))
                    }
                }
            }
        }
    }

    // Exported contents: last-layer placements, lowest line wins.
    let mut exported: HashMap<usize, u32> = HashMap::new();
    let mut last_layer: Vec<(BoxOutput, Content)> = content_at
        .iter()
        .filter(|(s, _)| s.stage == last_stage)
        .map(|(&s, &c)| (s, c))
        .collect();
    last_layer.sort_by_key(|&(s, _)| (s.bx, s.out));
    for (s, c) in last_layer {
        if let (Content::Gate(g), Consumer::OutputLine(l)) = (c, network.box_consumer(s)) {
            let entry = exported.entry(g).or_insert(l);
            *entry = (*entry).min(l);
        }
    }

    // Keep fixpoint: a mapped gate may be removed only if every consumer
    // of its value is itself removed or the gate is exported at the last
    // layer; stage-0 compute fanins must survive; nothing feeding the
    // network inputs may depend on a removed gate.
    let mapped_real = mapping.mapped_real_gates();
    let stage0_sources: Vec<NetId> = line_net.iter().flatten().copied().collect();
    loop {
        let removed: HashSet<usize> = mapped_real
            .iter()
            .copied()
            .filter(|g| !keep.contains(g))
            .collect();
        let mut grew = false;
        for &g in &removed {
            let out = split.gate(g).output;
            let external = consumers[out.index()]
                .iter()
                .any(|c| !removed.contains(c))
                || split.primary_outputs().contains(&out);
            if external && !exported.contains_key(&g) {
                keep.insert(g);
                grew = true;
            }
        }
        // Stage-0 sources: their entire cones must survive.
        for &src in &stage0_sources {
            for g in cone_gates(split, src) {
                if removed.contains(&g) {
                    keep.insert(g);
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let removed: HashSet<usize> = mapped_real
        .iter()
        .copied()
        .filter(|g| !keep.contains(g))
        .collect();

    // Function tables.
    let mut boxes: Vec<LebBox> = Vec::with_capacity(network.num_boxes());
    for stage in 0..network.stages() {
        for bx in 0..network.boxes_per_stage() {
            let bidx = network.box_index(stage, bx);
            let sw = swap[bidx] as usize;
            let mut tables = [[[false; 4]; 4]; 2];
            for (out, table_set) in tables.iter_mut().enumerate() {
                for entry in table_set.iter_mut() {
                    for slot in entry.iter_mut() {
                        *slot = rng.gen();
                    }
                }
                let s = BoxOutput { stage, bx, out };
                if let Some(r) = realization.get(&s) {
                    let c = content_at[&s];
                    let correct = &mut table_set[correct_idx[bidx] as usize];
                    for row in 0..4usize {
                        // Value seen at port p for this row of (a, b).
                        let port_val = |p: usize| -> bool {
                            if p == sw {
                                row & 1 == 1
                            } else {
                                row >> 1 & 1 == 1
                            }
                        };
                        correct[row] = match r {
                            Realization::Feedthrough { port } => port_val(*port),
                            Realization::Compute { port_of_fanin } => {
                                let args: Vec<bool> =
                                    port_of_fanin.iter().map(|&p| port_val(p)).collect();
                                match c {
                                    Content::Gate(g) => split.gate(g).kind.eval(&args),
                                    Content::Input(_) => unreachable!("inputs feed through"),
                                }
                            }
                        };
                    }
                }
            }
            boxes.push(LebBox { tables });
        }
    }

    // Netlist surgery. Only nets that survive are re-interned; a
    // removed gate whose value is consumed nowhere outside the network
    // simply disappears.
    let mut used: HashSet<NetId> = split
        .primary_inputs()
        .iter()
        .chain(split.primary_outputs())
        .copied()
        .collect();
    for g in 0..split.num_gates() {
        if removed.contains(&g) {
            continue;
        }
        let gate = split.gate(g);
        used.insert(gate.output);
        used.extend(gate.fanin.iter().copied());
    }
    used.extend(line_net.iter().flatten().copied());
    for (&g, _) in &exported {
        if removed.contains(&g) {
            used.insert(split.gate(g).output);
        }
    }
    let mut b = Builder::new();
    let map: Vec<Option<NetId>> = (0..split.num_nets())
        .map(|i| {
            let id = NetId(i as u32);
            used.contains(&id)
                .then(|| b.intern(split.net_name(id)))
        })
        .collect();
    let map = |id: NetId| map[id.index()].expect("used net interned");
    for &id in split.primary_inputs() {
        b.mark_input(map(id));
    }
    for &g in split.topo_order() {
        if removed.contains(&g) {
            continue;
        }
        let gate = split.gate(g);
        b.drive(
            map(gate.output),
            gate.kind.clone(),
            gate.fanin.iter().map(|&f| map(f)).collect(),
        );
    }
    let key_nets: Vec<NetId> = (0..network.key_bit_count())
        .map(|k| b.key_input(&format!("keyinput{k}")))
        .collect();
    let frag_start = b.num_nets_so_far();
    // Unassigned input lines get random primary inputs: always acyclic.
    let pis: Vec<NetId> = split.primary_inputs().to_vec();
    let line_drivers: Vec<NetId> = line_net
        .iter()
        .map(|slot| match slot {
            Some(net) => map(*net),
            None => map(pis[rng.gen_range(0..pis.len())]),
        })
        .collect();
    let out_lines = network.emit_fragment(&mut b, &line_drivers, &key_nets, &BoxMode::Leb(&boxes));
    let fragment_nets: Vec<String> = (frag_start..b.num_nets_so_far())
        .map(|i| b.name(NetId(i as u32)).to_string())
        .collect();
    // Removed gates' nets are re-driven from their exported output line.
    let mut exports: Vec<(usize, u32)> = exported
        .iter()
        .filter(|(g, _)| removed.contains(g))
        .map(|(&g, &l)| (g, l))
        .collect();
    exports.sort_unstable();
    for (g, line) in exports {
        b.drive(
            map(split.gate(g).output),
            GateKind::Buf,
            vec![out_lines[line as usize]],
        );
    }
    for &id in split.primary_outputs() {
        b.mark_output(map(id));
    }

    let mut correct_key = vec![false; network.key_bit_count()];
    for bidx in 0..network.num_boxes() {
        correct_key[3 * bidx] = swap[bidx];
        correct_key[3 * bidx + 1] = correct_idx[bidx] & 1 == 1;
        correct_key[3 * bidx + 2] = correct_idx[bidx] >> 1 & 1 == 1;
    }
    let meta = LockMetadata {
        scheme: Scheme::Leb,
        width,
        lut_arity: 0,
        seed,
        mapped_gates: {
            let mut names: Vec<String> = mapping
                .mapped_real_gates()
                .iter()
                .map(|&g| split.net_name(split.gate(g).output).to_string())
                .collect();
            names.sort();
            names
        },
        input_line_nets: line_drivers
            .iter()
            .map(|&id| b.name(id).to_string())
            .collect(),
        output_line_nets: out_lines.iter().map(|&id| b.name(id).to_string()).collect(),
        fragment_nets,
        network_key_names: key_nets.iter().map(|&id| b.name(id).to_string()).collect(),
        luts: Vec::new(),
    };
    let locked = b.finish().expect("LEB netlist is valid");
    Ok(LockedCircuit {
        locked,
        correct_key,
        meta,
    })
}

/// Transitive fanin gates of a net.
fn cone_gates(n: &Netlist, net: NetId) -> Vec<usize> {
    let mut seen: HashSet<usize> = HashSet::new();
    let mut stack = vec![net];
    while let Some(x) = stack.pop() {
        if let Driver::Gate(g) = n.driver(x) {
            if seen.insert(g) {
                stack.extend(n.gate(g).fanin.iter().copied());
            }
        }
    }
    seen.into_iter().collect()
}

/// Stage-0 realization planning: claim input-line ports for a content.
/// With `want_compute` the gate's fanin nets take the ports; otherwise
/// the content's own value is fed through one port.
fn plan_stage0(
    split: &Netlist,
    c: Content,
    want_compute: bool,
    port_net: &mut [Option<NetId>; 2],
) -> Option<Realization> {
    fn claim(port_net: &mut [Option<NetId>; 2], p: usize, net: NetId) -> bool {
        match port_net[p] {
            None => {
                port_net[p] = Some(net);
                true
            }
            Some(existing) => existing == net,
        }
    }
    if want_compute {
        let Content::Gate(g) = c else {
            return None; // inputs cannot be computed
        };
        let fanin = &split.gate(g).fanin;
        match fanin.len() {
            0 => return Some(Realization::Compute { port_of_fanin: vec![] }),
            1 => {
                for p in 0..2 {
                    let mut trial = *port_net;
                    if claim(&mut trial, p, fanin[0]) {
                        *port_net = trial;
                        return Some(Realization::Compute {
                            port_of_fanin: vec![p],
                        });
                    }
                }
            }
            2 => {
                for (pa, pb) in [(0usize, 1usize), (1, 0)] {
                    let mut trial = *port_net;
                    if claim(&mut trial, pa, fanin[0]) && claim(&mut trial, pb, fanin[1]) {
                        *port_net = trial;
                        return Some(Realization::Compute {
                            port_of_fanin: vec![pa, pb],
                        });
                    }
                }
            }
            _ => unreachable!("split netlist"),
        }
        return None;
    }
    let own = match c {
        Content::Gate(g) => split.gate(g).output,
        Content::Input(id) => id,
    };
    for p in 0..2 {
        let mut trial = *port_net;
        if claim(&mut trial, p, own) {
            *port_net = trial;
            return Some(Realization::Feedthrough { port: p });
        }
    }
    None
}

/// Inner-stage realization planning against fixed feeder contents.
fn plan_inner(
    split: &Netlist,
    c: Content,
    port_content: &dyn Fn(usize) -> Option<Content>,
) -> Option<Realization> {
    if let Content::Gate(g) = c {
        let fanins = fanin_contents(split, g);
        let assignable = |perm: &[usize]| -> bool {
            fanins
                .iter()
                .zip(perm)
                .all(|(&d, &p)| port_content(p) == Some(d))
        };
        match fanins.len() {
            0 => return Some(Realization::Compute { port_of_fanin: vec![] }),
            1 => {
                for p in 0..2 {
                    if assignable(&[p]) {
                        return Some(Realization::Compute {
                            port_of_fanin: vec![p],
                        });
                    }
                }
            }
            2 => {
                for perm in [[0usize, 1usize], [1, 0]] {
                    if assignable(&perm) {
                        return Some(Realization::Compute {
                            port_of_fanin: perm.to_vec(),
                        });
                    }
                }
                // Same driver on both pins can ride a single port.
                if fanins[0] == fanins[1] {
                    for p in 0..2 {
                        if port_content(p) == Some(fanins[0]) {
                            return Some(Realization::Compute {
                                port_of_fanin: vec![p, p],
                            });
                        }
                    }
                }
            }
            _ => unreachable!("split netlist"),
        }
    }
    for p in 0..2 {
        if port_content(p) == Some(c) {
            return Some(Realization::Feedthrough { port: p });
        }
    }
    None
}
