//! Small helpers shared by unit, integration, and acceptance tests.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Builder, GateKind, NetId, Netlist};

/// Path to a bundled benchmark circuit, e.g. `corpus_path("c17")`.
pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(format!("{name}.bench"))
}

/// Parse a bundled benchmark circuit by short name.
pub fn load_corpus(name: &str) -> Netlist {
    let path = corpus_path(name);
    let text =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    crate::netlist::bench::parse_bench(&text)
        .unwrap_or_else(|e| panic!("parse {}: {e}", path.display()))
}

/// All bundled benchmark circuit names, smallest first.
pub const CORPUS: &[&str] = &[
    "c17", "c432", "c499", "c880", "c1355", "c1908", "c2670", "c3540", "c5315", "c6288", "c7552",
];

/// Deterministic random acyclic netlist for property tests.
pub fn random_netlist(seed: u64, n_inputs: usize, n_gates: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::new();
    let mut nets: Vec<NetId> = (0..n_inputs).map(|i| b.input(&format!("i{i}"))).collect();
    for _ in 0..n_gates {
        let arity = match rng.gen_range(0..10) {
            0 => 1,
            1..=6 => 2,
            7 | 8 => 3,
            _ => 4,
        };
        let kind = match (arity, rng.gen_range(0..7)) {
            (1, k) => {
                if k % 2 == 0 {
                    GateKind::Not
                } else {
                    GateKind::Buf
                }
            }
            (_, 0) => GateKind::And,
            (_, 1) => GateKind::Nand,
            (_, 2) => GateKind::Or,
            (_, 3) => GateKind::Nor,
            (_, 4) => GateKind::Xor,
            (_, 5) => GateKind::Xnor,
            (3, _) => GateKind::Mux,
            _ => GateKind::And,
        };
        let arity = if kind == GateKind::Mux { 3 } else { arity };
        let fanin: Vec<NetId> = (0..arity)
            .map(|_| nets[rng.gen_range(0..nets.len())])
            .collect();
        let out = b.gate(kind, &fanin);
        nets.push(out);
    }
    let out = *nets.last().unwrap();
    b.mark_output(out);
    // A second output deepens coverage of multi-output paths.
    if nets.len() > n_inputs + 1 {
        b.mark_output(nets[n_inputs + (nets.len() - n_inputs) / 2]);
    }
    b.finish().expect("generated netlist is valid")
}

/// Enumerate all `2^width` assignments as bit vectors, LSB-first.
pub fn assignments(width: usize) -> impl Iterator<Item = Vec<bool>> {
    assert!(width < 26, "enumeration width too large");
    (0u64..1 << width).map(move |v| (0..width).map(|k| v >> k & 1 == 1).collect())
}
