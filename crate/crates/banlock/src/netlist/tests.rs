use std::collections::HashMap;
use std::path::PathBuf;

use proptest::prelude::*;

use super::bench::{parse_bench, write_bench, BenchError};
use super::*;

fn corpus(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../benchmarks")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

const AND_SRC: &str = "INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)";

#[test]
fn parse_minimal_and() {
    let n = parse_bench(AND_SRC).unwrap();
    assert_eq!(n.num_nets(), 3);
    assert_eq!(n.primary_inputs().len(), 2);
    assert_eq!(n.primary_outputs().len(), 1);
    assert_eq!(n.num_gates(), 1);
    assert_eq!(n.gate(0).kind, GateKind::And);
}

#[test]
fn parse_c17_counts() {
    let n = parse_bench(&corpus("c17.bench")).unwrap();
    assert_eq!(n.primary_inputs().len(), 5);
    assert_eq!(n.primary_outputs().len(), 2);
    assert_eq!(n.num_gates(), 6);
    assert!(n.gates().iter().all(|g| g.kind == GateKind::Nand));
}

#[test]
fn parse_undriven_net() {
    let err = parse_bench("OUTPUT(c)\nc = AND(a, b)").unwrap_err();
    match err {
        BenchError::Invalid(NetlistError::Undriven(name)) => assert_eq!(name, "a"),
        other => panic!("expected undriven error, got {other}"),
    }
}

#[test]
fn parse_duplicate_driver() {
    let err = parse_bench("INPUT(a)\nOUTPUT(c)\nc = NOT(a)\nc = BUF(a)").unwrap_err();
    assert!(matches!(
        err,
        BenchError::Invalid(NetlistError::DuplicateDriver(name)) if name == "c"
    ));
}

#[test]
fn parse_syntax_error_position() {
    let err = parse_bench("INPUT(a)\nc = FROB(a)").unwrap_err();
    match err {
        BenchError::Syntax { line, col, .. } => {
            assert_eq!(line, 2);
            assert_eq!(col, 5);
        }
        other => panic!("expected syntax error, got {other}"),
    }
}

#[test]
fn parse_detects_cycle() {
    let err = parse_bench("INPUT(x)\nOUTPUT(a)\na = BUF(b)\nb = BUF(a)").unwrap_err();
    match err {
        BenchError::Invalid(NetlistError::Cycle(nets)) => {
            let mut nets = nets;
            nets.sort();
            assert_eq!(nets, vec!["a", "b"]);
        }
        other => panic!("expected cycle error, got {other}"),
    }
}

#[test]
fn parse_key_inputs() {
    let n = parse_bench(
        "INPUT(a)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(c)\nc = MUX(keyinput0, a, keyinput1)",
    )
    .unwrap();
    assert_eq!(n.primary_inputs().len(), 1);
    assert_eq!(n.key_inputs().len(), 2);
    assert_eq!(n.net_name(n.key_inputs()[0]), "keyinput0");
}

#[test]
fn parse_folds_constants() {
    let n = parse_bench("INPUT(a)\nINPUT(vcc)\nOUTPUT(c)\nc = AND(a, vcc)").unwrap();
    assert_eq!(n.primary_inputs().len(), 1);
    // AND(a, 1) collapses onto a buffered output.
    assert_eq!(n.simulate(&[true]).unwrap(), vec![true]);
    assert_eq!(n.simulate(&[false]).unwrap(), vec![false]);

    let n = parse_bench("INPUT(a)\nOUTPUT(c)\nc = AND(a, gnd)").unwrap();
    assert_eq!(n.simulate(&[true]).unwrap(), vec![false]);
}

#[test]
fn simulate_and_truth_table() {
    let n = parse_bench(AND_SRC).unwrap();
    assert_eq!(n.simulate(&[true, true]).unwrap(), vec![true]);
    assert_eq!(n.simulate(&[true, false]).unwrap(), vec![false]);
}

#[test]
fn simulate_lut_xor_table() {
    // Table 0110 read LSB-first: index 01 (fanin0=1, fanin1=0) -> bit 1.
    let mut b = Builder::new();
    let a = b.input("a");
    let c = b.input("b");
    let table = vec![false, true, true, false];
    let out = b.gate(GateKind::Lut(table), &[a, c]);
    b.mark_output(out);
    let n = b.finish().unwrap();
    assert_eq!(n.simulate(&[true, false]).unwrap(), vec![true]);
    assert_eq!(n.simulate(&[true, true]).unwrap(), vec![false]);
}

/// Independent evaluation of the canonical c17: six NANDs, hand-wired.
fn c17_reference(i: [bool; 5]) -> [bool; 2] {
    let [g1, g2, g3, g6, g7] = i;
    let nand = |a: bool, b: bool| !(a && b);
    let n10 = nand(g1, g3);
    let n11 = nand(g3, g6);
    let n16 = nand(g2, n11);
    let n19 = nand(n11, g7);
    [nand(n10, n16), nand(n16, n19)]
}

#[test]
fn simulate_c17_matches_reference() {
    let n = parse_bench(&corpus("c17.bench")).unwrap();
    for v in 0u32..32 {
        let bits: Vec<bool> = (0..5).map(|k| v >> k & 1 == 1).collect();
        let got = n.simulate(&bits).unwrap();
        let want = c17_reference([bits[0], bits[1], bits[2], bits[3], bits[4]]);
        assert_eq!(got, want, "input {v:05b}");
    }
    // Frozen from the reference evaluator: all-zero input drives both
    // output NANDs with two logic-1 operands.
    assert_eq!(
        n.simulate(&[false; 5]).unwrap(),
        vec![false, false],
        "c17 all-zero input"
    );
}

#[test]
fn write_and_roundtrip() {
    let n = parse_bench(AND_SRC).unwrap();
    let text = write_bench(&n);
    let again = parse_bench(&text).unwrap();
    assert!(isomorphic(&n, &again));
}

#[test]
fn write_c17_roundtrip_isomorphic() {
    let n = parse_bench(&corpus("c17.bench")).unwrap();
    let again = parse_bench(&write_bench(&n)).unwrap();
    assert!(isomorphic(&n, &again));
}

#[test]
fn write_lut_lowering_equivalent() {
    // Every 2-input table round-trips through .bench with the same function.
    for t in 0u32..16 {
        let mut b = Builder::new();
        let a = b.input("a");
        let c = b.input("b");
        let table: Vec<bool> = (0..4).map(|k| t >> k & 1 == 1).collect();
        let out = b.gate(GateKind::Lut(table), &[a, c]);
        b.mark_output(out);
        let n = b.finish().unwrap();
        let again = parse_bench(&write_bench(&n)).unwrap();
        for v in 0u32..4 {
            let bits = [v & 1 == 1, v >> 1 & 1 == 1];
            assert_eq!(
                n.simulate(&bits).unwrap(),
                again.simulate(&bits).unwrap(),
                "table {t:04b} input {v:02b}"
            );
        }
    }
}

#[test]
fn split_three_input_and() {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(d)\nd = AND(a, b, c)").unwrap();
    let split = n.split_to_two_input();
    assert!(split.gates().iter().all(|g| g.fanin.len() <= 2));
    for v in 0u32..8 {
        let bits: Vec<bool> = (0..3).map(|k| v >> k & 1 == 1).collect();
        assert_eq!(n.simulate(&bits).unwrap(), split.simulate(&bits).unwrap());
    }
}

#[test]
fn split_identity_on_two_input() {
    let n = parse_bench(&corpus("c17.bench")).unwrap();
    let split = n.split_to_two_input();
    assert_eq!(split.num_gates(), n.num_gates());
}

#[test]
fn split_nand_pattern() {
    // NAND(a,b,c) lowers to NOT over an AND tree.
    let n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(d)\nd = NAND(a, b, c)").unwrap();
    let split = n.split_to_two_input();
    let out = split.primary_outputs()[0];
    let top = split.driver_gate(out).unwrap();
    assert_eq!(top.kind, GateKind::Not);
    for v in 0u32..8 {
        let bits: Vec<bool> = (0..3).map(|k| v >> k & 1 == 1).collect();
        assert_eq!(n.simulate(&bits).unwrap(), split.simulate(&bits).unwrap());
    }
}

#[test]
fn split_corpus_circuit_preserves_arity_bound() {
    let n = parse_bench(&corpus("c432.bench")).unwrap();
    assert!(n.gates().iter().any(|g| g.fanin.len() > 2));
    let split = n.split_to_two_input();
    assert!(split.gates().iter().all(|g| g.fanin.len() <= 2));
}

#[test]
fn acyclic_order_property() {
    let n = parse_bench(&corpus("c17.bench")).unwrap();
    let order = n.topo_order();
    assert_eq!(order.len(), n.num_gates());
    let mut seen = vec![false; n.num_nets()];
    for id in n.all_inputs() {
        seen[id.index()] = true;
    }
    for &g in order {
        for f in &n.gate(g).fanin {
            assert!(seen[f.index()], "fanin before driver in order");
        }
        seen[n.gate(g).output.index()] = true;
    }
}

#[test]
fn acyclic_empty_netlist() {
    let n = Netlist::new(vec![], vec![], vec![], vec![], vec![]).unwrap();
    assert!(n.topo_order().is_empty());
}

#[test]
fn assignment_width_checked() {
    let n = parse_bench(AND_SRC).unwrap();
    assert!(matches!(
        n.simulate(&[true]),
        Err(NetlistError::AssignmentWidth { got: 1, want: 2 })
    ));
}

#[test]
fn apply_constants_folds_gates() {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = MUX(a, b, gnd)").unwrap();
    // c = a ? 0 : b  ==  AND(NOT a, b)
    assert_eq!(n.simulate(&[false, true]).unwrap(), vec![true]);
    assert_eq!(n.simulate(&[true, true]).unwrap(), vec![false]);
    let bound = n.apply_constants(&HashMap::from([(n.primary_inputs()[0], true)]));
    assert_eq!(bound.primary_inputs().len(), 1);
    assert_eq!(bound.simulate(&[true]).unwrap(), vec![false]);
}

/// Strategy: random small acyclic netlists over 3..=8 inputs.
fn arb_netlist() -> impl Strategy<Value = Netlist> {
    (3usize..=8, 1usize..=25, any::<u64>()).prop_map(|(n_in, n_gates, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder::new();
        let mut nets: Vec<NetId> = (0..n_in).map(|i| b.input(&format!("i{i}"))).collect();
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
        b.finish().unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip_isomorphic(n in arb_netlist()) {
        let again = parse_bench(&write_bench(&n)).unwrap();
        prop_assert!(isomorphic(&n, &again));
    }

    #[test]
    fn split_preserves_function(n in arb_netlist()) {
        let split = n.split_to_two_input();
        prop_assert!(split.gates().iter().all(|g| g.fanin.len() <= 2));
        let width = n.primary_inputs().len();
        for v in 0u32..1 << width {
            let bits: Vec<bool> = (0..width).map(|k| v >> k & 1 == 1).collect();
            prop_assert_eq!(n.simulate(&bits).unwrap(), split.simulate(&bits).unwrap());
        }
    }
}
