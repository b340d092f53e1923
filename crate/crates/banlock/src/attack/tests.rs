use super::model::BackMap;
use super::*;
use crate::banyan::build_banyan;
use crate::locking::map::leb_lock;
use crate::locking::{full_lock, LockMetadata, LockedCircuit, Scheme};
use crate::netlist::bench::parse_bench;
use crate::testutil::assignments;

fn xor_toy() -> (LockedCircuit, Netlist) {
    let locked =
        parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(c)\nc = XOR(a, keyinput0)").unwrap();
    let reference = parse_bench("INPUT(a)\nOUTPUT(c)\nc = BUF(a)").unwrap();
    let lc = LockedCircuit {
        locked,
        correct_key: vec![false],
        meta: LockMetadata {
            scheme: Scheme::FullLock,
            width: 0,
            lut_arity: 0,
            seed: 0,
            mapped_gates: vec![],
            input_line_nets: vec![],
            output_line_nets: vec![],
            fragment_nets: vec![],
            network_key_names: vec![],
            luts: vec![],
        },
    };
    (lc, reference)
}

#[test]
fn xor_toy_terminates_in_one_iteration() {
    // One IO pair fixes the single key bit: out = a ^ k and any query
    // pins k = out ^ a.
    let (lc, reference) = xor_toy();
    let oracle = Oracle::from_reference(reference.clone());
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    assert_eq!(result.status, AttackStatus::KeyFound);
    assert_eq!(result.iterations, 1);
    assert_eq!(result.key.as_deref(), Some(&[false][..]));
    assert_eq!(
        verify_key(&lc, result.key.as_ref().unwrap(), &reference, &Budget::UNLIMITED).unwrap(),
        VerifyOutcome::Pass
    );
}

#[test]
fn key_independent_circuit_unsat_immediately() {
    // The output ignores the key: the miter is UNSAT at once and any
    // key is correct (degenerate lock must not crash).
    let locked =
        parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(c)\nc = BUF(a)").unwrap();
    let reference = parse_bench("INPUT(a)\nOUTPUT(c)\nc = BUF(a)").unwrap();
    let lc = LockedCircuit {
        locked,
        correct_key: vec![false],
        meta: xor_toy().0.meta.clone(),
    };
    let oracle = Oracle::from_reference(reference.clone());
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    assert_eq!(result.status, AttackStatus::KeyFound);
    assert_eq!(result.iterations, 0);
    assert_eq!(
        verify_key(&lc, result.key.as_ref().unwrap(), &reference, &Budget::UNLIMITED).unwrap(),
        VerifyOutcome::Pass
    );
}

#[test]
fn miter_requires_key_inputs() {
    let plain = parse_bench("INPUT(a)\nOUTPUT(c)\nc = BUF(a)").unwrap();
    let lc = LockedCircuit {
        locked: plain,
        correct_key: vec![],
        meta: xor_toy().0.meta.clone(),
    };
    assert!(matches!(
        MiterInstance::build(&lc, &AttackOptions::default()),
        Err(AttackError::NoKeyInputs)
    ));
}

fn and_toy_lock() -> (LockedCircuit, Netlist) {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
    let lc = full_lock(&n, 4, 2, 3).unwrap();
    (lc, n)
}

#[test]
fn first_di_rules_out_keys_bruteforce() {
    // Enumerate the whole keyspace of a toy Full-Lock instance and
    // check the first learned IO pair eliminates at least one key.
    let (lc, reference) = and_toy_lock();
    let key_bits = lc.correct_key.len();
    assert!(key_bits <= 16, "toy keyspace must stay enumerable");
    let oracle = Oracle::from_reference(reference);
    let mut miter = MiterInstance::build(&lc, &AttackOptions::default()).unwrap();
    let DiOutcome::Differentiating(di) = miter.solve_differentiating(&Budget::UNLIMITED).unwrap()
    else {
        panic!("a fresh keyed miter must be satisfiable");
    };
    let dout = oracle.query(&di).unwrap();
    let mut eliminated = 0usize;
    for key_val in 0u64..1 << key_bits {
        let key: Vec<bool> = (0..key_bits).map(|k| key_val >> k & 1 == 1).collect();
        if lc.simulate_with_key(&di, &key).unwrap() != dout {
            eliminated += 1;
        }
    }
    assert!(eliminated >= 1, "a DI must rule out at least one key");
}

#[test]
fn exact_attack_on_full_lock_toy() {
    let (lc, reference) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    assert_eq!(result.status, AttackStatus::KeyFound);
    let key = result.key.unwrap();
    assert_eq!(
        verify_key(&lc, &key, &reference, &Budget::UNLIMITED).unwrap(),
        VerifyOutcome::Pass
    );
    // Iteration soundness: every recorded DI ruled out at least one of
    // the keys surviving the previous constraints.
    let key_bits = lc.correct_key.len();
    let mut survivors: Vec<u64> = (0..1u64 << key_bits).collect();
    for rec in &result.trace {
        let before = survivors.len();
        survivors.retain(|&key_val| {
            let key: Vec<bool> = (0..key_bits).map(|k| key_val >> k & 1 == 1).collect();
            lc.simulate_with_key(&rec.di, &key).unwrap() == rec.dout
        });
        assert!(survivors.len() < before, "DI removed no key");
    }
}

#[test]
fn relaxed_attacks_recover_keys_on_toy() {
    let (lc, reference) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    for kind in RelaxedModelKind::ALL {
        for sym in [false, true] {
            if sym && !kind.is_edge() {
                continue;
            }
            let opts = AttackOptions {
                model: kind,
                sym_break: sym,
                ..Default::default()
            };
            let result = sat_attack(&lc, &oracle, &opts).unwrap();
            assert_eq!(
                result.status,
                AttackStatus::KeyFound,
                "model {kind} sym {sym}"
            );
            let key = result.key.unwrap();
            assert_eq!(key.len(), lc.correct_key.len(), "native key width");
            assert_eq!(
                verify_key(&lc, &key, &reference, &Budget::UNLIMITED).unwrap(),
                VerifyOutcome::Pass,
                "model {kind} sym {sym}"
            );
        }
    }
}

#[test]
fn edge_model_variable_structure() {
    let (lc, _) = and_toy_lock();
    let model = AttackModel::relaxed(&lc, RelaxedModelKind::A2aEdge).unwrap();
    // 16 edge variables, 4 polarity bits, plus the LUT table keys.
    let lut_bits: usize = lc.meta.luts.iter().map(|l| l.key_names.len()).sum();
    assert_eq!(model.key_count(), 16 + 4 + lut_bits);
}

#[test]
fn a2ax_edge_solutions_are_permutation_matrices() {
    // Enumerate all edge-variable solutions of the exclusive routing
    // invariants at width 4: exactly the 24 permutation matrices.
    let (lc, _) = and_toy_lock();
    let mut model = AttackModel::relaxed(&lc, RelaxedModelKind::A2axEdge).unwrap();
    let mut session = SolverSession::embedded();
    let f = session.formula_mut();
    let keys = f.fresh_lits(model.key_count());
    model.key_invariants(f, &keys);
    let edge_lits: Vec<Lit> = keys[..16].to_vec();
    let mut solutions = Vec::new();
    loop {
        match session.solve(&[], &Budget::UNLIMITED).unwrap() {
            SolveOutcome::Sat(m) => {
                let bits = m.bits(&edge_lits);
                let block: Vec<Lit> = edge_lits
                    .iter()
                    .zip(&bits)
                    .map(|(&l, &b)| if b { !l } else { l })
                    .collect();
                session.add_clause(&block);
                solutions.push(bits);
            }
            SolveOutcome::Unsat => break,
            SolveOutcome::Timeout => unreachable!(),
        }
    }
    assert_eq!(solutions.len(), 24);
    for bits in &solutions {
        // Rows and columns each sum to one.
        for line in 0..4 {
            assert_eq!((0..4).filter(|&i| bits[line * 4 + i]).count(), 1);
            assert_eq!((0..4).filter(|&o| bits[o * 4 + line]).count(), 1);
        }
    }
}

#[test]
fn recover_identity_routing_gives_zero_network_key() {
    let network = build_banyan(4).unwrap();
    let native_len = network.key_bit_count() + 4;
    let back = BackMap {
        network,
        native_len,
        lut_offset: native_len - 4,
        lut_groups: vec![vec![0, 1]],
    };
    let decoded = RelaxedKey::Routed {
        line_input: vec![0, 1, 2, 3],
        polarity: vec![false; 4],
        lut_bits: vec![true, false, false, true],
    };
    let native = recover_scheme_key(&decoded, &back).expect("identity routes");
    assert!(native[..back.lut_offset].iter().all(|&b| !b));
    assert_eq!(&native[back.lut_offset..], &[true, false, false, true]);
}

#[test]
fn recover_rejects_non_permutation() {
    let network = build_banyan(4).unwrap();
    let native_len = network.key_bit_count();
    let back = BackMap {
        network,
        native_len,
        lut_offset: native_len,
        lut_groups: vec![],
    };
    // Two outputs read input 0; input 3 unread.
    let decoded = RelaxedKey::Routed {
        line_input: vec![0, 0, 1, 2],
        polarity: vec![false; 4],
        lut_bits: vec![],
    };
    assert!(recover_scheme_key(&decoded, &back).is_none());
}

#[test]
fn recover_polarity_lands_on_last_stage() {
    let network = build_banyan(4).unwrap();
    let native_len = network.key_bit_count();
    let stages = network.stages();
    let back = BackMap {
        network,
        native_len,
        lut_offset: native_len,
        lut_groups: vec![],
    };
    let decoded = RelaxedKey::Routed {
        line_input: vec![0, 1, 2, 3],
        polarity: vec![true, false, false, false],
        lut_bits: vec![],
    };
    let native = recover_scheme_key(&decoded, &back).unwrap();
    let (perm, pol) = back.network.trace_full_lock(&native);
    assert_eq!(perm, vec![0, 1, 2, 3]);
    assert_eq!(pol, vec![true, false, false, false]);
    // Only a last-stage auxiliary bit is set.
    for (i, &bit) in native.iter().enumerate() {
        if bit {
            let bx = i / 3;
            assert!(bx / back.network.boxes_per_stage() == stages - 1);
            assert!(i % 3 != 0, "swap bits stay zero for identity routing");
        }
    }
}

#[test]
fn leb_rejects_relaxation() {
    let n = parse_bench(
        "INPUT(i0)\nINPUT(i1)\nINPUT(i2)\nINPUT(i3)\nINPUT(i4)\nOUTPUT(o0)\nOUTPUT(o1)\n\
         g0 = AND(i0, i1)\ng1 = OR(i2, i3)\ng2 = XOR(g0, g1)\ng3 = NAND(g0, i2)\n\
         g4 = AND(i4, g2)\no0 = OR(g3, g4)\no1 = NOT(g2)",
    )
    .unwrap();
    let lc = leb_lock(&n, 4, 2).unwrap();
    assert!(matches!(
        AttackModel::relaxed(&lc, RelaxedModelKind::A2axEdge),
        Err(AttackError::RelaxationUnsupported(Scheme::Leb))
    ));
    // The exact model attacks LEB fine.
    let oracle = Oracle::from_reference(n.clone());
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    assert_eq!(result.status, AttackStatus::KeyFound);
    assert_eq!(
        verify_key(&lc, &result.key.unwrap(), &n, &Budget::UNLIMITED).unwrap(),
        VerifyOutcome::Pass
    );
}

#[test]
fn sym_break_requires_edge_model() {
    let (lc, _) = and_toy_lock();
    let opts = AttackOptions {
        model: RelaxedModelKind::A2axMux,
        sym_break: true,
        ..Default::default()
    };
    assert!(matches!(
        MiterInstance::build(&lc, &opts),
        Err(AttackError::SymBreakNeedsEdge)
    ));
}

#[test]
fn attack_determinism_under_conflict_cap() {
    let (lc, _) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    let opts = AttackOptions {
        model: RelaxedModelKind::A2axEdge,
        sym_break: true,
        wall: None,
        conflicts: Some(1_000_000),
    };
    let a = sat_attack(&lc, &oracle, &opts).unwrap();
    let b = sat_attack(&lc, &oracle, &opts).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.iterations, b.iterations);
    let da: Vec<_> = a.trace.iter().map(|r| (r.di.clone(), r.dout.clone())).collect();
    let db: Vec<_> = b.trace.iter().map(|r| (r.di.clone(), r.dout.clone())).collect();
    assert_eq!(da, db, "identical traces under a fixed conflict cap");
}

#[test]
fn clause_growth_is_monotone() {
    let (lc, _) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    let mut prev = 0usize;
    for rec in &result.trace {
        assert!(rec.cumulative_clauses > prev);
        prev = rec.cumulative_clauses;
    }
}

#[test]
fn timeout_budget_is_respected() {
    let n = crate::testutil::load_corpus("c432");
    let lc = full_lock(&n, 16, 2, 0).unwrap();
    let oracle = Oracle::from_locked(&lc);
    let opts = AttackOptions {
        model: RelaxedModelKind::Exact,
        sym_break: false,
        wall: Some(Duration::from_millis(300)),
        conflicts: None,
    };
    let started = Instant::now();
    let result = sat_attack(&lc, &oracle, &opts).unwrap();
    if result.status == AttackStatus::Timeout {
        assert!(started.elapsed() < Duration::from_secs(30), "budget with slop");
        assert!(result.key.is_none());
    }
}

#[test]
fn trace_hex_format() {
    assert_eq!(bits_to_hex(&[true, false, false, false]), "0x1");
    assert_eq!(bits_to_hex(&[false, true, true, true, true]), "0x1e");
    assert_eq!(bits_to_hex(&[]), "0x0");
    let (lc, _) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    let mut buf = Vec::new();
    result.write_trace(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0], (i + 1).to_string());
        assert!(fields[1].starts_with("0x"));
    }
}

#[test]
fn exhaustive_equivalence_of_all_keys_after_attack() {
    // After the miter is exhausted every surviving key is functionally
    // correct: cross-check on the toy by enumerating survivors.
    let (lc, reference) = and_toy_lock();
    let oracle = Oracle::from_locked(&lc);
    let result = sat_attack(&lc, &oracle, &AttackOptions::default()).unwrap();
    assert_eq!(result.status, AttackStatus::KeyFound);
    let key_bits = lc.correct_key.len();
    let mut checked = 0usize;
    for key_val in 0u64..1 << key_bits {
        let key: Vec<bool> = (0..key_bits).map(|k| key_val >> k & 1 == 1).collect();
        let consistent = result
            .trace
            .iter()
            .all(|rec| lc.simulate_with_key(&rec.di, &key).unwrap() == rec.dout);
        if consistent {
            checked += 1;
            for bits in assignments(2) {
                assert_eq!(
                    lc.simulate_with_key(&bits, &key).unwrap(),
                    reference.simulate(&bits).unwrap(),
                    "surviving key must be functionally correct"
                );
            }
        }
    }
    assert!(checked >= 1);
}
