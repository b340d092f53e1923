use proptest::prelude::*;

use super::card::*;
use super::solver::*;
use super::*;
use crate::netlist::bench::parse_bench;
use crate::testutil::{assignments, load_corpus, random_netlist};

/// Clause set in canonical order for structural comparison.
fn canon(f: &CnfFormula) -> Vec<Vec<i32>> {
    let mut clauses: Vec<Vec<i32>> = f
        .iter()
        .map(|c| {
            let mut v: Vec<i32> = c.iter().map(|l| l.to_dimacs()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    clauses.sort();
    clauses
}

#[test]
fn tseitin_single_and_gate() {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
    let (f, map) = tseitin(&n);
    assert_eq!(f.num_vars(), 3);
    assert_eq!(f.num_clauses(), 3);
    let a = map.lit(n.find_net("a").unwrap()).unwrap().to_dimacs();
    let b = map.lit(n.find_net("b").unwrap()).unwrap().to_dimacs();
    let c = map.lit(n.find_net("c").unwrap()).unwrap().to_dimacs();
    let mut want = vec![vec![-a, -b, c], vec![a, -c], vec![b, -c]];
    for cl in &mut want {
        cl.sort_unstable();
    }
    want.sort();
    assert_eq!(canon(&f), want);
}

#[test]
fn tseitin_single_not_gate() {
    let n = parse_bench("INPUT(a)\nOUTPUT(c)\nc = NOT(a)").unwrap();
    let (f, _) = tseitin(&n);
    assert_eq!(f.num_clauses(), 2);
    assert!(f.iter().all(|c| c.len() == 2));
}

#[test]
fn tseitin_c17_agrees_with_simulation_exhaustively() {
    let n = load_corpus("c17");
    let (f, map) = tseitin(&n);
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f;
    let in_lits: Vec<Lit> = n
        .primary_inputs()
        .iter()
        .map(|&id| map.lit(id).unwrap())
        .collect();
    let out_lits: Vec<Lit> = n
        .primary_outputs()
        .iter()
        .map(|&id| map.lit(id).unwrap())
        .collect();
    for bits in assignments(5) {
        let assumps: Vec<Lit> = in_lits
            .iter()
            .zip(&bits)
            .map(|(&l, &b)| if b { l } else { !l })
            .collect();
        let outcome = session.solve(&assumps, &Budget::UNLIMITED).unwrap();
        let model = outcome.model().expect("inputs fixed, circuit consistent");
        let want = n.simulate(&bits).unwrap();
        assert_eq!(model.bits(&out_lits), want);
        // The outputs are forced: flipping one under the same inputs is UNSAT.
        let mut flipped = assumps.clone();
        flipped.push(if want[0] { !out_lits[0] } else { out_lits[0] });
        assert!(session.solve(&flipped, &Budget::UNLIMITED).unwrap().is_unsat());
    }
}

#[test]
fn exactly_one_singleton_is_unit() {
    let mut f = CnfFormula::new();
    let x = f.fresh_var().positive();
    exactly_one(&mut f, &[x]);
    assert_eq!(canon(&f), vec![vec![x.to_dimacs()]]);
}

/// Count satisfying assignments over the base literals by assumption sweep.
fn count_solutions(f: &CnfFormula, base: &[Lit]) -> usize {
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f.clone();
    let mut count = 0;
    for bits in assignments(base.len()) {
        let assumps: Vec<Lit> = base
            .iter()
            .zip(&bits)
            .map(|(&l, &b)| if b { l } else { !l })
            .collect();
        if !session.solve(&assumps, &Budget::UNLIMITED).unwrap().is_unsat() {
            count += 1;
        }
    }
    count
}

#[test]
fn at_most_one_pairwise_counts() {
    let mut f = CnfFormula::new();
    let lits = f.fresh_lits(4);
    at_most_one(&mut f, &lits);
    assert_eq!(f.num_clauses(), 6);
    assert!(f.iter().all(|c| c.len() == 2));
    assert_eq!(count_solutions(&f, &lits), 5);
}

#[test]
fn at_least_k_matches_binomial_oracle() {
    // Oracle: number of 5-bit words with at least 2 ones.
    let oracle: usize = (0u32..32).filter(|v| v.count_ones() >= 2).count();
    assert_eq!(oracle, 26);
    let mut f = CnfFormula::new();
    let lits = f.fresh_lits(5);
    at_least_k(&mut f, &lits, 2);
    assert_eq!(count_solutions(&f, &lits), oracle);
}

#[test]
fn cardinality_encodings_match_bruteforce() {
    // Exhaustive projected-solution-set comparison for every width and
    // every encoding, including the ladder (forced via limit 0).
    for width in 1usize..=12 {
        let mut truth_amo = Vec::new();
        let mut truth_eo = Vec::new();
        for v in 0u32..1 << width {
            let ones = v.count_ones();
            if ones <= 1 {
                truth_amo.push(v);
            }
            if ones == 1 {
                truth_eo.push(v);
            }
        }
        for pairwise_limit in [0, PAIRWISE_LIMIT] {
            let mut f = CnfFormula::new();
            let lits = f.fresh_lits(width);
            at_most_one_with_limit(&mut f, &lits, pairwise_limit);
            assert_eq!(
                solution_set(&f, &lits),
                truth_amo,
                "amo width {width} limit {pairwise_limit}"
            );
        }
        let mut f = CnfFormula::new();
        let lits = f.fresh_lits(width);
        exactly_one(&mut f, &lits);
        assert_eq!(solution_set(&f, &lits), truth_eo, "eo width {width}");
        for k in 0..=width.min(6) {
            let mut f = CnfFormula::new();
            let lits = f.fresh_lits(width);
            at_least_k(&mut f, &lits, k);
            let want: Vec<u32> = (0u32..1 << width)
                .filter(|v| v.count_ones() as usize >= k)
                .collect();
            assert_eq!(solution_set(&f, &lits), want, "alk width {width} k {k}");
        }
    }
}

fn solution_set(f: &CnfFormula, base: &[Lit]) -> Vec<u32> {
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f.clone();
    let mut sols = Vec::new();
    for (i, bits) in assignments(base.len()).enumerate() {
        let assumps: Vec<Lit> = base
            .iter()
            .zip(&bits)
            .map(|(&l, &b)| if b { l } else { !l })
            .collect();
        if !session.solve(&assumps, &Budget::UNLIMITED).unwrap().is_unsat() {
            sols.push(i as u32);
        }
    }
    sols
}

#[test]
fn at_least_k_overflow_is_unsat() {
    let mut f = CnfFormula::new();
    let lits = f.fresh_lits(3);
    at_least_k(&mut f, &lits, 4);
    assert!(f.has_empty_clause());
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f;
    assert!(session.solve(&[], &Budget::UNLIMITED).unwrap().is_unsat());
}

#[test]
fn solve_unit_conflict() {
    let mut session = SolverSession::embedded();
    let x = session.fresh_var().positive();
    session.add_clause(&[x]);
    assert!(session.solve(&[!x], &Budget::UNLIMITED).unwrap().is_unsat());
    // And without the conflicting assumption it is satisfiable again:
    // solving under assumptions never removes state.
    assert!(!session.solve(&[], &Budget::UNLIMITED).unwrap().is_unsat());
}

#[test]
fn solve_models_satisfy_clauses() {
    let mut session = SolverSession::embedded();
    let x = session.fresh_var().positive();
    let y = session.fresh_var().positive();
    session.add_clause(&[x, y]);
    let outcome = session.solve(&[], &Budget::UNLIMITED).unwrap();
    let m = outcome.model().unwrap();
    assert!(m.lit_value(x) || m.lit_value(y));
}

#[test]
fn pigeonhole_unsat() {
    // PHP(5,4): 5 pigeons into 4 holes via the cardinality encodings.
    let mut f = CnfFormula::new();
    let vars: Vec<Vec<Lit>> = (0..5).map(|_| f.fresh_lits(4)).collect();
    for pigeon in &vars {
        exactly_one(&mut f, pigeon);
    }
    for hole in 0..4 {
        let in_hole: Vec<Lit> = vars.iter().map(|p| p[hole]).collect();
        at_most_one(&mut f, &in_hole);
    }
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f;
    assert!(session.solve(&[], &Budget::UNLIMITED).unwrap().is_unsat());
}

#[test]
fn conflict_budget_times_out() {
    // PHP(9,8) is hard enough that two conflicts cannot settle it.
    let mut f = CnfFormula::new();
    let vars: Vec<Vec<Lit>> = (0..9).map(|_| f.fresh_lits(8)).collect();
    for pigeon in &vars {
        exactly_one(&mut f, pigeon);
    }
    for hole in 0..8 {
        let in_hole: Vec<Lit> = vars.iter().map(|p| p[hole]).collect();
        at_most_one(&mut f, &in_hole);
    }
    let mut session = SolverSession::embedded();
    *session.formula_mut() = f;
    let outcome = session.solve(&[], &Budget::conflicts(2)).unwrap();
    assert!(matches!(outcome, SolveOutcome::Timeout));
    // Unlimited re-solve on the same session still answers correctly.
    assert!(session.solve(&[], &Budget::UNLIMITED).unwrap().is_unsat());
}

#[test]
fn dimacs_export_golden() {
    let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(c)\nc = AND(a, b)").unwrap();
    let (f, _) = tseitin(&n);
    assert_eq!(
        f.to_dimacs_string(),
        "p cnf 3 3\n-3 1 0\n-3 2 0\n-1 -2 3 0\n"
    );
}

#[test]
fn dimacs_numbering_stable() {
    let n = load_corpus("c432");
    let (f1, _) = tseitin(&n);
    let (f2, _) = tseitin(&n);
    assert_eq!(f1.to_dimacs_string(), f2.to_dimacs_string());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any model of the Tseitin encoding, projected to inputs and
    /// re-simulated, reproduces the model's output values.
    #[test]
    fn tseitin_model_soundness(seed in any::<u64>()) {
        let n = random_netlist(seed, 5, 20);
        let (f, map) = tseitin(&n);
        let mut session = SolverSession::embedded();
        *session.formula_mut() = f;
        let outcome = session.solve(&[], &Budget::UNLIMITED).unwrap();
        let model = outcome.model().expect("an unconstrained circuit is satisfiable");
        let input_bits: Vec<bool> = n
            .all_inputs()
            .map(|id| model.lit_value(map.lit(id).unwrap()))
            .collect();
        let sim = n.simulate(&input_bits).unwrap();
        let model_outputs: Vec<bool> = n
            .primary_outputs()
            .iter()
            .map(|&id| model.lit_value(map.lit(id).unwrap()))
            .collect();
        prop_assert_eq!(sim, model_outputs);
    }

    /// Solving, adding a clause, and re-solving matches a from-scratch
    /// solve of the union.
    #[test]
    fn incremental_matches_scratch(seed in any::<u64>(), extra in 1usize..5) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_vars = 8u32;
        let clause = |rng: &mut rand_chacha::ChaCha8Rng, f: &CnfFormula| -> Vec<Lit> {
            let len = rng.gen_range(1..=3);
            (0..len)
                .map(|_| {
                    let v = Var::new(rng.gen_range(1..=f.num_vars().max(1)));
                    v.lit(rng.gen_bool(0.5))
                })
                .collect()
        };
        let mut base = CnfFormula::new();
        for _ in 0..n_vars {
            base.fresh_var();
        }
        for _ in 0..12 {
            let c = clause(&mut rng, &base);
            base.add_clause(&c);
        }
        let mut incremental = SolverSession::embedded();
        *incremental.formula_mut() = base.clone();
        let _ = incremental.solve(&[], &Budget::UNLIMITED).unwrap();
        let mut extras = Vec::new();
        for _ in 0..extra {
            let c = clause(&mut rng, &base);
            incremental.add_clause(&c);
            extras.push(c);
        }
        let inc = incremental.solve(&[], &Budget::UNLIMITED).unwrap();

        let mut scratch = SolverSession::embedded();
        *scratch.formula_mut() = base;
        for c in &extras {
            scratch.add_clause(c);
        }
        let sc = scratch.solve(&[], &Budget::UNLIMITED).unwrap();
        prop_assert_eq!(inc.is_unsat(), sc.is_unsat());
    }
}
