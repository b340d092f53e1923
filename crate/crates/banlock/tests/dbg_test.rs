use banlock::attack::model::AttackModel;
use banlock::attack::*;
use banlock::cnf::solver::{Budget, SolveOutcome, SolverSession};
use banlock::cnf::Lit;
use banlock::harness::standalone_host;
use banlock::locking::{full_lock, Scheme};

#[test]
fn dbg_sym_replay() {
    let host = standalone_host(Scheme::FullLock, 4, 2, 0);
    let lc = full_lock(&host, 4, 2, 0).unwrap();
    let oracle = Oracle::from_locked(&lc);
    let opts = AttackOptions { model: RelaxedModelKind::A2axEdge, sym_break: true, wall: None, conflicts: None };
    let result = sat_attack(&lc, &oracle, &opts).unwrap();
    let pairs: Vec<(Vec<bool>, Vec<bool>)> = result.trace.iter().map(|r| (r.di.clone(), r.dout.clone())).collect();
    println!("attack err: {:?}, pairs: {}", result.error, pairs.len());
    for sym in [false, true] {
        let mut model = AttackModel::relaxed(&lc, RelaxedModelKind::A2axEdge).unwrap();
        model.sym_break = sym;
        let mut session = SolverSession::embedded();
        let f = session.formula_mut();
        let t = f.fresh_var().positive();
        f.add_unit(t);
        let keys = f.fresh_lits(model.key_count());
        model.key_invariants(f, &keys);
        for (di, dout) in &pairs {
            let di_lits: Vec<Lit> = di.iter().map(|&b| if b { t } else { !t }).collect();
            let f = session.formula_mut();
            let y = model.instantiate(f, &keys, &di_lits);
            for (&lit, &want) in y.iter().zip(dout) {
                f.add_unit(if want { lit } else { !lit });
            }
        }
        match session.solve(&[], &Budget::UNLIMITED).unwrap() {
            SolveOutcome::Sat(m) => {
                let bits = m.bits(&keys);
                match model.decode_key(&bits) {
                    RelaxedKey::Routed { line_input, .. } => println!("sym={sym}: SAT route {line_input:?}"),
                    _ => println!("sym={sym}: SAT native"),
                }
            }
            SolveOutcome::Unsat => println!("sym={sym}: UNSAT"),
            _ => unreachable!(),
        }
    }
}
