//! LUT input-permutation symmetry breaking for the edge-based relaxed
//! models, plus counting oracles for the equivalence classes the
//! breaking rules out.
//!
//! A LUT whose inputs can be permuted by the routing admits many
//! (configuration, permutation) pairs with identical behavior. Ordering
//! the routed input indices strictly increasing across each LUT's pins
//! keeps exactly one representative per class reachable.

use crate::cnf::{CnfFormula, Lit};

use super::model::LutGroup;

/// Add the ordering clauses for every LUT group. `edge_var(i, line)` is
/// the key literal routing network input `i` to output line `line`.
/// Returns the number of clauses added.
///
/// Ladder variables `s[p][i]` read "pin p's routed index is at least i";
/// each routing choice pins the ladder exactly, and pin p+1's ladder is
/// forced strictly above pin p's.
pub fn add_lut_ordering(
    f: &mut CnfFormula,
    width: usize,
    groups: &[LutGroup],
    edge_var: &dyn Fn(usize, usize) -> Lit,
) -> usize {
    let before = f.num_clauses();
    for group in groups {
        let pins = &group.lines;
        if pins.len() < 2 {
            continue;
        }
        // s[p][i] for i in 1..width ("index >= i").
        let ladders: Vec<Vec<Lit>> = pins
            .iter()
            .map(|_| f.fresh_lits(width - 1))
            .collect();
        for (p, &line) in pins.iter().enumerate() {
            let s = &ladders[p];
            let at = |i: usize| s[i - 1];
            for i in 1..width - 1 {
                f.add_clause(&[at(i), !at(i + 1)]);
            }
            for i in 0..width {
                let k = edge_var(i, line as usize);
                if i >= 1 {
                    f.add_clause(&[!k, at(i)]);
                }
                if i + 1 < width {
                    f.add_clause(&[!k, !at(i + 1)]);
                }
            }
            if p + 1 < pins.len() {
                let next = &ladders[p + 1];
                let next_at = |i: usize| next[i - 1];
                // Strictly increasing: >= 1 unconditionally, and each
                // level of pin p pushes pin p+1 one level higher.
                f.add_clause(&[next_at(1)]);
                for i in 1..width - 1 {
                    f.add_clause(&[!at(i), next_at(i + 1)]);
                }
                // Pin p can never take the top index.
                f.add_clause(&[!at(width - 1)]);
            }
        }
    }
    f.num_clauses() - before
}

/// Number of distinct `arity`-input truth tables up to input
/// permutation, by Burnside's lemma over the symmetric group acting on
/// table rows.
pub fn lut_classes_burnside(arity: usize) -> u64 {
    assert!(arity <= 5, "table enumeration explodes past arity 5");
    let rows = 1usize << arity;
    let mut total: u64 = 0;
    let mut count: u64 = 0;
    let mut perm: Vec<usize> = (0..arity).collect();
    permute_all(&mut perm, 0, &mut |perm| {
        // Cycle count of the induced action on table rows.
        let mut seen = vec![false; rows];
        let mut cycles = 0u32;
        for start in 0..rows {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut r = start;
            while !seen[r] {
                seen[r] = true;
                let mut mapped = 0usize;
                for (to, &from) in perm.iter().enumerate() {
                    if r >> from & 1 == 1 {
                        mapped |= 1 << to;
                    }
                }
                r = mapped;
            }
        }
        total += 1u64 << cycles;
        count += 1;
    });
    total / count
}

/// Brute-force orbit count over all tables; cross-checks Burnside for
/// small arities.
pub fn lut_classes_bruteforce(arity: usize) -> u64 {
    assert!(arity <= 3, "direct enumeration only for tiny arities");
    let rows = 1usize << arity;
    let tables = 1u64 << rows;
    let mut canonical = std::collections::HashSet::new();
    let mut perm: Vec<usize> = (0..arity).collect();
    for t in 0..tables {
        let mut best = u64::MAX;
        permute_all(&mut perm, 0, &mut |perm| {
            let mut mapped_table = 0u64;
            for r in 0..rows {
                let mut mapped_row = 0usize;
                for (to, &from) in perm.iter().enumerate() {
                    if r >> from & 1 == 1 {
                        mapped_row |= 1 << to;
                    }
                }
                if t >> r & 1 == 1 {
                    mapped_table |= 1 << mapped_row;
                }
            }
            best = best.min(mapped_table);
        });
        canonical.insert(best);
    }
    canonical.len() as u64
}

fn permute_all(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute_all(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::card::exactly_one;
    use crate::cnf::solver::{Budget, SolverSession};

    #[test]
    fn burnside_matches_bruteforce_small() {
        for arity in 1..=3 {
            assert_eq!(
                lut_classes_burnside(arity),
                lut_classes_bruteforce(arity),
                "arity {arity}"
            );
        }
    }

    #[test]
    fn two_input_classes_are_twelve() {
        // 16 configurations collapse to 12: four are eliminated.
        assert_eq!(lut_classes_burnside(2), 12);
    }

    #[test]
    fn four_input_classes_are_3984() {
        let classes = lut_classes_burnside(4);
        assert_eq!(classes, 3984);
        assert!(65536.0 / classes as f64 > 10.0, "order-of-magnitude cut");
    }

    /// Enumerate routing solutions for one 2-pin LUT over a width-4
    /// line space, with and without the ordering clauses.
    fn count_routings(sym: bool) -> usize {
        let width = 4usize;
        let mut f = CnfFormula::new();
        let edges: Vec<Lit> = f.fresh_lits(width * width);
        let edge_var = |i: usize, line: usize| edges[line * width + i];
        for line in 0..width {
            let group: Vec<Lit> = (0..width).map(|i| edge_var(i, line)).collect();
            exactly_one(&mut f, &group);
        }
        // Exclusive: each input used once.
        for i in 0..width {
            let group: Vec<Lit> = (0..width).map(|line| edge_var(i, line)).collect();
            exactly_one(&mut f, &group);
        }
        let groups = [LutGroup {
            lines: vec![0, 1],
        }];
        if sym {
            let added = add_lut_ordering(&mut f, width, &groups, &edge_var);
            assert!(added > 0);
        }
        // Count distinct assignments to the LUT pins' routed inputs.
        let mut session = SolverSession::embedded();
        *session.formula_mut() = f;
        let mut count = 0;
        for i0 in 0..width {
            for i1 in 0..width {
                let mut assumps = Vec::new();
                for i in 0..width {
                    let l0 = edge_var(i, 0);
                    assumps.push(if i == i0 { l0 } else { !l0 });
                    let l1 = edge_var(i, 1);
                    assumps.push(if i == i1 { l1 } else { !l1 });
                }
                if !session
                    .solve(&assumps, &Budget::UNLIMITED)
                    .unwrap()
                    .is_unsat()
                {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn ordering_halves_pin_assignments() {
        // Unconstrained: 12 ordered pairs of distinct inputs; with the
        // ordering clauses only the 6 increasing pairs remain.
        assert_eq!(count_routings(false), 12);
        assert_eq!(count_routings(true), 6);
    }

    #[test]
    fn every_unordered_pair_stays_reachable() {
        // Symmetry breaking must keep one representative per class: all
        // 6 unordered pin pairs of a width-4 space remain solvable.
        let width = 4usize;
        let mut f = CnfFormula::new();
        let edges: Vec<Lit> = f.fresh_lits(width * width);
        let edge_var = |i: usize, line: usize| edges[line * width + i];
        for line in 0..width {
            let group: Vec<Lit> = (0..width).map(|i| edge_var(i, line)).collect();
            exactly_one(&mut f, &group);
        }
        let groups = [LutGroup {
            lines: vec![0, 1],
        }];
        add_lut_ordering(&mut f, width, &groups, &edge_var);
        let mut session = SolverSession::embedded();
        *session.formula_mut() = f;
        for a in 0..width {
            for b in a + 1..width {
                // Some solution routes {a, b} onto the two pins.
                let assumps = vec![edge_var(a, 0), edge_var(b, 1)];
                assert!(
                    !session.solve(&assumps, &Budget::UNLIMITED).unwrap().is_unsat(),
                    "pair {{{a},{b}}} unreachable"
                );
            }
        }
    }
}
