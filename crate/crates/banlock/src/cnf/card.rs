//! Cardinality constraint encodings. Small at-most-one groups use the
//! pairwise encoding; larger groups and general bounds use sequential
//! (ladder) counters with fresh auxiliary variables.

use super::{CnfFormula, Lit};

/// At-most-one groups up to this size use the pairwise encoding.
pub const PAIRWISE_LIMIT: usize = 8;

pub fn exactly_one(f: &mut CnfFormula, lits: &[Lit]) {
    assert!(!lits.is_empty(), "exactly_one over empty literal list");
    f.add_clause(lits);
    at_most_one(f, lits);
}

pub fn at_most_one(f: &mut CnfFormula, lits: &[Lit]) {
    at_most_one_with_limit(f, lits, PAIRWISE_LIMIT);
}

pub fn at_most_one_with_limit(f: &mut CnfFormula, lits: &[Lit], pairwise_limit: usize) {
    if lits.len() <= pairwise_limit {
        at_most_one_pairwise(f, lits);
    } else {
        at_most_one_ladder(f, lits);
    }
}

pub fn at_most_one_pairwise(f: &mut CnfFormula, lits: &[Lit]) {
    for (i, &a) in lits.iter().enumerate() {
        for &b in &lits[i + 1..] {
            f.add_clause(&[!a, !b]);
        }
    }
}

/// Sequential at-most-one: ladder variable `s_i` means some literal at
/// or before position `i` is true.
pub fn at_most_one_ladder(f: &mut CnfFormula, lits: &[Lit]) {
    if lits.len() <= 1 {
        return;
    }
    let mut prev: Option<Lit> = None;
    for (i, &l) in lits.iter().enumerate() {
        let s = if i + 1 == lits.len() {
            None
        } else {
            Some(f.fresh_var().positive())
        };
        if let Some(s) = s {
            f.add_clause(&[!l, s]);
            if let Some(p) = prev {
                f.add_clause(&[!p, s]);
            }
        }
        if let Some(p) = prev {
            f.add_clause(&[!p, !l]);
        }
        prev = s;
    }
}

/// Require at least `k` of `lits` to be true, via a sequential counter.
///
/// `k = 0` adds nothing; `k > lits.len()` adds the empty clause, making
/// the formula immediately unsatisfiable.
pub fn at_least_k(f: &mut CnfFormula, lits: &[Lit], k: usize) {
    if k == 0 {
        return;
    }
    if k > lits.len() {
        f.add_clause(&[]);
        return;
    }
    if k == 1 {
        f.add_clause(lits);
        return;
    }
    if k == lits.len() {
        for &l in lits {
            f.add_unit(l);
        }
        return;
    }
    // counts[i][j-1] = "at least j of the first i+1 literals are true".
    let mut prev: Vec<Lit> = Vec::new();
    for (i, &l) in lits.iter().enumerate() {
        let width = (i + 1).min(k);
        let mut row: Vec<Lit> = Vec::with_capacity(width);
        for j in 1..=width {
            let s = f.fresh_var().positive();
            // s <-> prev[j] or (l and prev[j-1]); missing prev entries are
            // constant false (j > i) or constant true (j = 0).
            let carry = prev.get(j - 1).copied(); // "at least j of first i"
            let lower = if j == 1 {
                None // constant true
            } else {
                Some(prev.get(j - 2).copied()) // "at least j-1 of first i"
            };
            match (carry, lower) {
                (Some(c), None) => {
                    // s <-> c or l
                    f.add_clause(&[!s, c, l]);
                    f.add_clause(&[s, !c]);
                    f.add_clause(&[s, !l]);
                }
                (Some(c), Some(Some(lo))) => {
                    // s <-> c or (l and lo)
                    f.add_clause(&[!s, c, l]);
                    f.add_clause(&[!s, c, lo]);
                    f.add_clause(&[s, !c]);
                    f.add_clause(&[s, !l, !lo]);
                }
                (None, None) => {
                    // j = 1, i = 0: s <-> l
                    f.add_clause(&[!s, l]);
                    f.add_clause(&[s, !l]);
                }
                (None, Some(Some(lo))) => {
                    // j = i+1: s <-> l and lo
                    f.add_clause(&[!s, l]);
                    f.add_clause(&[!s, lo]);
                    f.add_clause(&[s, !l, !lo]);
                }
                (None, Some(None)) => {
                    // j > i+1 cannot happen: width caps j at i+1.
                    unreachable!("counter width exceeds prefix length")
                }
                (Some(_), Some(None)) => unreachable!("lower row shorter than carry row"),
            }
            row.push(s);
        }
        prev = row;
    }
    f.add_unit(prev[k - 1]);
}
