//! Clause templates for the gate and adder bitslices.
//!
//! XOR/IF/MAJ gates use fixed prime-implicate sets. Adder columns get their
//! CNF from exhaustive truth-table enumeration followed by prime-implicant
//! minimization (Quine-McCluskey over the invalid assignments, then a greedy
//! cover). Every generated table is checked against the defining relation.

use std::collections::HashMap;

/// A clause template over the slots of a bitslice: `(slot, positive)`.
pub type ClauseTemplate = Vec<(usize, bool)>;

/// One product term over assignment bits: matches a iff a & cares == values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Cube {
    values: u32,
    cares: u32,
}

impl Cube {
    #[inline]
    fn covers(&self, assignment: u32) -> bool {
        assignment & self.cares == self.values
    }
}

/// Minimal-ish CNF whose models over `n_vars` slots are exactly the
/// assignments where `valid` returns true.
pub fn minimize_relation(n_vars: usize, valid: impl Fn(u32) -> bool) -> Vec<ClauseTemplate> {
    assert!(n_vars <= 16);
    let space = 1u32 << n_vars;
    let minterms: Vec<u32> = (0..space).filter(|&a| !valid(a)).collect();
    if minterms.is_empty() {
        return Vec::new();
    }
    let full = space - 1;
    let mut current: Vec<Cube> = minterms.iter().map(|&m| Cube { values: m, cares: full }).collect();
    let mut primes: Vec<Cube> = Vec::new();
    while !current.is_empty() {
        let mut used = vec![false; current.len()];
        let mut next: Vec<Cube> = Vec::new();
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let (a, b) = (current[i], current[j]);
                if a.cares != b.cares {
                    continue;
                }
                let diff = a.values ^ b.values;
                if diff.count_ones() == 1 {
                    used[i] = true;
                    used[j] = true;
                    let merged = Cube { values: a.values & !diff, cares: a.cares & !diff };
                    // merging is only sound if every assignment in the wider
                    // cube is a minterm; that holds because both halves are
                    if !next.contains(&merged) {
                        next.push(merged);
                    }
                }
            }
        }
        for (i, cube) in current.iter().enumerate() {
            if !used[i] && !primes.contains(cube) {
                primes.push(*cube);
            }
        }
        current = next;
    }

    // Essential primes first, then greedy set cover of the rest.
    let mut covered = vec![false; minterms.len()];
    let cover_sets: Vec<Vec<usize>> = primes
        .iter()
        .map(|p| (0..minterms.len()).filter(|&i| p.covers(minterms[i])).collect())
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    for &m in minterms.iter() {
        let mut owners = primes.iter().enumerate().filter(|(_, p)| p.covers(m));
        let first = owners.next().map(|(pi, _)| pi);
        if owners.next().is_none() {
            if let Some(pi) = first {
                if !chosen.contains(&pi) {
                    chosen.push(pi);
                    for &ci in &cover_sets[pi] {
                        covered[ci] = true;
                    }
                }
            }
        }
    }
    while covered.iter().any(|c| !c) {
        let best = (0..primes.len())
            .filter(|pi| !chosen.contains(pi))
            .max_by_key(|&pi| cover_sets[pi].iter().filter(|&&ci| !covered[ci]).count())
            .expect("uncovered minterm with no prime");
        chosen.push(best);
        for &ci in &cover_sets[best] {
            covered[ci] = true;
        }
    }
    chosen.sort();

    // A cube of invalid assignments negates into one clause.
    let clauses: Vec<ClauseTemplate> = chosen
        .iter()
        .map(|&pi| {
            let p = primes[pi];
            (0..n_vars)
                .filter(|&s| p.cares >> s & 1 == 1)
                .map(|s| (s, p.values >> s & 1 == 0))
                .collect()
        })
        .collect();

    debug_assert!({
        (0..space).all(|a| {
            let sat = clauses.iter().all(|cl| cl.iter().any(|&(s, pos)| (a >> s & 1 == 1) == pos));
            sat == valid(a)
        })
    });
    clauses
}

/// XOR3 biconditional out <-> a ^ b ^ c over slots [a, b, c, out].
/// Exactly the eight clauses that rule out each odd/even mismatch.
pub fn xor3_clauses() -> Vec<ClauseTemplate> {
    let mut out = Vec::with_capacity(8);
    for a in [false, true] {
        for b in [false, true] {
            for c in [false, true] {
                // forbid out != a^b^c at this input point
                let bad_out = !(a ^ b ^ c);
                out.push(vec![(0, !a), (1, !b), (2, !c), (3, !bad_out)]);
            }
        }
    }
    out
}

/// XOR2 biconditional out <-> a ^ b over slots [a, b, out]; four clauses.
pub fn xor2_clauses() -> Vec<ClauseTemplate> {
    let mut out = Vec::with_capacity(4);
    for a in [false, true] {
        for b in [false, true] {
            let bad_out = !(a ^ b);
            out.push(vec![(0, !a), (1, !b), (2, !bad_out)]);
        }
    }
    out
}

/// Prime implicates of out <-> IF(x, y, z) over slots [x, y, z, out].
pub fn if_clauses() -> Vec<ClauseTemplate> {
    minimize_relation(4, |a| {
        let (x, y, z, o) = (a & 1 == 1, a >> 1 & 1 == 1, a >> 2 & 1 == 1, a >> 3 & 1 == 1);
        o == crate::sha256::if_bit(x, y, z)
    })
}

/// Prime implicates of out <-> MAJ(x, y, z) over slots [x, y, z, out].
pub fn maj_clauses() -> Vec<ClauseTemplate> {
    minimize_relation(4, |a| {
        let (x, y, z, o) = (a & 1 == 1, a >> 1 & 1 == 1, a >> 2 & 1 == 1, a >> 3 & 1 == 1);
        o == crate::sha256::maj_bit(x, y, z)
    })
}

/// Shape of one adder column. All inputs carry weight 1: the low carry out
/// of column j-1 is worth 2*2^(j-1) = 2^j here, and the high carry out of
/// column j-2 is worth 4*2^(j-2) = 2^j, which is how a column stays within
/// 7 addends. Outputs are 1..=3 bits (sum, low carry, high carry) encoding
/// the column total; with fewer than 3 outputs the total is taken modulo
/// 2^n_out, dropping carries past the word boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdderShape {
    pub addends: usize,
    pub lo_in: bool,
    pub hi_in: bool,
    pub n_out: usize,
}

impl AdderShape {
    pub fn n_in(&self) -> usize {
        self.addends + self.lo_in as usize + self.hi_in as usize
    }

    /// Column total for an assignment of the input slots.
    pub fn input_total(&self, bits: u32) -> u32 {
        (bits & ((1 << self.n_in()) - 1)).count_ones()
    }

    /// Encoded output value sum + 2*lo + 4*hi (missing outputs count 0).
    pub fn output_total(&self, bits: u32) -> u32 {
        let base = self.n_in();
        let mut total = 0;
        for j in 0..self.n_out {
            total += (bits >> (base + j) & 1) << j;
        }
        total
    }

    pub fn valid(&self, assignment: u32) -> bool {
        let total = self.input_total(assignment);
        let out = self.output_total(assignment);
        let m = 1u32 << self.n_out;
        total % m == out % m
    }
}

/// Cache of minimized adder-column tables keyed by shape.
#[derive(Debug, Default)]
pub struct AdderTables {
    tables: HashMap<AdderShape, Vec<ClauseTemplate>>,
}

impl AdderTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, shape: AdderShape) -> &Vec<ClauseTemplate> {
        assert!(
            shape.n_in() <= 7 && shape.n_in() + shape.n_out <= 16,
            "column has too many inputs"
        );
        self.tables
            .entry(shape)
            .or_insert_with(|| minimize_relation(shape.n_in() + shape.n_out, |a| shape.valid(a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sha256::{if_bit, maj_bit};

    fn eval(clauses: &[ClauseTemplate], a: u32) -> bool {
        clauses.iter().all(|cl| cl.iter().any(|&(s, pos)| (a >> s & 1 == 1) == pos))
    }

    #[test]
    fn xor3_has_eight_clauses_and_matches_truth_table() {
        let cls = xor3_clauses();
        assert_eq!(cls.len(), 8);
        for a in 0u32..16 {
            let want = (a >> 3 & 1) == (a & 1) ^ (a >> 1 & 1) ^ (a >> 2 & 1);
            assert_eq!(eval(&cls, a), want, "assignment {a:04b}");
        }
    }

    #[test]
    fn xor2_has_four_clauses() {
        let cls = xor2_clauses();
        assert_eq!(cls.len(), 4);
        for a in 0u32..8 {
            let want = (a >> 2 & 1) == (a & 1) ^ (a >> 1 & 1);
            assert_eq!(eval(&cls, a), want);
        }
    }

    #[test]
    fn if_maj_truth_tables() {
        let ifs = if_clauses();
        let majs = maj_clauses();
        for a in 0u32..16 {
            let (x, y, z, o) = (a & 1 == 1, a >> 1 & 1 == 1, a >> 2 & 1 == 1, a >> 3 & 1 == 1);
            assert_eq!(eval(&ifs, a), o == if_bit(x, y, z));
            assert_eq!(eval(&majs, a), o == maj_bit(x, y, z));
        }
        // the minimizer should find the classic six-clause covers
        assert!(ifs.len() <= 6, "IF cover has {} clauses", ifs.len());
        assert!(majs.len() <= 6, "MAJ cover has {} clauses", majs.len());
    }

    #[test]
    fn adder_columns_match_arithmetic() {
        let mut tables = AdderTables::new();
        for addends in 2..=5 {
            for (lo_in, hi_in) in [(false, false), (true, false), (true, true)] {
                for n_out in 1..=3 {
                    let shape = AdderShape { addends, lo_in, hi_in, n_out };
                    if shape.n_in() > 7 {
                        continue;
                    }
                    let cls = tables.get(shape).clone();
                    let n = shape.n_in() + n_out;
                    for a in 0..1u32 << n {
                        assert_eq!(eval(&cls, a), shape.valid(a), "shape {shape:?} assignment {a:b}");
                    }
                }
            }
        }
    }

    #[test]
    fn two_zero_addends_produce_zero_outputs() {
        let shape = AdderShape { addends: 2, lo_in: false, hi_in: false, n_out: 2 };
        assert!(shape.valid(0b00_00));
        assert!(!shape.valid(0b01_00));
        assert!(!shape.valid(0b10_00));
    }

    #[test]
    fn seven_ones_decompose_as_binary() {
        // 5 addends + both carries all set: total 7 = 4 + 2 + 1.
        let shape = AdderShape { addends: 5, lo_in: true, hi_in: true, n_out: 3 };
        let inputs = 0b1111111u32;
        let outputs = 0b111u32 << 7;
        assert!(shape.valid(inputs | outputs));
        assert!(!shape.valid(inputs | (0b011 << 7)));
    }
}
