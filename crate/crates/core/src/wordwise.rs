//! Wordwise propagation over modular additions.
//!
//! For an addition site with operand words X_1 ... X_k and output word Y, the
//! two instances satisfy sum(X_i) = Y and sum(X_i') = Y', so the modular
//! differences obey dX_1 + ... + dX_k - dY = 0 (mod 2^w). Positions whose
//! condition fixes x - x' contribute constants; an 'x' contributes a shifted
//! binary unknown after normalization (x - x' = 2v - 1 with v = 1 meaning
//! 'u'), and a '?' contributes one unknown per instance. The resulting
//! bitvector equation over binary unknowns splits into carry-independent
//! column ranges which are brute forced (up to 2^10 assignments each); an
//! unknown taking the same value in every solution of its range is forced.

use crate::cnf::Inst;
use crate::cond::Cond;
use crate::lru::LruCache;

/// Upper bound on unknowns per subproblem; larger ranges are skipped.
pub const MAX_SUBPROBLEM_UNKNOWNS: usize = 10;

/// The modular difference sum(c_i - c'_i) 2^i mod 2^w of a condition slice,
/// when every position has a known difference. With `any_as_same` set, '?'
/// positions are assumed to hold equal bits (the auxiliary-word heuristic);
/// 'x' positions always leave the difference unknown.
pub fn modular_difference(conds: &[Cond], any_as_same: bool) -> Option<u64> {
    let w = conds.len();
    let mut acc: i128 = 0;
    for (i, c) in conds.iter().enumerate() {
        match c.signed_diff() {
            Some(d) => acc += (d as i128) << i,
            None if *c == Cond::Any && any_as_same => {}
            None => return None,
        }
    }
    Some(acc.rem_euclid(1i128 << w) as u64)
}

/// Where an unknown came from, enough to translate a forced value back into
/// bit facts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownSource {
    /// An 'x' position: v = 1 means (x, x') = (1, 0), v = 0 means (0, 1);
    /// `negated` flips the meaning (the word entered the equation with a
    /// minus sign).
    Flip { negated: bool },
    /// A '?' position: the unknown mirrors one instance's bit, complemented
    /// when `negated`.
    Free { instance: Inst, negated: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unknown {
    /// Power of two the unknown multiplies.
    pub column: u8,
    /// Index of the source word in the operand list.
    pub word: usize,
    pub bit: u8,
    pub source: UnknownSource,
}

/// A normalized bitvector equation sum(2^column * v) = target (mod 2^width).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditionProblem {
    pub width: usize,
    pub target: u64,
    pub unknowns: Vec<Unknown>,
}

/// One operand of the difference equation.
#[derive(Debug, Clone)]
pub enum Operand<'a> {
    /// A word whose x/? positions become unknowns. `negated` marks the
    /// output side of the addition.
    Word { conds: &'a [Cond], word: usize, negated: bool },
    /// A word folded in via its known modular difference (auxiliary words
    /// and round constants).
    Known { delta: u64, negated: bool },
}

/// Builds the normalized problem. Infallible: callers decide applicability
/// (every auxiliary word must enter as `Known`).
pub fn assemble(width: usize, operands: &[Operand]) -> AdditionProblem {
    let modulus: i128 = 1i128 << width;
    let mut constant: i128 = 0;
    let mut unknowns: Vec<Unknown> = Vec::new();
    for op in operands {
        match op {
            Operand::Known { delta, negated } => {
                constant += if *negated { -(*delta as i128) } else { *delta as i128 };
            }
            Operand::Word { conds, word, negated } => {
                debug_assert_eq!(conds.len(), width);
                for (j, c) in conds.iter().enumerate() {
                    let sign: i128 = if *negated { -1 } else { 1 };
                    match c {
                        Cond::Same | Cond::Zero | Cond::One => {}
                        Cond::U => constant += sign << j,
                        Cond::N => constant -= sign << j,
                        Cond::Diff => {
                            // 2^{j+1} v - 2^j, complementing v on the negative side
                            constant -= 1i128 << j;
                            if j + 1 < width {
                                unknowns.push(Unknown {
                                    column: (j + 1) as u8,
                                    word: *word,
                                    bit: j as u8,
                                    source: UnknownSource::Flip { negated: *negated },
                                });
                            }
                        }
                        Cond::Any => {
                            // 2^j u1 + 2^j u2 - 2^j with one unknown per instance
                            constant -= 1i128 << j;
                            let (raw, complemented) = if *negated {
                                (Inst::Second, Inst::First)
                            } else {
                                (Inst::First, Inst::Second)
                            };
                            unknowns.push(Unknown {
                                column: j as u8,
                                word: *word,
                                bit: j as u8,
                                source: UnknownSource::Free { instance: raw, negated: false },
                            });
                            unknowns.push(Unknown {
                                column: j as u8,
                                word: *word,
                                bit: j as u8,
                                source: UnknownSource::Free { instance: complemented, negated: true },
                            });
                        }
                    }
                }
            }
        }
    }
    let target = (-constant).rem_euclid(modulus) as u64;
    AdditionProblem { width, target, unknowns }
}

/// A carry-independent column range of the normalized equation.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub start_col: usize,
    pub end_col: usize,
    /// Indices into the problem's unknown list.
    pub unknowns: Vec<usize>,
    /// Solution bitmasks over `unknowns`, or None when the range was skipped
    /// as too expensive.
    pub solutions: Option<Vec<u64>>,
    /// True when every solution stays within the range (guaranteed for all
    /// ranges that do not touch the top column, where overflow wraps).
    pub no_overflow: bool,
}

#[derive(Debug, Clone)]
pub enum SplitOutcome {
    /// No assignment satisfies the equation.
    Inconsistent,
    Split(Vec<Subproblem>),
}

/// Scans columns from the least significant end, extending the current range
/// while a carry into the next column is possible and closing it as soon as
/// no solution can overflow. Ranges with more than `MAX_SUBPROBLEM_UNKNOWNS`
/// unknowns are skipped (closed by the all-ones bound) without affecting the
/// others.
pub fn split_subproblems(p: &AdditionProblem) -> SplitOutcome {
    let w = p.width;
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); w];
    for (i, u) in p.unknowns.iter().enumerate() {
        by_col[u.column as usize].push(i);
    }
    let mut out: Vec<Subproblem> = Vec::new();
    let mut j = 0usize;
    while j < w {
        if by_col[j].is_empty() {
            if p.target >> j & 1 == 1 {
                return SplitOutcome::Inconsistent;
            }
            j += 1;
            continue;
        }
        let start = j;
        let mut unknowns: Vec<usize> = Vec::new();
        let mut skipped = false;
        let (solutions, end) = loop {
            unknowns.extend(by_col[j].iter().copied());
            if unknowns.len() > MAX_SUBPROBLEM_UNKNOWNS {
                skipped = true;
            }
            let len = j - start + 1;
            let last = j == w - 1;
            if skipped {
                // all-ones bound on the carry out of this range
                let max: u128 = unknowns
                    .iter()
                    .map(|&i| 1u128 << (p.unknowns[i].column as usize - start))
                    .sum();
                if last || max >> len == 0 {
                    break (None, j);
                }
            } else {
                let sols = enumerate_range(p, &unknowns, start, len, last);
                if sols.is_empty() {
                    return SplitOutcome::Inconsistent;
                }
                let max_carry =
                    sols.iter().map(|&(_, carry)| carry).max().unwrap_or(0);
                if last || max_carry == 0 {
                    break (Some(sols.into_iter().map(|(m, _)| m).collect()), j);
                }
            }
            j += 1;
        };
        out.push(Subproblem {
            start_col: start,
            end_col: end,
            unknowns,
            no_overflow: !skipped,
            solutions,
        });
        j = end + 1;
    }
    SplitOutcome::Split(out)
}

/// Assignments of the range's unknowns matching the target bits; returns
/// (bitmask, carry-out) pairs. On the top range the equation wraps, so the
/// match is modulo 2^len and the carry is reported as zero.
fn enumerate_range(
    p: &AdditionProblem,
    unknowns: &[usize],
    start: usize,
    len: usize,
    wraps: bool,
) -> Vec<(u64, u64)> {
    let coeffs: Vec<u64> = unknowns.iter().map(|&i| 1u64 << (p.unknowns[i].column as usize - start)).collect();
    let mask = if len >= 64 { u64::MAX } else { (1u64 << len) - 1 };
    let want = (p.target >> start) & mask;
    let mut sols = Vec::new();
    for m in 0u64..(1 << unknowns.len()) {
        let value: u64 = coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| m >> i & 1 == 1)
            .map(|(_, &c)| c)
            .sum();
        if value & mask == want {
            let carry = if wraps { 0 } else { value >> len };
            sols.push((m, carry));
        }
    }
    sols
}

/// A pair fact recovered from forced unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForcedBit {
    pub word: usize,
    pub bit: u8,
    pub first: Option<bool>,
    pub second: Option<bool>,
}

/// Collects unknowns that take the same value in every solution of their
/// subproblem and translates them back into instance bits.
pub fn extract_forced(p: &AdditionProblem, subproblems: &[Subproblem]) -> Vec<ForcedBit> {
    let mut facts: Vec<ForcedBit> = Vec::new();
    let mut push = |word: usize, bit: u8, first: Option<bool>, second: Option<bool>| {
        if let Some(existing) = facts.iter_mut().find(|f| f.word == word && f.bit == bit) {
            existing.first = existing.first.or(first);
            existing.second = existing.second.or(second);
        } else {
            facts.push(ForcedBit { word, bit, first, second });
        }
    };
    for sp in subproblems {
        let Some(sols) = &sp.solutions else { continue };
        debug_assert!(!sols.is_empty());
        for (pos, &ui) in sp.unknowns.iter().enumerate() {
            let v0 = sols[0] >> pos & 1;
            if !sols.iter().all(|s| s >> pos & 1 == v0) {
                continue;
            }
            let u = &p.unknowns[ui];
            let v = v0 == 1;
            match u.source {
                UnknownSource::Flip { negated } => {
                    let up = v ^ negated; // true: (1,0) i.e. 'u'; false: (0,1)
                    push(u.word, u.bit, Some(up), Some(!up));
                }
                UnknownSource::Free { instance, negated } => {
                    let val = v ^ negated;
                    match instance {
                        Inst::First => push(u.word, u.bit, Some(val), None),
                        Inst::Second => push(u.word, u.bit, None, Some(val)),
                        Inst::Delta => unreachable!(),
                    }
                }
            }
        }
    }
    facts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordwiseOutcome {
    /// The difference equation has no solution under the current conditions.
    Inconsistent,
    Forced(Vec<ForcedBit>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordwiseStats {
    pub equations: u64,
    pub cache_hits: u64,
    pub subproblems_solved: u64,
    pub subproblems_skipped: u64,
    pub inconsistencies: u64,
    pub bits_forced: u64,
}

/// The wordwise engine: normalization, splitting, brute force and fact
/// extraction, with per-site equation caching.
pub struct WordwiseEngine {
    cache: LruCache<Vec<u64>, WordwiseOutcome>,
    pub stats: WordwiseStats,
}

impl WordwiseEngine {
    pub fn new(cache_capacity: usize) -> Self {
        WordwiseEngine { cache: LruCache::new(cache_capacity), stats: WordwiseStats::default() }
    }

    pub fn propagate(&mut self, width: usize, operands: &[Operand]) -> WordwiseOutcome {
        self.stats.equations += 1;
        let key = cache_key(width, operands);
        if let Some(hit) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return hit;
        }
        let problem = assemble(width, operands);
        let outcome = match split_subproblems(&problem) {
            SplitOutcome::Inconsistent => {
                self.stats.inconsistencies += 1;
                WordwiseOutcome::Inconsistent
            }
            SplitOutcome::Split(sps) => {
                self.stats.subproblems_solved +=
                    sps.iter().filter(|s| s.solutions.is_some()).count() as u64;
                self.stats.subproblems_skipped +=
                    sps.iter().filter(|s| s.solutions.is_none()).count() as u64;
                let forced = extract_forced(&problem, &sps);
                self.stats.bits_forced += forced.len() as u64;
                WordwiseOutcome::Forced(forced)
            }
        };
        self.cache.insert(key, outcome.clone());
        outcome
    }
}

fn cache_key(width: usize, operands: &[Operand]) -> Vec<u64> {
    let mut key = vec![width as u64];
    for op in operands {
        match op {
            Operand::Known { delta, negated } => {
                key.push(1 | (*negated as u64) << 1);
                key.push(*delta);
            }
            Operand::Word { conds, word, negated } => {
                key.push((*negated as u64) << 1 | (*word as u64) << 2);
                let mut packed = 0u64;
                let mut shift = 0;
                for c in conds.iter() {
                    packed |= (c.mask() as u64) << shift;
                    shift += 4;
                    if shift == 64 {
                        key.push(packed);
                        packed = 0;
                        shift = 0;
                    }
                }
                key.push(packed);
            }
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cond::parse_conds;

    fn conds(s: &str) -> Vec<Cond> {
        parse_conds(s).unwrap()
    }

    #[test]
    fn modular_difference_basics() {
        assert_eq!(modular_difference(&conds("---"), false), Some(0));
        // 3-bit [-n-]: -(2^1) = -2 = 6 mod 8
        assert_eq!(modular_difference(&conds("-n-"), false), Some(6));
        assert_eq!(modular_difference(&conds("x--"), false), None);
        assert_eq!(modular_difference(&conds("?--"), false), None);
        assert_eq!(modular_difference(&conds("?u-"), true), Some(2));
    }

    /// delta A = delta B with A = [ux-], B = [-n-]: the only solution makes
    /// bit 1 of A a 'u'.
    #[test]
    fn two_word_equality_example() {
        let a = conds("ux-");
        let b = conds("-n-");
        let mut engine = WordwiseEngine::new(16);
        let ops = [
            Operand::Word { conds: &a, word: 0, negated: false },
            Operand::Word { conds: &b, word: 1, negated: true },
        ];
        match engine.propagate(3, &ops) {
            WordwiseOutcome::Forced(facts) => {
                assert_eq!(
                    facts,
                    vec![ForcedBit { word: 0, bit: 1, first: Some(true), second: Some(false) }]
                );
            }
            other => panic!("{other:?}"),
        }
    }

    /// The five-unknown example: A = [u1xxx], B = [xx-nx], C = [---u-] with
    /// A + B = C forces (a2, a2') = (0, 1) and (b3, b3') = (1, 0).
    #[test]
    fn five_unknown_example() {
        let a = conds("u1xxx");
        let b = conds("xx-nx");
        let c = conds("---u-");
        let delta_c = modular_difference(&c, false).unwrap();
        assert_eq!(delta_c, 2);
        let problem = assemble(
            5,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Word { conds: &b, word: 1, negated: false },
                Operand::Known { delta: delta_c, negated: true },
            ],
        );
        // feasibility target: sum of unknown terms must hit 20 = 0b10100
        assert_eq!(problem.target, 20);
        assert_eq!(problem.unknowns.len(), 5); // the x at b's top bit drops out
        match split_subproblems(&problem) {
            SplitOutcome::Split(sps) => {
                let sizes: Vec<usize> = sps.iter().map(|s| s.unknowns.len()).collect();
                assert_eq!(sizes, vec![3, 1, 1]);
                let forced = extract_forced(&problem, &sps);
                assert!(forced.contains(&ForcedBit {
                    word: 0,
                    bit: 2,
                    first: Some(false),
                    second: Some(true)
                }));
                assert!(forced.contains(&ForcedBit {
                    word: 1,
                    bit: 3,
                    first: Some(true),
                    second: Some(false)
                }));
                assert_eq!(forced.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_same_words_are_trivially_consistent() {
        let a = conds("----");
        let problem = assemble(
            4,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Word { conds: &a, word: 1, negated: false },
                Operand::Word { conds: &a, word: 2, negated: true },
            ],
        );
        assert_eq!(problem.target, 0);
        assert!(problem.unknowns.is_empty());
        match split_subproblems(&problem) {
            SplitOutcome::Split(sps) => assert!(sps.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_equation_detected() {
        // delta A = 1 with A all '-': impossible
        let a = conds("---");
        let problem = assemble(
            3,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Known { delta: 1, negated: true },
            ],
        );
        assert!(matches!(split_subproblems(&problem), SplitOutcome::Inconsistent));
    }

    #[test]
    fn oversized_subproblem_is_skipped() {
        // six '?' positions contribute twelve unknowns; with zero target bits
        // in their columns the ranges chain through carries into one block
        let a = conds("??????------");
        let problem = assemble(
            12,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Known { delta: 0xfc0, negated: true },
            ],
        );
        assert_eq!(problem.unknowns.len(), 12);
        match split_subproblems(&problem) {
            SplitOutcome::Split(sps) => {
                assert!(sps.iter().any(|s| s.solutions.is_none()));
                let forced = extract_forced(&problem, &sps);
                assert!(forced.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ambiguous_unknowns_force_nothing() {
        // delta A = 2 with A = [?x?]: several solutions exist
        let a = conds("x-");
        let problem = assemble(
            2,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Known { delta: 2, negated: true },
            ],
        );
        // x at bit 1 of a 2-bit word: contribution is constant -2 = +2,
        // so the equation holds for both groundings and nothing is forced
        match split_subproblems(&problem) {
            SplitOutcome::Split(sps) => {
                assert!(extract_forced(&problem, &sps).is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    /// Global brute force over every x/? grounding, no splitting: the
    /// reference the engine must match exactly.
    pub(crate) fn oracle_forced(width: usize, operands: &[Operand]) -> Option<Vec<ForcedBit>> {
        #[derive(Clone, Copy)]
        struct FreePos {
            word: usize,
            bit: u8,
            is_flip: bool,
            negated_word: bool,
        }
        let mut free: Vec<FreePos> = Vec::new();
        let mut base: i128 = 0;
        for op in operands {
            match op {
                Operand::Known { delta, negated } => {
                    base += if *negated { -(*delta as i128) } else { *delta as i128 }
                }
                Operand::Word { conds, word, negated } => {
                    for (j, c) in conds.iter().enumerate() {
                        match c {
                            Cond::Any => free.push(FreePos {
                                word: *word,
                                bit: j as u8,
                                is_flip: false,
                                negated_word: *negated,
                            }),
                            Cond::Diff => free.push(FreePos {
                                word: *word,
                                bit: j as u8,
                                is_flip: true,
                                negated_word: *negated,
                            }),
                            _ => {
                                let d = c.signed_diff().unwrap();
                                let s = if *negated { -d } else { d };
                                base += (s as i128) << j;
                            }
                        }
                    }
                }
            }
        }
        let modulus = 1i128 << width;
        // each free position ranges over its pairs; collect surviving pair
        // choices and project
        let n = free.len();
        if n > 20 {
            panic!("oracle instance too large");
        }
        let mut surviving: Vec<Vec<(bool, bool)>> = Vec::new();
        let pairs_of = |p: &FreePos| -> Vec<(bool, bool)> {
            if p.is_flip {
                vec![(true, false), (false, true)]
            } else {
                vec![(false, false), (true, false), (false, true), (true, true)]
            }
        };
        let choices: Vec<Vec<(bool, bool)>> = free.iter().map(pairs_of).collect();
        let mut idx = vec![0usize; n];
        loop {
            let mut acc = base;
            for (i, p) in free.iter().enumerate() {
                let (x, x2) = choices[i][idx[i]];
                let d = (x as i128) - (x2 as i128);
                let s = if p.negated_word { -d } else { d };
                acc += s << p.bit;
            }
            if acc.rem_euclid(modulus) == 0 {
                surviving.push(idx.iter().enumerate().map(|(i, &j)| choices[i][j]).collect());
            }
            let mut done = true;
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < choices[i].len() {
                    done = false;
                    break;
                }
                idx[i] = 0;
            }
            if done {
                break;
            }
        }
        if surviving.is_empty() {
            return None;
        }
        let mut out: Vec<ForcedBit> = Vec::new();
        for (i, p) in free.iter().enumerate() {
            let firsts: Vec<bool> = surviving.iter().map(|s| s[i].0).collect();
            let seconds: Vec<bool> = surviving.iter().map(|s| s[i].1).collect();
            let first = firsts.iter().all(|&b| b == firsts[0]).then(|| firsts[0]);
            let second = seconds.iter().all(|&b| b == seconds[0]).then(|| seconds[0]);
            if first.is_some() || second.is_some() {
                out.push(ForcedBit { word: p.word, bit: p.bit, first, second });
            }
        }
        Some(out)
    }

    fn facts_set(mut v: Vec<ForcedBit>) -> Vec<ForcedBit> {
        v.sort_by_key(|f| (f.word, f.bit));
        v
    }

    #[test]
    fn engine_matches_global_brute_force_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let symbols = ['-', 'x', '?', 'u', 'n', '0', '1'];
        for round in 0..800 {
            let width = rng.gen_range(3..=12usize);
            let k = rng.gen_range(2..=3usize);
            // bound total freedom so the oracle stays cheap and no range skips
            let mut freedom = 0usize;
            let words: Vec<Vec<Cond>> = (0..k + 1)
                .map(|_| {
                    (0..width)
                        .map(|_| {
                            let c = loop {
                                let s = symbols[rng.gen_range(0..symbols.len())];
                                let cost = match s {
                                    'x' => 1,
                                    '?' => 2,
                                    _ => 0,
                                };
                                if freedom + cost <= 8 {
                                    freedom += cost;
                                    break Cond::from_symbol(s).unwrap();
                                } else if cost == 0 {
                                    break Cond::from_symbol(s).unwrap();
                                }
                            };
                            c
                        })
                        .collect()
                })
                .collect();
            let ops: Vec<Operand> = words
                .iter()
                .enumerate()
                .map(|(i, w)| Operand::Word { conds: w, word: i, negated: i == k })
                .collect();
            let mut engine = WordwiseEngine::new(0);
            let got = engine.propagate(width, &ops);
            let want = oracle_forced(width, &ops);
            match (got, want) {
                (WordwiseOutcome::Inconsistent, None) => {}
                (WordwiseOutcome::Forced(f), Some(w)) => {
                    assert_eq!(facts_set(f), facts_set(w), "round {round} words {words:?}");
                }
                (g, w) => panic!("round {round}: engine {g:?} vs oracle {w:?} for {words:?}"),
            }
        }
    }

    #[test]
    fn concatenated_solutions_satisfy_the_equation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5678);
        for _ in 0..200 {
            let width = rng.gen_range(4..=10usize);
            let a: Vec<Cond> = (0..width)
                .map(|_| {
                    let s = ['-', 'x', '?', 'u', 'n'][rng.gen_range(0..5)];
                    Cond::from_symbol(s).unwrap()
                })
                .collect();
            let delta = rng.gen_range(0..(1u64 << width));
            let problem = assemble(
                width,
                &[
                    Operand::Word { conds: &a, word: 0, negated: false },
                    Operand::Known { delta, negated: true },
                ],
            );
            if let SplitOutcome::Split(sps) = split_subproblems(&problem) {
                if sps.iter().any(|s| s.solutions.is_none()) {
                    continue;
                }
                // pick the first solution of each range; the concatenation
                // must satisfy the whole equation
                let mut value: u128 = 0;
                for sp in &sps {
                    let m = sp.solutions.as_ref().unwrap()[0];
                    for (pos, &ui) in sp.unknowns.iter().enumerate() {
                        if m >> pos & 1 == 1 {
                            value += 1u128 << p_col(&problem, ui);
                        }
                    }
                }
                assert_eq!(
                    (value % (1u128 << width)) as u64,
                    problem.target,
                    "resubstitution failed"
                );
            }
        }
    }

    fn p_col(p: &AdditionProblem, ui: usize) -> usize {
        p.unknowns[ui].column as usize
    }

    #[test]
    fn skipping_only_removes_facts() {
        // same instance solved with and without the cap: facts with the cap
        // must be a subset
        let a = conds("????????????---x");
        let problem = assemble(
            16,
            &[
                Operand::Word { conds: &a, word: 0, negated: false },
                Operand::Known { delta: 0x8008, negated: true },
            ],
        );
        let capped = match split_subproblems(&problem) {
            SplitOutcome::Split(s) => extract_forced(&problem, &s),
            _ => Vec::new(),
        };
        // full enumeration via the oracle
        let ops = [
            Operand::Word { conds: &a, word: 0, negated: false },
            Operand::Known { delta: 0x8008, negated: true },
        ];
        if let Some(full) = oracle_forced(16, &ops) {
            for f in &capped {
                assert!(
                    full.iter().any(|g| g.word == f.word
                        && g.bit == f.bit
                        && (f.first.is_none() || f.first == g.first)
                        && (f.second.is_none() || f.second == g.second)),
                    "capped fact {f:?} not in full set"
                );
            }
        }
    }
}
