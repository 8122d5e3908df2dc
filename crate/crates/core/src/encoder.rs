//! CNF construction for the two-instance collision problem.
//!
//! The formula contains two n-step compression instances that share the
//! chaining-value variables (the semi-free-start setting), a difference
//! variable dx <-> x ^ x' for every instance pair, the starting-point
//! constraints, and helper clauses for common difference propagation
//! patterns. One fresh variable is introduced per gate output, Tseitin
//! style; 32-bit additions are encoded as columns with a sum, a low carry
//! feeding the next column and a high carry feeding the column after that.

use std::collections::HashMap;

use crate::cnf::{AdderSite, CnfInstance, Inst, Lit, Role, Var, VarKey, VarMap};
use crate::cond::Cond;
use crate::error::SolveError;
use crate::path::CondGrid;
use crate::sha256::{
    self, big_sigma0, big_sigma1, compress_trace, if_word, maj_word, small_sigma0, small_sigma1,
    ChainingValue, MessageBlock, K,
};
use crate::tables::{self, AdderShape, AdderTables, ClauseTemplate};

/// One encoded bit position: the two instance variables and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitTriple {
    pub first: Var,
    pub second: Var,
    pub delta: Var,
}

/// The 32 bit triples of one word pair.
#[derive(Debug, Clone, Copy)]
pub struct WordTriple {
    pub bits: [BitTriple; 32],
}

impl WordTriple {
    pub fn vars(&self, inst: Inst) -> [Var; 32] {
        let mut out = [Var(0); 32];
        for (i, b) in self.bits.iter().enumerate() {
            out[i] = match inst {
                Inst::First => b.first,
                Inst::Second => b.second,
                Inst::Delta => b.delta,
            };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Xor3,
    Xor2,
    If,
    Maj,
}

/// A bitwise gate covering both instances.
#[derive(Debug, Clone)]
pub struct GateSlice {
    pub kind: GateKind,
    pub out_role: Role,
    pub step: i16,
    pub bit: u8,
    pub inputs: Vec<BitTriple>,
    pub output: BitTriple,
}

/// One adder column covering both instances.
#[derive(Debug, Clone)]
pub struct AdderColSlice {
    pub site: AdderSite,
    pub step: i16,
    pub col: u8,
    pub addends: Vec<BitTriple>,
    pub lo_in: Option<BitTriple>,
    pub hi_in: Option<BitTriple>,
    pub sum: BitTriple,
    pub lo_out: Option<BitTriple>,
    pub hi_out: Option<BitTriple>,
}

impl AdderColSlice {
    pub fn shape(&self) -> AdderShape {
        AdderShape {
            addends: self.addends.len(),
            lo_in: self.lo_in.is_some(),
            hi_in: self.hi_in.is_some(),
            n_out: 1 + self.lo_out.is_some() as usize + self.hi_out.is_some() as usize,
        }
    }
}

/// A whole modular addition, with word-level operand identities for the
/// wordwise reasoning layer.
#[derive(Debug, Clone)]
pub struct AdderWord {
    pub site: AdderSite,
    pub step: i16,
    pub addends: Vec<(Role, i16)>,
    pub output: (Role, i16),
    /// Indices into `Encoded::adder_cols`, one per column 0..32.
    pub columns: Vec<usize>,
}

/// A built instance: the clause database plus everything the propagation
/// layer and the decoder need to interpret its variables.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub n: usize,
    pub cnf: CnfInstance,
    pub map: VarMap,
    pub start_point: CondGrid,
    pub words: HashMap<(Role, i16), WordTriple>,
    pub gates: Vec<GateSlice>,
    pub adder_cols: Vec<AdderColSlice>,
    pub adders: Vec<AdderWord>,
}

/// Formula builder. `helper_clauses` adds the difference-propagation hints;
/// it is on for real searches and off in a few tests that want the bare
/// functional encoding.
pub struct Encoder {
    tables: AdderTables,
    pub helper_clauses: bool,
}

impl Default for Encoder {
    fn default() -> Self {
        Encoder { tables: AdderTables::new(), helper_clauses: true }
    }
}

struct Build {
    cnf: CnfInstance,
    map: VarMap,
    words: HashMap<(Role, i16), WordTriple>,
    gates: Vec<GateSlice>,
    adder_cols: Vec<AdderColSlice>,
    adders: Vec<AdderWord>,
}

impl Build {
    fn fresh(&mut self, key: VarKey) -> Var {
        let v = self.map.fresh(key);
        self.cnf.num_vars = self.map.num_vars();
        v
    }

    fn emit(&mut self, template: &ClauseTemplate, slots: &[Lit]) {
        let clause: Vec<Lit> =
            template.iter().map(|&(s, pos)| if pos { slots[s] } else { !slots[s] }).collect();
        self.cnf.add_clause(clause);
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the CNF for two shared-chaining-value compression instances of
    /// `n` steps constrained by the starting point.
    pub fn build(&mut self, n: usize, sp: &CondGrid) -> Result<Encoded, SolveError> {
        if sp.n() != n {
            return Err(SolveError::StepMismatch { sp: sp.n(), requested: n });
        }
        let mut b = Build {
            cnf: CnfInstance::default(),
            map: VarMap::new(),
            words: HashMap::new(),
            gates: Vec::new(),
            adder_cols: Vec::new(),
            adders: Vec::new(),
        };

        // Chaining value: one set of variables aliased into both instances.
        for i in -4..0i16 {
            self.alloc_shared_word(&mut b, Role::A, i, None);
            self.alloc_shared_word(&mut b, Role::E, i, None);
        }

        for i in 0..n as i16 {
            self.alloc_shared_word(&mut b, Role::K, i, Some(K[i as usize]));
            self.alloc_word(&mut b, Role::W, i);

            if i >= 16 {
                self.alloc_word(&mut b, Role::SmallSigma0, i);
                self.alloc_word(&mut b, Role::SmallSigma1, i);
                // s0 takes W_{i-15}, s1 takes W_{i-2}
                self.encode_small_sigma(&mut b, Role::SmallSigma0, i, Role::W, i - 15, 7, 18, 3);
                self.encode_small_sigma(&mut b, Role::SmallSigma1, i, Role::W, i - 2, 17, 19, 10);
                self.encode_adder(
                    &mut b,
                    AdderSite::WExpand,
                    i,
                    &[(Role::SmallSigma1, i), (Role::W, i - 7), (Role::SmallSigma0, i), (Role::W, i - 16)],
                    (Role::W, i),
                )?;
            }

            self.alloc_word(&mut b, Role::BigSigma1, i);
            self.encode_big_sigma(&mut b, Role::BigSigma1, i, Role::E, i - 1, sha256::BIG_SIGMA1_ROT);
            self.alloc_word(&mut b, Role::IfOut, i);
            self.encode_bitwise(&mut b, GateKind::If, Role::IfOut, i, &[(Role::E, i - 1), (Role::E, i - 2), (Role::E, i - 3)]);

            self.alloc_word(&mut b, Role::T, i);
            self.encode_adder(
                &mut b,
                AdderSite::T,
                i,
                &[(Role::E, i - 4), (Role::BigSigma1, i), (Role::IfOut, i), (Role::K, i), (Role::W, i)],
                (Role::T, i),
            )?;

            self.alloc_word(&mut b, Role::E, i);
            self.encode_adder(&mut b, AdderSite::E, i, &[(Role::A, i - 4), (Role::T, i)], (Role::E, i))?;

            self.alloc_word(&mut b, Role::BigSigma0, i);
            self.encode_big_sigma(&mut b, Role::BigSigma0, i, Role::A, i - 1, sha256::BIG_SIGMA0_ROT);
            self.alloc_word(&mut b, Role::MajOut, i);
            self.encode_bitwise(&mut b, GateKind::Maj, Role::MajOut, i, &[(Role::A, i - 1), (Role::A, i - 2), (Role::A, i - 3)]);

            self.alloc_word(&mut b, Role::A, i);
            self.encode_adder(
                &mut b,
                AdderSite::A,
                i,
                &[(Role::T, i), (Role::BigSigma0, i), (Role::MajOut, i)],
                (Role::A, i),
            )?;
        }

        apply_starting_point(&mut b.cnf, &b.words, sp);

        Ok(Encoded {
            n,
            cnf: b.cnf,
            map: b.map,
            start_point: sp.clone(),
            words: b.words,
            gates: b.gates,
            adder_cols: b.adder_cols,
            adders: b.adders,
        })
    }

    /// A word whose value is identical in both instances: variables are
    /// aliased and the differences are pinned to zero.
    fn alloc_shared_word(&mut self, b: &mut Build, role: Role, step: i16, value: Option<u32>) {
        let mut bits = [BitTriple { first: Var(0), second: Var(0), delta: Var(0) }; 32];
        for bit in 0..32u8 {
            let v = b.fresh(VarKey::new(role, step, bit, Inst::First));
            b.map.alias(VarKey::new(role, step, bit, Inst::Second), v);
            let d = b.fresh(VarKey::new(role, step, bit, Inst::Delta));
            b.cnf.unit(d.lit(false));
            if let Some(word) = value {
                b.cnf.unit(v.lit(word >> bit & 1 == 1));
            }
            bits[bit as usize] = BitTriple { first: v, second: v, delta: d };
        }
        b.words.insert((role, step), WordTriple { bits });
    }

    /// A word pair with per-instance variables and dx <-> x ^ x' links.
    fn alloc_word(&mut self, b: &mut Build, role: Role, step: i16) {
        let xor2 = tables::xor2_clauses();
        let mut bits = [BitTriple { first: Var(0), second: Var(0), delta: Var(0) }; 32];
        for bit in 0..32u8 {
            let x = b.fresh(VarKey::new(role, step, bit, Inst::First));
            let x2 = b.fresh(VarKey::new(role, step, bit, Inst::Second));
            let d = b.fresh(VarKey::new(role, step, bit, Inst::Delta));
            for t in &xor2 {
                b.emit(t, &[x.lit(true), x2.lit(true), d.lit(true)]);
            }
            bits[bit as usize] = BitTriple { first: x, second: x2, delta: d };
        }
        b.words.insert((role, step), WordTriple { bits });
    }

    fn triple(&self, b: &Build, word: (Role, i16), bit: usize) -> BitTriple {
        b.words
            .get(&word)
            .unwrap_or_else(|| panic!("word {word:?} not allocated"))
            .bits[bit]
    }

    /// S0/S1: pure rotations, XOR3 in every bit position.
    fn encode_big_sigma(&mut self, b: &mut Build, out_role: Role, step: i16, in_role: Role, in_step: i16, rots: [u32; 3]) {
        for j in 0..32usize {
            let ins: Vec<BitTriple> = rots
                .iter()
                .map(|&r| self.triple(b, (in_role, in_step), (j + r as usize) % 32))
                .collect();
            let out = self.triple(b, (out_role, step), j);
            self.emit_gate(b, GateKind::Xor3, out_role, step, j as u8, ins, out);
        }
    }

    /// s0/s1: two rotations plus a right shift, so the top `shift` bits
    /// degrade to XOR2.
    fn encode_small_sigma(&mut self, b: &mut Build, out_role: Role, step: i16, in_role: Role, in_step: i16, r1: u32, r2: u32, shift: u32) {
        for j in 0..32usize {
            let mut ins = vec![
                self.triple(b, (in_role, in_step), (j + r1 as usize) % 32),
                self.triple(b, (in_role, in_step), (j + r2 as usize) % 32),
            ];
            let kind = if j + (shift as usize) < 32 {
                ins.push(self.triple(b, (in_role, in_step), j + shift as usize));
                GateKind::Xor3
            } else {
                GateKind::Xor2
            };
            let out = self.triple(b, (out_role, step), j);
            self.emit_gate(b, kind, out_role, step, j as u8, ins, out);
        }
    }

    fn encode_bitwise(&mut self, b: &mut Build, kind: GateKind, out_role: Role, step: i16, in_words: &[(Role, i16)]) {
        for j in 0..32usize {
            let ins: Vec<BitTriple> = in_words.iter().map(|w| self.triple(b, *w, j)).collect();
            let out = self.triple(b, (out_role, step), j);
            self.emit_gate(b, kind, out_role, step, j as u8, ins, out);
        }
    }

    fn emit_gate(&mut self, b: &mut Build, kind: GateKind, out_role: Role, step: i16, bit: u8, ins: Vec<BitTriple>, out: BitTriple) {
        let templates = match kind {
            GateKind::Xor3 => tables::xor3_clauses(),
            GateKind::Xor2 => tables::xor2_clauses(),
            GateKind::If => tables::if_clauses(),
            GateKind::Maj => tables::maj_clauses(),
        };
        for inst in [Inst::First, Inst::Second] {
            let mut slots: Vec<Lit> = ins
                .iter()
                .map(|t| if inst == Inst::First { t.first } else { t.second }.lit(true))
                .collect();
            slots.push(if inst == Inst::First { out.first } else { out.second }.lit(true));
            for t in &templates {
                b.emit(t, &slots);
            }
        }
        if self.helper_clauses {
            self.emit_gate_helpers(b, kind, &ins, out);
        }
        b.gates.push(GateSlice { kind, out_role, step, bit, inputs: ins, output: out });
    }

    /// Difference-propagation hints. For the linear gates, every input
    /// difference pattern with zero or two set differences forces a zero
    /// output difference; for IF/MAJ only the all-equal pattern does.
    fn emit_gate_helpers(&mut self, b: &mut Build, kind: GateKind, ins: &[BitTriple], out: BitTriple) {
        let arity = ins.len();
        let patterns: Vec<u32> = match kind {
            GateKind::Xor3 | GateKind::Xor2 => {
                (0..1u32 << arity).filter(|p| p.count_ones() % 2 == 0).collect()
            }
            GateKind::If | GateKind::Maj => vec![0],
        };
        for p in patterns {
            let mut clause: Vec<Lit> = ins
                .iter()
                .enumerate()
                .map(|(i, t)| t.delta.lit(p >> i & 1 == 0))
                .collect();
            clause.push(out.delta.lit(false));
            b.cnf.add_clause(clause);
        }
    }

    /// Columnwise addition of up to five 32-bit operands. The low carry out
    /// of column j feeds column j+1, the high carry feeds column j+2, and
    /// carries past bit 31 are dropped (addition modulo 2^32).
    fn encode_adder(
        &mut self,
        b: &mut Build,
        site: AdderSite,
        step: i16,
        addend_words: &[(Role, i16)],
        out_word: (Role, i16),
    ) -> Result<(), SolveError> {
        if addend_words.len() + 2 > 7 {
            return Err(SolveError::TooManyAddends(addend_words.len() + 2));
        }
        // lo carries shift by one column, hi carries by two
        let mut lo_prev: Option<BitTriple> = None;
        let mut hi_prev: Option<BitTriple> = None;
        let mut hi_prev2: Option<BitTriple> = None;
        let mut columns = Vec::with_capacity(32);
        for col in 0..32u8 {
            let addends: Vec<BitTriple> =
                addend_words.iter().map(|w| self.triple(b, *w, col as usize)).collect();
            let sum = self.triple(b, out_word, col as usize);
            let lo_out = (col <= 30).then(|| self.alloc_carry(b, Role::CarryLo(site), step, col));
            let hi_out = (col <= 29).then(|| self.alloc_carry(b, Role::CarryHi(site), step, col));
            let slice = AdderColSlice {
                site,
                step,
                col,
                addends,
                lo_in: lo_prev,
                hi_in: hi_prev2,
                sum,
                lo_out,
                hi_out,
            };
            self.emit_adder_col(b, &slice);
            lo_prev = lo_out;
            hi_prev2 = hi_prev;
            hi_prev = hi_out;
            columns.push(b.adder_cols.len());
            b.adder_cols.push(slice);
        }
        b.adders.push(AdderWord {
            site,
            step,
            addends: addend_words.to_vec(),
            output: out_word,
            columns,
        });
        Ok(())
    }

    fn alloc_carry(&mut self, b: &mut Build, role: Role, step: i16, col: u8) -> BitTriple {
        let x = b.fresh(VarKey::new(role, step, col, Inst::First));
        let x2 = b.fresh(VarKey::new(role, step, col, Inst::Second));
        let d = b.fresh(VarKey::new(role, step, col, Inst::Delta));
        for t in &tables::xor2_clauses() {
            b.emit(t, &[x.lit(true), x2.lit(true), d.lit(true)]);
        }
        BitTriple { first: x, second: x2, delta: d }
    }

    fn emit_adder_col(&mut self, b: &mut Build, slice: &AdderColSlice) {
        let shape = slice.shape();
        let templates = self.tables.get(shape).clone();
        for inst in [Inst::First, Inst::Second] {
            let pick = |t: &BitTriple| if inst == Inst::First { t.first } else { t.second };
            let mut slots: Vec<Lit> = slice.addends.iter().map(|t| pick(t).lit(true)).collect();
            if let Some(t) = &slice.lo_in {
                slots.push(pick(t).lit(true));
            }
            if let Some(t) = &slice.hi_in {
                slots.push(pick(t).lit(true));
            }
            slots.push(pick(&slice.sum).lit(true));
            if let Some(t) = &slice.lo_out {
                slots.push(pick(t).lit(true));
            }
            if let Some(t) = &slice.hi_out {
                slots.push(pick(t).lit(true));
            }
            for t in &templates {
                b.emit(t, &slots);
            }
        }
        if self.helper_clauses {
            // all-equal inputs force all-equal outputs
            let mut lhs: Vec<Lit> = slice.addends.iter().map(|t| t.delta.lit(true)).collect();
            if let Some(t) = &slice.lo_in {
                lhs.push(t.delta.lit(true));
            }
            if let Some(t) = &slice.hi_in {
                lhs.push(t.delta.lit(true));
            }
            for out in [Some(&slice.sum), slice.lo_out.as_ref(), slice.hi_out.as_ref()].into_iter().flatten() {
                let mut clause = lhs.clone();
                clause.push(out.delta.lit(false));
                b.cnf.add_clause(clause);
            }
        }
    }
}

/// Translates starting-point conditions into unit clauses on the instance
/// and difference variables.
pub fn apply_starting_point(cnf: &mut CnfInstance, words: &HashMap<(Role, i16), WordTriple>, sp: &CondGrid) {
    for (i, row) in sp.rows() {
        let mut constrain = |role: Role, word: &crate::cond::CondWord| {
            let triple = &words[&(role, i as i16)];
            for (bit, cond) in word.iter().enumerate() {
                let t = triple.bits[bit];
                match cond {
                    Cond::Any => {}
                    Cond::Same => cnf.unit(t.delta.lit(false)),
                    Cond::Diff => cnf.unit(t.delta.lit(true)),
                    Cond::Zero | Cond::One | Cond::U | Cond::N => {
                        let (x, x2) = match cond {
                            Cond::Zero => (false, false),
                            Cond::One => (true, true),
                            Cond::U => (true, false),
                            Cond::N => (false, true),
                            _ => unreachable!(),
                        };
                        cnf.unit(t.first.lit(x));
                        if t.second != t.first {
                            cnf.unit(t.second.lit(x2));
                        } else if x != x2 {
                            // a split pair demanded on a shared word: unsatisfiable
                            cnf.unit(t.first.lit(x2));
                        }
                        cnf.unit(t.delta.lit(x != x2));
                    }
                }
            }
        };
        constrain(Role::A, &row.a);
        constrain(Role::E, &row.e);
        if let Some(w) = &row.w {
            constrain(Role::W, w);
        }
    }
}

impl Encoded {
    /// The full satisfying assignment induced by running both compression
    /// instances on concrete inputs. The result satisfies the functional
    /// clauses by construction; starting-point units may or may not hold.
    pub fn assignment_from(&self, cv: &ChainingValue, m: &MessageBlock, m2: &MessageBlock) -> Vec<bool> {
        let (_, t1) = compress_trace(cv, m, self.n);
        let (_, t2) = compress_trace(cv, m2, self.n);
        let mut assignment = vec![false; self.cnf.num_vars as usize];

        let set_word = |triple: &WordTriple, w1: u32, w2: u32, assignment: &mut Vec<bool>| {
            for (bit, t) in triple.bits.iter().enumerate() {
                assignment[t.first.index()] = w1 >> bit & 1 == 1;
                assignment[t.second.index()] = w2 >> bit & 1 == 1;
                assignment[t.delta.index()] = (w1 ^ w2) >> bit & 1 == 1;
            }
        };

        for ((role, step), triple) in &self.words {
            let i = *step;
            let (w1, w2) = match role {
                Role::A => (t1.a(i as isize), t2.a(i as isize)),
                Role::E => (t1.e(i as isize), t2.e(i as isize)),
                Role::W => (t1.w(i as usize), t2.w(i as usize)),
                Role::T => (t1.t(i as usize), t2.t(i as usize)),
                Role::K => (K[i as usize], K[i as usize]),
                Role::BigSigma0 => (big_sigma0(t1.a(i as isize - 1)), big_sigma0(t2.a(i as isize - 1))),
                Role::BigSigma1 => (big_sigma1(t1.e(i as isize - 1)), big_sigma1(t2.e(i as isize - 1))),
                Role::SmallSigma0 => {
                    (small_sigma0(t1.w(i as usize - 15)), small_sigma0(t2.w(i as usize - 15)))
                }
                Role::SmallSigma1 => {
                    (small_sigma1(t1.w(i as usize - 2)), small_sigma1(t2.w(i as usize - 2)))
                }
                Role::IfOut => (
                    if_word(t1.e(i as isize - 1), t1.e(i as isize - 2), t1.e(i as isize - 3)),
                    if_word(t2.e(i as isize - 1), t2.e(i as isize - 2), t2.e(i as isize - 3)),
                ),
                Role::MajOut => (
                    maj_word(t1.a(i as isize - 1), t1.a(i as isize - 2), t1.a(i as isize - 3)),
                    maj_word(t2.a(i as isize - 1), t2.a(i as isize - 2), t2.a(i as isize - 3)),
                ),
                Role::CarryLo(_) | Role::CarryHi(_) => continue,
            };
            set_word(triple, w1, w2, &mut assignment);
        }

        // Carries follow from the column totals once the words are in place.
        for adder in &self.adders {
            for &ci in &adder.columns {
                let col = &self.adder_cols[ci];
                for inst in [Inst::First, Inst::Second] {
                    let pick = |t: &BitTriple| match inst {
                        Inst::First => t.first,
                        _ => t.second,
                    };
                    let mut total: u32 =
                        col.addends.iter().map(|t| assignment[pick(t).index()] as u32).sum();
                    if let Some(t) = &col.lo_in {
                        total += assignment[pick(t).index()] as u32;
                    }
                    if let Some(t) = &col.hi_in {
                        total += assignment[pick(t).index()] as u32;
                    }
                    debug_assert_eq!(
                        assignment[pick(&col.sum).index()],
                        total & 1 == 1,
                        "column sum mismatch at {:?} step {} col {}",
                        col.site,
                        col.step,
                        col.col
                    );
                    if let Some(t) = &col.lo_out {
                        assignment[pick(t).index()] = total >> 1 & 1 == 1;
                    }
                    if let Some(t) = &col.hi_out {
                        assignment[pick(t).index()] = total >> 2 & 1 == 1;
                    }
                }
                for t in col
                    .lo_out
                    .iter()
                    .chain(col.hi_out.iter())
                {
                    assignment[t.delta.index()] =
                        assignment[t.first.index()] != assignment[t.second.index()];
                }
            }
        }
        assignment
    }

    /// Reads (CV, M, M') out of a model.
    pub fn decode(&self, model: &[bool]) -> (ChainingValue, MessageBlock, MessageBlock) {
        let word_value = |role: Role, step: i16, inst: Inst| -> u32 {
            let triple = &self.words[&(role, step)];
            let vars = triple.vars(inst);
            (0..32).fold(0u32, |acc, b| acc | (model[vars[b].index()] as u32) << b)
        };
        let mut cv = [0u32; 8];
        for j in 0..4 {
            cv[j] = word_value(Role::A, j as i16 - 4, Inst::First);
            cv[4 + j] = word_value(Role::E, j as i16 - 4, Inst::First);
        }
        let mut m1 = [0u32; 16];
        let mut m2 = [0u32; 16];
        for i in 0..16.min(self.n) {
            m1[i] = word_value(Role::W, i as i16, Inst::First);
            m2[i] = word_value(Role::W, i as i16, Inst::Second);
        }
        (ChainingValue(cv), MessageBlock(m1), MessageBlock(m2))
    }

    /// The characteristic grid of a model.
    pub fn characteristic(&self, model: &[bool]) -> CondGrid {
        let (cv, m1, m2) = self.decode(model);
        let (_, t1) = compress_trace(&cv, &m1, self.n);
        let (_, t2) = compress_trace(&cv, &m2, self.n);
        CondGrid::from_traces(&t1, &t2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sha256::IV;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn any_sp(n: usize) -> CondGrid {
        CondGrid::unconstrained(n)
    }

    #[test]
    fn step_mismatch_rejected() {
        let mut enc = Encoder::new();
        assert!(matches!(
            enc.build(5, &any_sp(6)),
            Err(SolveError::StepMismatch { sp: 6, requested: 5 })
        ));
    }

    #[test]
    fn witness_injection_satisfies_functional_clauses() {
        let mut enc = Encoder::new();
        let encoded = enc.build(18, &any_sp(18)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let cv = ChainingValue(std::array::from_fn(|_| rng.gen()));
            let m1 = MessageBlock(std::array::from_fn(|_| rng.gen()));
            let m2 = if rng.gen_bool(0.5) {
                m1
            } else {
                MessageBlock(std::array::from_fn(|_| rng.gen()))
            };
            let assignment = encoded.assignment_from(&cv, &m1, &m2);
            if let Some(idx) = encoded.cnf.falsified_clause(&assignment) {
                panic!("clause {idx} falsified: {:?}", encoded.cnf.clauses[idx]);
            }
        }
    }

    #[test]
    fn single_bit_corruptions_falsify() {
        let mut enc = Encoder::new();
        let encoded = enc.build(17, &any_sp(17)).unwrap();
        let cv = ChainingValue::from_fips(IV);
        let m = MessageBlock([0x5a5a_5a5a; 16]);
        let good = encoded.assignment_from(&cv, &m, &m);
        assert!(encoded.cnf.eval(&good));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut bad = good.clone();
            let idx = rng.gen_range(0..bad.len());
            bad[idx] = !bad[idx];
            assert!(!encoded.cnf.eval(&bad), "flip of var {idx} went unnoticed");
        }
    }

    #[test]
    fn starting_point_units_enforced() {
        let mut sp = any_sp(4);
        sp.row_mut(1).w.as_mut().unwrap().0[3] = Cond::U;
        sp.row_mut(2).a.0[0] = Cond::Same;
        let mut enc = Encoder::new();
        let encoded = enc.build(4, &sp).unwrap();
        let cv = ChainingValue::from_fips(IV);
        // u at W_1 bit 3 wants (1,0); equal messages violate it
        let m = MessageBlock([0; 16]);
        let a = encoded.assignment_from(&cv, &m, &m);
        assert!(!encoded.cnf.eval(&a));
        let mut m1 = m;
        m1.0[1] = 0b1000;
        let a = encoded.assignment_from(&cv, &m1, &m);
        // W_1 bit 3 is now (1,0); whether the rest holds depends on A_2 bit 0
        let ch = CondGrid::from_traces(
            &compress_trace(&cv, &m1, 4).1,
            &compress_trace(&cv, &m, 4).1,
        );
        assert_eq!(encoded.cnf.eval(&a), ch.refines(&sp));
    }

    #[test]
    fn decode_inverts_injection() {
        let mut enc = Encoder::new();
        let encoded = enc.build(16, &any_sp(16)).unwrap();
        let cv = ChainingValue([9, 8, 7, 6, 5, 4, 3, 2]);
        let m1 = MessageBlock([0x1234_5678; 16]);
        let mut m2 = m1;
        m2.0[3] ^= 0xff;
        let a = encoded.assignment_from(&cv, &m1, &m2);
        let (dcv, dm1, dm2) = encoded.decode(&a);
        assert_eq!(dcv, cv);
        assert_eq!(dm1, m1);
        assert_eq!(dm2, m2);
    }

    #[test]
    fn formula_size_is_deterministic() {
        let mut enc1 = Encoder::new();
        let mut enc2 = Encoder::new();
        let a = enc1.build(8, &any_sp(8)).unwrap();
        let b = enc2.build(8, &any_sp(8)).unwrap();
        assert_eq!(a.cnf.num_vars, b.cnf.num_vars);
        assert_eq!(a.cnf.clauses.len(), b.cnf.clauses.len());
    }

    #[test]
    fn xor3_gate_count_per_big_sigma() {
        // 8 clauses per XOR3 gate and 4 per difference link are fixed.
        let mut enc = Encoder::new();
        enc.helper_clauses = false;
        let one = enc.build(1, &any_sp(1)).unwrap();
        let n_xor3 = one.gates.iter().filter(|g| g.kind == GateKind::Xor3).count();
        assert_eq!(n_xor3, 64); // S1 and S0, 32 bits each, one step
    }
}
