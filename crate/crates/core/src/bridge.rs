//! The search bridge: connects the propagation engines to the solver.
//!
//! The bridge mirrors the solver trail through the `Propagator` callbacks
//! and maintains a differential-condition view of every encoded bit pair.
//! At each propagation fixpoint it reprocesses the gate and adder slices
//! touched by new assignments: bitsliced refinements become external
//! propagations with stored reason clauses, slice contradictions and
//! inconsistent two-bit-condition cycles become external clauses, and at
//! decision points the wordwise engine turns forced difference bits into
//! injected decisions (retractable guesses, since the auxiliary-word
//! heuristic may be wrong).

use std::collections::HashMap;

use crate::bitslice::{BitsliceEngine, SliceFunc, SliceResult, DEFAULT_CACHE_CAPACITY};
use crate::cnf::{Lit, Role, Var};
use crate::cond::Cond;
use crate::encoder::{BitTriple, Encoded, GateKind};
use crate::solver::Propagator;
use crate::twobit::{EquationGraph, SlicePos, TwoBitEngine};
use crate::wordwise::{modular_difference, ForcedBit, Operand, WordwiseEngine, WordwiseOutcome};

/// Which layers run; mirrors the command-line toggles.
#[derive(Debug, Clone, Copy)]
pub struct BridgeConfig {
    pub bitsliced: bool,
    pub wordwise: bool,
    pub aux_heuristic: bool,
    pub inconsistency_blocking: bool,
    pub cache_capacity: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            bitsliced: true,
            wordwise: true,
            aux_heuristic: true,
            inconsistency_blocking: true,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }
}

impl BridgeConfig {
    pub fn plain() -> Self {
        BridgeConfig {
            bitsliced: false,
            wordwise: false,
            aux_heuristic: false,
            inconsistency_blocking: false,
            cache_capacity: 0,
        }
    }

    pub fn tag(&self) -> String {
        if !self.bitsliced && !self.wordwise && !self.inconsistency_blocking {
            return "plain".into();
        }
        let mut parts = Vec::new();
        if self.bitsliced || self.wordwise {
            parts.push("p");
        }
        if self.inconsistency_blocking {
            parts.push("ib");
        }
        parts.join("+")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BridgeStats {
    pub refinements_emitted: u64,
    pub slice_contradictions: u64,
    pub blocking_clauses: u64,
    pub decisions_injected: u64,
    pub stale_decisions: u64,
    pub conflicting_forced_bits: u64,
}

/// The per-solver-instance propagation layer.
pub struct SearchBridge<'a> {
    encoded: &'a Encoded,
    config: BridgeConfig,

    // trail mirror
    assigns: Vec<Option<bool>>,
    trail: Vec<Lit>,
    level_bounds: Vec<usize>,

    // var -> slices it occurs in
    gates_of: Vec<Vec<u32>>,
    adders_of: Vec<Vec<u32>>,
    words_of: Vec<Vec<u32>>,

    dirty_gates: Vec<u32>,
    gate_dirty_flag: Vec<bool>,
    dirty_adders: Vec<u32>,
    adder_dirty_flag: Vec<bool>,
    dirty_words: Vec<u32>,
    word_dirty_flag: Vec<bool>,

    bitslice: BitsliceEngine,
    twobit: TwoBitEngine,
    graph: EquationGraph,
    wordwise: WordwiseEngine,

    pending_props: Vec<Lit>,
    reasons: HashMap<Lit, Vec<Lit>>,
    pending_clauses: Vec<Vec<Lit>>,
    pending_decisions: std::collections::VecDeque<Lit>,

    pub stats: BridgeStats,
}

impl<'a> SearchBridge<'a> {
    pub fn new(encoded: &'a Encoded, config: BridgeConfig) -> Self {
        let n = encoded.cnf.num_vars as usize;
        let mut gates_of = vec![Vec::new(); n];
        for (i, gate) in encoded.gates.iter().enumerate() {
            for t in gate.inputs.iter().chain(std::iter::once(&gate.output)) {
                for v in [t.first, t.second, t.delta] {
                    let list = &mut gates_of[v.index()];
                    if list.last() != Some(&(i as u32)) {
                        list.push(i as u32);
                    }
                }
            }
        }
        let mut adders_of = vec![Vec::new(); n];
        for (i, col) in encoded.adder_cols.iter().enumerate() {
            let triples = col
                .addends
                .iter()
                .chain(col.lo_in.iter())
                .chain(col.hi_in.iter())
                .chain(std::iter::once(&col.sum))
                .chain(col.lo_out.iter())
                .chain(col.hi_out.iter());
            for t in triples {
                for v in [t.first, t.second, t.delta] {
                    let list = &mut adders_of[v.index()];
                    if list.last() != Some(&(i as u32)) {
                        list.push(i as u32);
                    }
                }
            }
        }
        let mut words_of = vec![Vec::new(); n];
        for (i, adder) in encoded.adders.iter().enumerate() {
            for word in adder.addends.iter().chain(std::iter::once(&adder.output)) {
                let triple = &encoded.words[word];
                for t in &triple.bits {
                    for v in [t.first, t.second, t.delta] {
                        let list = &mut words_of[v.index()];
                        if list.last() != Some(&(i as u32)) {
                            list.push(i as u32);
                        }
                    }
                }
            }
        }
        SearchBridge {
            config,
            assigns: vec![None; n],
            trail: Vec::new(),
            level_bounds: Vec::new(),
            gates_of,
            adders_of,
            words_of,
            dirty_gates: Vec::new(),
            gate_dirty_flag: vec![false; encoded.gates.len()],
            dirty_adders: Vec::new(),
            adder_dirty_flag: vec![false; encoded.adder_cols.len()],
            dirty_words: Vec::new(),
            word_dirty_flag: vec![false; encoded.adders.len()],
            bitslice: BitsliceEngine::new(config.cache_capacity),
            twobit: TwoBitEngine::new(config.cache_capacity),
            graph: EquationGraph::new(n),
            wordwise: WordwiseEngine::new(config.cache_capacity),
            pending_props: Vec::new(),
            reasons: HashMap::new(),
            pending_clauses: Vec::new(),
            pending_decisions: std::collections::VecDeque::new(),
            stats: BridgeStats::default(),
            encoded,
        }
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "bridge": {
                "refinements_emitted": self.stats.refinements_emitted,
                "slice_contradictions": self.stats.slice_contradictions,
                "blocking_clauses": self.stats.blocking_clauses,
                "decisions_injected": self.stats.decisions_injected,
                "stale_decisions": self.stats.stale_decisions,
                "conflicting_forced_bits": self.stats.conflicting_forced_bits,
            },
            "bitslice": {
                "queries": self.bitslice.stats.queries,
                "cache_hit_rate": self.bitslice.cache_hit_rate(),
                "contradictions": self.bitslice.stats.contradictions,
                "refined_positions": self.bitslice.stats.refined_positions,
            },
            "twobit": {
                "edges_added": self.graph.stats.edges_added,
                "cycles_found": self.graph.stats.cycles_found,
                "mean_cycle_length": mean(self.graph.stats.cycle_length_total, self.graph.stats.cycles_found),
                "mean_blocking_clause_length": mean(self.graph.stats.blocking_literals_total, self.graph.stats.cycles_found),
            },
            "wordwise": {
                "equations": self.wordwise.stats.equations,
                "cache_hits": self.wordwise.stats.cache_hits,
                "subproblems_solved": self.wordwise.stats.subproblems_solved,
                "subproblems_skipped": self.wordwise.stats.subproblems_skipped,
                "inconsistencies": self.wordwise.stats.inconsistencies,
                "bits_forced": self.wordwise.stats.bits_forced,
            },
        })
    }

    fn level(&self) -> usize {
        self.level_bounds.len()
    }

    fn value(&self, v: Var) -> Option<bool> {
        self.assigns[v.index()]
    }

    /// The tightest condition consistent with the current assignment of a
    /// bit pair, and the literals that establish it.
    fn extract(&self, t: &BitTriple) -> (Cond, Vec<Lit>) {
        let x = self.value(t.first);
        let x2 = if t.second == t.first { x } else { self.value(t.second) };
        let d = self.value(t.delta);
        if let (Some(a), Some(b)) = (x, x2) {
            let cond = match (a, b) {
                (false, false) => Cond::Zero,
                (true, false) => Cond::U,
                (false, true) => Cond::N,
                (true, true) => Cond::One,
            };
            let mut lits = vec![t.first.lit(a)];
            if t.second != t.first {
                lits.push(t.second.lit(b));
            }
            return (cond, lits);
        }
        if let Some(dv) = d {
            let mut mask = if dv { Cond::Diff.mask() } else { Cond::Same.mask() };
            let mut lits = vec![t.delta.lit(dv)];
            if let Some(a) = x {
                mask &= if a { 0b1010 } else { 0b0101 };
                lits.push(t.first.lit(a));
            }
            if let Some(b) = x2 {
                mask &= if b { 0b1100 } else { 0b0011 };
                lits.push(t.second.lit(b));
            }
            match Cond::from_mask(mask) {
                Some(c) => return (c, lits),
                None => {
                    // half-known pairs are not representable; fall back to
                    // the delta-only condition
                    return (if dv { Cond::Diff } else { Cond::Same }, vec![t.delta.lit(dv)]);
                }
            }
        }
        (Cond::Any, Vec::new())
    }

    /// Condition word of one encoded word, with the auxiliary heuristic
    /// optionally mapping '?' to '-'.
    fn extract_word(&self, word: (Role, i16)) -> Vec<Cond> {
        let triple = &self.encoded.words[&word];
        triple.bits.iter().map(|t| self.extract(t).0).collect()
    }

    /// New literals implied by a condition refinement on one bit pair.
    fn refinement_lits(&self, t: &BitTriple, refined: Cond, out: &mut Vec<Lit>) {
        let m = refined.mask();
        let sub = |bits: u8| m & bits == m;
        if self.value(t.delta).is_none() {
            if sub(0b1001) {
                out.push(t.delta.lit(false));
            } else if sub(0b0110) {
                out.push(t.delta.lit(true));
            }
        }
        if self.value(t.first).is_none() {
            if sub(0b1010) {
                out.push(t.first.lit(true));
            } else if sub(0b0101) {
                out.push(t.first.lit(false));
            }
        }
        if t.second != t.first && self.value(t.second).is_none() {
            if sub(0b1100) {
                out.push(t.second.lit(true));
            } else if sub(0b0011) {
                out.push(t.second.lit(false));
            }
        }
    }

    fn process_gate(&mut self, gi: u32) {
        let gate = &self.encoded.gates[gi as usize];
        let func = match gate.kind {
            GateKind::Xor3 => SliceFunc::Xor3,
            GateKind::Xor2 => SliceFunc::Xor2,
            GateKind::If => SliceFunc::If,
            GateKind::Maj => SliceFunc::Maj,
        };
        let mut in_conds = Vec::with_capacity(gate.inputs.len());
        let mut defining: Vec<Lit> = Vec::new();
        for t in &gate.inputs {
            let (c, lits) = self.extract(t);
            in_conds.push(c);
            defining.extend(lits);
        }
        let (out_cond, out_lits) = self.extract(&gate.output);
        defining.extend(out_lits);

        match self.bitslice.propagate(func, &in_conds, &[out_cond]) {
            SliceResult::Contradiction => {
                self.stats.slice_contradictions += 1;
                let clause: Vec<Lit> = defining.iter().map(|&l| !l).collect();
                if !clause.is_empty() {
                    self.pending_clauses.push(clause);
                }
            }
            SliceResult::Refined { inputs, outputs } => {
                let mut lits = Vec::new();
                for (t, &c) in gate.inputs.iter().zip(inputs.iter()) {
                    self.refinement_lits(t, c, &mut lits);
                }
                self.refinement_lits(&gate.output, outputs[0], &mut lits);
                for lit in lits {
                    self.emit(lit, &defining);
                }
                if self.config.inconsistency_blocking {
                    self.derive_edges(gi, func, &in_conds, out_cond, &defining);
                }
            }
        }
    }

    fn derive_edges(
        &mut self,
        gi: u32,
        func: SliceFunc,
        in_conds: &[Cond],
        out_cond: Cond,
        defining: &[Lit],
    ) {
        let patterns = self.twobit.derive(func, in_conds, out_cond);
        if patterns.is_empty() {
            return;
        }
        let gate = &self.encoded.gates[gi as usize];
        let level = self.level();
        for p in patterns {
            let pick = |pos: SlicePos| -> &BitTriple {
                match pos {
                    SlicePos::Input(i) => &gate.inputs[i as usize],
                    SlicePos::Output(_) => &gate.output,
                }
            };
            let (ta, tb) = (pick(p.a), pick(p.b));
            let (u, v) = if p.side == 0 { (ta.first, tb.first) } else { (ta.second, tb.second) };
            if u == v {
                continue;
            }
            // only relations between primary state bits enter the graph
            let primary = |var: Var| self.encoded.map.key_of(var).role.is_primary();
            if !primary(u) || !primary(v) {
                continue;
            }
            if let Some(cycle) = self.graph.add_edge(u, v, p.parity, defining.to_vec(), level) {
                let clause = self.graph.blocking_clause(&cycle);
                if !clause.is_empty() {
                    self.stats.blocking_clauses += 1;
                    self.pending_clauses.push(clause);
                }
            }
        }
    }

    fn process_adder_col(&mut self, ci: u32) {
        let col = &self.encoded.adder_cols[ci as usize];
        let shape = col.shape();
        let mut in_conds = Vec::with_capacity(shape.n_in());
        let mut defining: Vec<Lit> = Vec::new();
        let in_triples: Vec<BitTriple> = col
            .addends
            .iter()
            .chain(col.lo_in.iter())
            .chain(col.hi_in.iter())
            .copied()
            .collect();
        for t in &in_triples {
            let (c, lits) = self.extract(t);
            in_conds.push(c);
            defining.extend(lits);
        }
        let out_triples: Vec<BitTriple> = std::iter::once(&col.sum)
            .chain(col.lo_out.iter())
            .chain(col.hi_out.iter())
            .copied()
            .collect();
        let mut out_conds = Vec::with_capacity(out_triples.len());
        for t in &out_triples {
            let (c, lits) = self.extract(t);
            out_conds.push(c);
            defining.extend(lits);
        }
        match self.bitslice.propagate(SliceFunc::Add(shape), &in_conds, &out_conds) {
            SliceResult::Contradiction => {
                self.stats.slice_contradictions += 1;
                let clause: Vec<Lit> = defining.iter().map(|&l| !l).collect();
                if !clause.is_empty() {
                    self.pending_clauses.push(clause);
                }
            }
            SliceResult::Refined { inputs, outputs } => {
                let mut lits = Vec::new();
                for (t, &c) in in_triples.iter().zip(inputs.iter()) {
                    self.refinement_lits(t, c, &mut lits);
                }
                for (t, &c) in out_triples.iter().zip(outputs.iter()) {
                    self.refinement_lits(t, c, &mut lits);
                }
                for lit in lits {
                    self.emit(lit, &defining);
                }
            }
        }
    }

    fn emit(&mut self, lit: Lit, defining: &[Lit]) {
        if self.assigns[lit.var().index()].is_some() {
            return;
        }
        if self.pending_props.contains(&lit) {
            return;
        }
        let mut reason = Vec::with_capacity(defining.len() + 1);
        reason.push(lit);
        reason.extend(defining.iter().map(|&l| !l));
        self.reasons.insert(lit, reason);
        self.pending_props.push(lit);
        self.stats.refinements_emitted += 1;
    }

    /// Wordwise pass over dirty addition sites; forced bits become queued
    /// decisions.
    fn run_wordwise(&mut self) {
        let dirty = std::mem::take(&mut self.dirty_words);
        for wi in &dirty {
            self.word_dirty_flag[*wi as usize] = false;
        }
        for wi in dirty {
            let adder = &self.encoded.adders[wi as usize];
            let mut operands: Vec<(Vec<Cond>, (Role, i16), bool)> = Vec::new();
            let mut applicable = true;
            for (idx, word) in adder
                .addends
                .iter()
                .chain(std::iter::once(&adder.output))
                .enumerate()
            {
                let negated = idx == adder.addends.len();
                let conds = self.extract_word(*word);
                operands.push((conds, *word, negated));
            }
            // auxiliary words must have a computable difference
            let mut ops: Vec<Operand> = Vec::new();
            for (conds, word, negated) in &operands {
                if word.0.is_primary() {
                    ops.push(Operand::Word {
                        conds,
                        word: word_id(*word),
                        negated: *negated,
                    });
                } else {
                    match modular_difference(conds, self.config.aux_heuristic) {
                        Some(delta) => ops.push(Operand::Known { delta, negated: *negated }),
                        None => {
                            applicable = false;
                            break;
                        }
                    }
                }
            }
            if !applicable {
                continue;
            }
            match self.wordwise.propagate(32, &ops) {
                WordwiseOutcome::Inconsistent => {
                    // possibly the heuristic's fault; leave refutation to CDCL
                    self.stats.conflicting_forced_bits += 1;
                }
                WordwiseOutcome::Forced(facts) => {
                    let targets: Vec<(Role, i16)> = operands
                        .iter()
                        .filter(|(_, w, _)| w.0.is_primary())
                        .map(|(_, w, _)| *w)
                        .collect();
                    for fact in facts {
                        self.queue_forced(&targets, fact);
                    }
                }
            }
        }
    }

    fn queue_forced(&mut self, targets: &[(Role, i16)], fact: ForcedBit) {
        let word = targets
            .iter()
            .find(|w| word_id(**w) == fact.word)
            .copied();
        let Some(word) = word else { return };
        let triple = self.encoded.words[&word].bits[fact.bit as usize];
        let mut push = |var: Var, value: bool| {
            let lit = var.lit(value);
            match self.assigns[var.index()] {
                Some(v) if v == value => {}
                Some(_) => self.stats.conflicting_forced_bits += 1,
                None => {
                    if !self.pending_decisions.contains(&lit) {
                        self.pending_decisions.push_back(lit);
                    }
                }
            }
        };
        if let Some(v) = fact.first {
            push(triple.first, v);
        }
        if let Some(v) = fact.second {
            push(triple.second, v);
        }
        if let (Some(a), Some(b)) = (fact.first, fact.second) {
            push(triple.delta, a != b);
        }
    }
}

/// Stable identifier for a word within a wordwise equation.
fn word_id(word: (Role, i16)) -> usize {
    let role = match word.0 {
        Role::A => 0usize,
        Role::E => 1,
        Role::W => 2,
        _ => 3,
    };
    role << 16 | (word.1 + 4) as usize
}

fn mean(total: u64, count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    }
}

impl Propagator for SearchBridge<'_> {
    fn on_assign(&mut self, lit: Lit) {
        let v = lit.var();
        self.assigns[v.index()] = Some(lit.is_positive());
        self.trail.push(lit);
        if self.config.bitsliced {
            for &gi in &self.gates_of[v.index()] {
                if !self.gate_dirty_flag[gi as usize] {
                    self.gate_dirty_flag[gi as usize] = true;
                    self.dirty_gates.push(gi);
                }
            }
            for &ci in &self.adders_of[v.index()] {
                if !self.adder_dirty_flag[ci as usize] {
                    self.adder_dirty_flag[ci as usize] = true;
                    self.dirty_adders.push(ci);
                }
            }
        }
        if self.config.wordwise {
            for &wi in &self.words_of[v.index()] {
                if !self.word_dirty_flag[wi as usize] {
                    self.word_dirty_flag[wi as usize] = true;
                    self.dirty_words.push(wi);
                }
            }
        }
    }

    fn on_new_level(&mut self) {
        self.level_bounds.push(self.trail.len());
    }

    fn on_backtrack(&mut self, level: usize) {
        let bound = self.level_bounds[level];
        for lit in self.trail.drain(bound..) {
            self.assigns[lit.var().index()] = None;
            self.reasons.remove(&lit);
            self.reasons.remove(&!lit);
        }
        self.level_bounds.truncate(level);
        self.graph.backtrack(level);
        self.pending_props.clear();
        self.pending_decisions.clear();
        self.pending_clauses.clear();
    }

    fn propagations(&mut self) -> Vec<Lit> {
        if !self.config.bitsliced {
            return Vec::new();
        }
        // drain dirty slices in deterministic order
        let mut gates = std::mem::take(&mut self.dirty_gates);
        gates.sort_unstable();
        for &gi in &gates {
            self.gate_dirty_flag[gi as usize] = false;
        }
        let mut adders = std::mem::take(&mut self.dirty_adders);
        adders.sort_unstable();
        for &ci in &adders {
            self.adder_dirty_flag[ci as usize] = false;
        }
        for gi in gates {
            self.process_gate(gi);
            if !self.pending_clauses.is_empty() {
                break;
            }
        }
        if self.pending_clauses.is_empty() {
            for ci in adders {
                self.process_adder_col(ci);
                if !self.pending_clauses.is_empty() {
                    break;
                }
            }
        }
        std::mem::take(&mut self.pending_props)
    }

    fn reason(&mut self, lit: Lit) -> Vec<Lit> {
        self.reasons
            .get(&lit)
            .cloned()
            .unwrap_or_else(|| panic!("reason requested for unknown literal {}", lit.to_dimacs()))
    }

    fn decision(&mut self) -> Option<Lit> {
        if !self.config.wordwise {
            return None;
        }
        loop {
            if let Some(lit) = self.pending_decisions.pop_front() {
                if self.assigns[lit.var().index()].is_none() {
                    self.stats.decisions_injected += 1;
                    return Some(lit);
                }
                self.stats.stale_decisions += 1;
                continue;
            }
            if self.dirty_words.is_empty() {
                return None;
            }
            self.run_wordwise();
        }
    }

    fn external_clause(&mut self) -> Option<Vec<Lit>> {
        self.pending_clauses.pop()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::Encoder;
    use crate::path::CondGrid;
    use crate::sha256::{compress_trace, ChainingValue, MessageBlock, IV};
    use crate::solver::{solve_instance, SolveStatus, SolverConfig};

    fn sp_with_collision_rows(n: usize) -> CondGrid {
        let mut sp = CondGrid::unconstrained(n);
        for i in n.saturating_sub(4)..n {
            sp.row_mut(i as isize).a = crate::cond::CondWord::same();
            sp.row_mut(i as isize).e = crate::cond::CondWord::same();
        }
        sp
    }

    #[test]
    fn bridge_solves_small_instance_and_decodes() {
        let n = 3;
        let sp = CondGrid::unconstrained(n);
        let mut enc = Encoder::new();
        let encoded = enc.build(n, &sp).unwrap();
        let mut bridge = SearchBridge::new(&encoded, BridgeConfig::default());
        let (status, stats) = solve_instance(
            &encoded.cnf,
            &mut bridge,
            SolverConfig { seed: 1, ..Default::default() },
        )
        .unwrap();
        match status {
            SolveStatus::Sat(model) => {
                assert!(encoded.cnf.eval(&model), "model must satisfy the formula");
                // any model decodes to a valid pair of computations
                let (cv, m1, m2) = encoded.decode(&model);
                let want = encoded.assignment_from(&cv, &m1, &m2);
                let word = |role, step, inst| {
                    let vars = encoded.words[&(role, step)].vars(inst);
                    (0..32).fold(0u32, |acc, b| acc | (model[vars[b].index()] as u32) << b)
                };
                for i in 0..n as i16 {
                    let (_, t1) = compress_trace(&cv, &m1, n);
                    let (_, t2) = compress_trace(&cv, &m2, n);
                    assert_eq!(word(Role::A, i, Inst::First), t1.a(i as isize));
                    assert_eq!(word(Role::A, i, Inst::Second), t2.a(i as isize));
                    assert_eq!(word(Role::E, i, Inst::First), t1.e(i as isize));
                }
                assert!(encoded.cnf.eval(&want));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
        assert!(stats.external_propagations > 0, "bitsliced layer should fire");
    }

    #[test]
    fn forced_difference_in_tiny_instance_is_unsat() {
        // with every state row constrained to '-', any W_0 difference makes
        // T_0 differ and therefore E_0, so the instance is unsatisfiable
        let n = 2;
        let mut sp = sp_with_collision_rows(n);
        sp.row_mut(0).w.as_mut().unwrap().0[31] = Cond::Diff;
        let mut enc = Encoder::new();
        let encoded = enc.build(n, &sp).unwrap();
        for config in [BridgeConfig::plain(), BridgeConfig::default()] {
            let mut bridge = SearchBridge::new(&encoded, config);
            let (status, _) =
                solve_instance(&encoded.cnf, &mut bridge, SolverConfig::default()).unwrap();
            assert_eq!(status, SolveStatus::Unsat, "config {}", config.tag());
        }
    }

    #[test]
    fn bridge_mirror_matches_after_search() {
        let n = 3;
        let sp = sp_with_collision_rows(n);
        let mut enc = Encoder::new();
        let encoded = enc.build(n, &sp).unwrap();
        let mut bridge = SearchBridge::new(&encoded, BridgeConfig::default());
        let (status, _) =
            solve_instance(&encoded.cnf, &mut bridge, SolverConfig::default()).unwrap();
        if let SolveStatus::Sat(model) = status {
            // at SAT the mirror agrees with the model on every assigned var
            for (v, val) in bridge.assigns.iter().enumerate() {
                if let Some(b) = val {
                    assert_eq!(*b, model[v], "mirror disagrees on var {v}");
                }
            }
        } else {
            panic!("expected SAT");
        }
    }

    #[test]
    fn plain_and_propagating_bridges_agree_on_unsat() {
        // a starting point whose forced difference cannot reach a collision
        // in one step: W_0 differs but outputs must be equal
        let n = 1;
        let mut sp = sp_with_collision_rows(n);
        sp.row_mut(0).w.as_mut().unwrap().0[5] = Cond::Diff;
        let mut enc = Encoder::new();
        let encoded = enc.build(n, &sp).unwrap();
        for config in [BridgeConfig::plain(), BridgeConfig::default()] {
            let mut bridge = SearchBridge::new(&encoded, config);
            let (status, _) =
                solve_instance(&encoded.cnf, &mut bridge, SolverConfig::default()).unwrap();
            assert_eq!(status, SolveStatus::Unsat, "config {}", config.tag());
        }
    }

    #[test]
    fn witness_assignment_passes_bridge_watch() {
        // a full valid assignment should never trigger contradictions
        let n = 6;
        let sp = CondGrid::unconstrained(n);
        let mut enc = Encoder::new();
        let encoded = enc.build(n, &sp).unwrap();
        let cv = ChainingValue::from_fips(IV);
        let m = MessageBlock([0x0f0f_0f0f; 16]);
        let assignment = encoded.assignment_from(&cv, &m, &m);
        let mut bridge = SearchBridge::new(&encoded, BridgeConfig::default());
        bridge.on_new_level();
        for (v, &val) in assignment.iter().enumerate() {
            bridge.on_assign(Var(v as u32).lit(val));
        }
        let props = bridge.propagations();
        assert!(props.is_empty(), "fully assigned valid witness propagates nothing");
        assert!(bridge.pending_clauses.is_empty(), "no contradiction on a valid witness");
    }

    #[test]
    fn config_tags() {
        assert_eq!(BridgeConfig::plain().tag(), "plain");
        assert_eq!(BridgeConfig::default().tag(), "p+ib");
        let p_only = BridgeConfig { inconsistency_blocking: false, ..Default::default() };
        assert_eq!(p_only.tag(), "p");
    }
}
