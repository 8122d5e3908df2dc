//! A CDCL SAT solver with an external-propagator interface.
//!
//! The kernel is a classic two-watched-literal CDCL loop: first-UIP conflict
//! analysis with clause minimization, EVSIDS-style variable activities,
//! phase saving, Luby restarts, and activity-based learnt-clause reduction.
//! The `Propagator` trait exposes the hooks a domain layer needs: it observes
//! every assignment and backtrack, may propagate literals whose reason
//! clauses are pulled lazily during conflict analysis, may inject decisions,
//! and may add clauses (which are permanent and may be falsified, forcing an
//! immediate repair).
//!
//! Fixed parameters (chosen once, documented here): variable activity decay
//! 0.95, clause activity decay 0.999, 2% random decisions, Luby restarts
//! with base 128 conflicts, default polarity false.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnf::{CnfInstance, Lit, Var};
use crate::error::SolveError;

/// Callbacks by which domain code observes and steers the search.
/// All methods have no-op defaults so `NullPropagator` is the empty bridge.
pub trait Propagator {
    /// A literal was appended to the trail (decision or propagation).
    fn on_assign(&mut self, _lit: Lit) {}
    /// A new decision level was opened.
    fn on_new_level(&mut self) {}
    /// The trail was truncated back to `level`.
    fn on_backtrack(&mut self, _level: usize) {}
    /// Literals implied by the domain layer under the current trail.
    /// Reasons are not passed here; they are requested on demand.
    fn propagations(&mut self) -> Vec<Lit> {
        Vec::new()
    }
    /// The reason clause for a literal previously returned by
    /// `propagations`. Must contain the literal; every other literal must be
    /// false on the trail at the time the propagation was emitted.
    fn reason(&mut self, lit: Lit) -> Vec<Lit> {
        panic!("no reason available for {lit:?}");
    }
    /// An optional decision to use instead of the internal heuristic.
    fn decision(&mut self) -> Option<Lit> {
        None
    }
    /// An optional clause to add to the database. May be falsified under the
    /// current trail, which makes the solver repair immediately.
    fn external_clause(&mut self) -> Option<Vec<Lit>> {
        None
    }
}

/// The empty bridge: plain CDCL.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullPropagator;

impl Propagator for NullPropagator {}

/// Which resource limit expired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Budget {
    Conflicts,
    WallClock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Sat(Vec<bool>),
    Unsat,
    Unknown(Budget),
}

impl SolveStatus {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveStatus::Sat(_))
    }
}

/// Search counters; bit-identical across reruns with the same seed/budgets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learned_clauses: u64,
    pub deleted_clauses: u64,
    pub external_propagations: u64,
    pub external_clauses: u64,
    pub external_decisions: u64,
    pub rejected_decisions: u64,
    pub lazy_reasons: u64,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub seed: u64,
    pub max_conflicts: Option<u64>,
    pub timeout: Option<Duration>,
    pub var_decay: f64,
    pub clause_decay: f64,
    pub random_decision_freq: f64,
    pub luby_base: u64,
    pub default_phase: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            max_conflicts: None,
            timeout: None,
            var_decay: 0.95,
            clause_decay: 0.999,
            random_decision_freq: 0.02,
            luby_base: 128,
            default_phase: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lbool {
    Undef,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reason {
    Decision,
    Clause(u32),
    /// Propagated by the bridge; the reason clause is fetched on demand.
    External,
}

#[derive(Debug)]
struct Clause {
    lits: Vec<Lit>,
    activity: f32,
    learnt: bool,
    /// External clauses are pinned: never removed by reduction.
    pinned: bool,
    deleted: bool,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Max-heap over variable activities.
#[derive(Debug, Default)]
struct VarOrder {
    heap: Vec<Var>,
    pos: Vec<i32>,
}

impl VarOrder {
    fn new(n: usize) -> Self {
        VarOrder { heap: (0..n as u32).map(Var).collect(), pos: (0..n as i32).collect() }
    }

    fn build(&mut self, act: &[f64]) {
        for i in (0..self.heap.len() / 2).rev() {
            self.sift_down(i, act);
        }
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v.index()] >= 0
    }

    fn push(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v.index()] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.pos[top.index()] = -1;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last.index()] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn update(&mut self, v: Var, act: &[f64]) {
        let p = self.pos[v.index()];
        if p >= 0 {
            self.sift_up(p as usize, act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[i].index()] > act[self.heap[parent].index()] {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && act[self.heap[l].index()] > act[self.heap[best].index()] {
                best = l;
            }
            if r < self.heap.len() && act[self.heap[r].index()] > act[self.heap[best].index()] {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i].index()] = i as i32;
        self.pos[self.heap[j].index()] = j as i32;
    }
}

pub struct Solver {
    config: SolverConfig,
    num_vars: usize,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Lbool>,
    phase: Vec<bool>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    rng: ChaCha8Rng,
    pub stats: Stats,
    ok: bool,
    seen: Vec<bool>,
}

impl Solver {
    pub fn new(instance: &CnfInstance, config: SolverConfig) -> Result<Self, SolveError> {
        let n = instance.num_vars as usize;
        let mut solver = Solver {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            num_vars: n,
            clauses: Vec::with_capacity(instance.clauses.len()),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![Lbool::Undef; n],
            phase: vec![config.default_phase; n],
            level: vec![0; n],
            reason: vec![Reason::Decision; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::new(n),
            stats: Stats::default(),
            ok: true,
            seen: vec![false; n],
            config,
        };
        solver.order.build(&solver.activity);
        for clause in &instance.clauses {
            solver.add_initial_clause(clause)?;
        }
        Ok(solver)
    }

    #[inline]
    fn value(&self, lit: Lit) -> Lbool {
        match self.assigns[lit.var().index()] {
            Lbool::Undef => Lbool::Undef,
            Lbool::True => {
                if lit.is_positive() {
                    Lbool::True
                } else {
                    Lbool::False
                }
            }
            Lbool::False => {
                if lit.is_positive() {
                    Lbool::False
                } else {
                    Lbool::True
                }
            }
        }
    }

    fn check_lit(&self, lit: Lit) -> Result<(), SolveError> {
        if lit.var().index() >= self.num_vars {
            Err(SolveError::UnknownVariable(lit.var().0))
        } else {
            Ok(())
        }
    }

    fn add_initial_clause(&mut self, lits: &[Lit]) -> Result<(), SolveError> {
        for l in lits {
            self.check_lit(*l)?;
        }
        let mut lits = lits.to_vec();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return Ok(()); // tautology
        }
        match lits.len() {
            0 => self.ok = false,
            1 => match self.value(lits[0]) {
                Lbool::False => self.ok = false,
                Lbool::True => {}
                Lbool::Undef => self.enqueue(lits[0], Reason::Decision, None),
            },
            _ => {
                self.attach(lits, false, false);
            }
        }
        Ok(())
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool, pinned: bool) -> u32 {
        debug_assert!(lits.len() >= 2);
        let cref = self.clauses.len() as u32;
        self.watches[(!lits[0]).index()].push(Watcher { cref, blocker: lits[1] });
        self.watches[(!lits[1]).index()].push(Watcher { cref, blocker: lits[0] });
        self.clauses.push(Clause { lits, activity: 0.0, learnt, pinned, deleted: false });
        cref
    }

    fn enqueue(&mut self, lit: Lit, reason: Reason, bridge: Option<&mut dyn Propagator>) {
        debug_assert_eq!(self.value(lit), Lbool::Undef);
        let v = lit.var().index();
        self.assigns[v] = if lit.is_positive() { Lbool::True } else { Lbool::False };
        self.level[v] = self.trail_lim.len() as u32;
        self.reason[v] = reason;
        self.phase[v] = lit.is_positive();
        self.trail.push(lit);
        if let Some(b) = bridge {
            b.on_assign(lit);
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn backtrack(&mut self, level: usize, bridge: &mut dyn Propagator) {
        if self.decision_level() <= level {
            return;
        }
        let bound = self.trail_lim[level];
        for &lit in &self.trail[bound..] {
            let v = lit.var().index();
            self.assigns[v] = Lbool::Undef;
            self.order.push(lit.var(), &self.activity);
        }
        self.trail.truncate(bound);
        self.trail_lim.truncate(level);
        self.qhead = bound;
        bridge.on_backtrack(level);
    }

    /// Internal unit propagation; returns a falsified clause reference.
    fn propagate(&mut self, bridge: &mut dyn Propagator) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let lit = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let mut i = 0;
            let mut j = 0;
            let mut watchers = std::mem::take(&mut self.watches[lit.index()]);
            let mut conflict: Option<u32> = None;
            'watchers: while i < watchers.len() {
                let w = watchers[i];
                i += 1;
                if self.value(w.blocker) == Lbool::True {
                    watchers[j] = w;
                    j += 1;
                    continue;
                }
                if self.clauses[w.cref as usize].deleted {
                    continue;
                }
                let false_lit = !lit;
                {
                    let clause = &mut self.clauses[w.cref as usize];
                    if clause.lits[0] == false_lit {
                        clause.lits.swap(0, 1);
                    }
                    debug_assert_eq!(clause.lits[1], false_lit);
                }
                let first = self.clauses[w.cref as usize].lits[0];
                if first != w.blocker && self.value(first) == Lbool::True {
                    watchers[j] = Watcher { cref: w.cref, blocker: first };
                    j += 1;
                    continue;
                }
                let len = self.clauses[w.cref as usize].lits.len();
                for k in 2..len {
                    let cand = self.clauses[w.cref as usize].lits[k];
                    if self.value(cand) != Lbool::False {
                        let clause = &mut self.clauses[w.cref as usize];
                        clause.lits.swap(1, k);
                        self.watches[(!cand).index()].push(Watcher { cref: w.cref, blocker: first });
                        continue 'watchers;
                    }
                }
                // unit or conflicting
                watchers[j] = Watcher { cref: w.cref, blocker: first };
                j += 1;
                if self.value(first) == Lbool::False {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < watchers.len() {
                        watchers[j] = watchers[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Reason::Clause(w.cref), Some(bridge));
                }
            }
            watchers.truncate(j);
            self.watches[lit.index()] = watchers;
            if let Some(c) = conflict {
                return Some(c);
            }
        }
        None
    }

    /// Materializes the bridge's reason for an externally propagated literal
    /// as a pinned clause with the implied literal in front.
    fn materialize_reason(&mut self, lit: Lit, bridge: &mut dyn Propagator) -> Result<u32, SolveError> {
        self.stats.lazy_reasons += 1;
        let mut lits = bridge.reason(lit);
        for l in &lits {
            self.check_lit(*l)?;
        }
        let head = lits.iter().position(|&l| l == lit).ok_or_else(|| {
            SolveError::Decode(format!("external reason for {} does not contain it", lit.to_dimacs()))
        })?;
        lits.swap(0, head);
        if lits.len() < 2 {
            return Err(SolveError::Decode(format!(
                "external reason for {} has no antecedents",
                lit.to_dimacs()
            )));
        }
        debug_assert!(
            lits[1..].iter().all(|&l| self.value(l) == Lbool::False),
            "external reason must be falsified except for its head"
        );
        let cref = self.attach(lits, false, true);
        self.reason[lit.var().index()] = Reason::Clause(cref);
        Ok(cref)
    }

    /// First-UIP conflict analysis with reason-side minimization. Returns the
    /// learnt clause (asserting literal first) and the backjump level.
    fn analyze(
        &mut self,
        conflict: u32,
        bridge: &mut dyn Propagator,
    ) -> Result<(Vec<Lit>, usize), SolveError> {
        let mut learnt: Vec<Lit> = vec![Lit(0)];
        let mut counter = 0usize;
        let mut resolved: Option<Lit> = None;
        let mut index = self.trail.len();
        let mut cref = conflict;
        let current = self.decision_level() as u32;

        loop {
            if self.clauses[cref as usize].learnt {
                let inc = self.cla_inc as f32;
                self.clauses[cref as usize].activity += inc;
            }
            let lits = self.clauses[cref as usize].lits.clone();
            for &q in &lits {
                if Some(q) == resolved {
                    continue;
                }
                let v = q.var();
                if !self.seen[v.index()] && self.level[v.index()] > 0 {
                    self.seen[v.index()] = true;
                    self.bump_var(v);
                    if self.level[v.index()] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let p = self.trail[index];
            self.seen[p.var().index()] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = !p;
                break;
            }
            cref = match self.reason[p.var().index()] {
                Reason::Clause(c) => c,
                Reason::External => self.materialize_reason(p, bridge)?,
                Reason::Decision => unreachable!("decision reached before the first UIP"),
            };
            resolved = Some(p);
        }

        // drop literals whose reason is fully inside the clause
        let mut minimized = vec![learnt[0]];
        'outer: for &q in &learnt[1..] {
            match self.reason[q.var().index()] {
                Reason::Decision | Reason::External => minimized.push(q),
                Reason::Clause(c) => {
                    for &r in &self.clauses[c as usize].lits {
                        if r.var() != q.var()
                            && !self.seen[r.var().index()]
                            && self.level[r.var().index()] > 0
                        {
                            minimized.push(q);
                            continue 'outer;
                        }
                    }
                }
            }
        }
        for &q in &learnt {
            self.seen[q.var().index()] = false;
        }

        let backjump = if minimized.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..minimized.len() {
                if self.level[minimized[i].var().index()] > self.level[minimized[max_i].var().index()]
                {
                    max_i = i;
                }
            }
            minimized.swap(1, max_i);
            self.level[minimized[1].var().index()] as usize
        };
        Ok((minimized, backjump))
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v.index()] += self.var_inc;
        if self.activity[v.index()] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.update(v, &self.activity);
    }

    fn decay_activities(&mut self) {
        self.var_inc /= self.config.var_decay;
        self.cla_inc /= self.config.clause_decay;
        if self.cla_inc > 1e20 {
            for c in &mut self.clauses {
                if c.learnt {
                    c.activity *= 1e-20;
                }
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn reduce_learnts(&mut self) {
        let mut refs: Vec<u32> = (0..self.clauses.len() as u32)
            .filter(|&c| {
                let cl = &self.clauses[c as usize];
                cl.learnt && !cl.pinned && !cl.deleted && cl.lits.len() > 2 && !self.is_locked(c)
            })
            .collect();
        refs.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .partial_cmp(&self.clauses[b as usize].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let drop_count = refs.len() / 2;
        for &c in refs.iter().take(drop_count) {
            self.clauses[c as usize].deleted = true;
            self.stats.deleted_clauses += 1;
        }
        self.rebuild_watches();
    }

    fn is_locked(&self, cref: u32) -> bool {
        let head = self.clauses[cref as usize].lits[0];
        self.value(head) == Lbool::True && self.reason[head.var().index()] == Reason::Clause(cref)
    }

    fn rebuild_watches(&mut self) {
        for w in &mut self.watches {
            w.clear();
        }
        for (i, clause) in self.clauses.iter().enumerate() {
            if clause.deleted {
                continue;
            }
            let cref = i as u32;
            self.watches[(!clause.lits[0]).index()].push(Watcher { cref, blocker: clause.lits[1] });
            self.watches[(!clause.lits[1]).index()].push(Watcher { cref, blocker: clause.lits[0] });
        }
    }

    /// Adds a clause mid-search. Returns a conflicting clause reference when
    /// the clause is falsified under the current trail.
    fn integrate_external(
        &mut self,
        lits: Vec<Lit>,
        bridge: &mut dyn Propagator,
    ) -> Result<Option<u32>, SolveError> {
        self.stats.external_clauses += 1;
        for l in &lits {
            self.check_lit(*l)?;
        }
        let mut lits = lits;
        lits.sort();
        lits.dedup();
        let mut i = 1;
        let mut taut = false;
        while i < lits.len() {
            if lits[i].var() == lits[i - 1].var() {
                taut = true;
                break;
            }
            i += 1;
        }
        if taut {
            return Ok(None); // accepted, no effect
        }
        if lits.is_empty() {
            self.ok = false;
            return Ok(None);
        }
        // unassigned literals first, then by descending level
        lits.sort_by_key(|&l| match self.value(l) {
            Lbool::Undef => (0u8, 0u32),
            Lbool::True => (1, u32::MAX - self.level[l.var().index()]),
            Lbool::False => (2, u32::MAX - self.level[l.var().index()]),
        });
        if lits.len() == 1 {
            let l = lits[0];
            if self.value(l) == Lbool::True && self.level[l.var().index()] == 0 {
                return Ok(None);
            }
            self.backtrack(0, bridge);
            return Ok(match self.value(l) {
                Lbool::True => None,
                Lbool::Undef => {
                    self.enqueue(l, Reason::Decision, Some(bridge));
                    None
                }
                Lbool::False => {
                    self.ok = false;
                    None
                }
            });
        }
        let satisfied = lits.iter().any(|&l| self.value(l) == Lbool::True);
        let n_unassigned = lits.iter().filter(|&&l| self.value(l) == Lbool::Undef).count();
        if satisfied || n_unassigned >= 2 {
            self.attach(lits, false, true);
            return Ok(None);
        }
        if n_unassigned == 1 {
            let cref = self.attach(lits, false, true);
            let head = self.clauses[cref as usize].lits[0];
            self.enqueue(head, Reason::Clause(cref), Some(bridge));
            return Ok(None);
        }
        // fully falsified: conflict analysis needs a literal at the current
        // level, so first drop down to the deepest level in the clause
        let max_level =
            lits.iter().map(|&l| self.level[l.var().index()] as usize).max().unwrap();
        if max_level == 0 {
            self.ok = false;
            return Ok(None);
        }
        if max_level < self.decision_level() {
            self.backtrack(max_level, bridge);
        }
        Ok(Some(self.attach(lits, false, true)))
    }

    /// Propagation to fixpoint: internal BCP interleaved with external
    /// clauses and external propagations.
    fn full_propagate(&mut self, bridge: &mut dyn Propagator) -> Result<Option<u32>, SolveError> {
        loop {
            if let Some(conflict) = self.propagate(bridge) {
                return Ok(Some(conflict));
            }
            if !self.ok {
                return Ok(None);
            }
            if let Some(clause) = bridge.external_clause() {
                if let Some(conflict) = self.integrate_external(clause, bridge)? {
                    return Ok(Some(conflict));
                }
                continue;
            }
            let props = bridge.propagations();
            if props.is_empty() {
                return Ok(None);
            }
            for lit in props {
                self.check_lit(lit)?;
                match self.value(lit) {
                    Lbool::True => {}
                    Lbool::Undef => {
                        self.stats.external_propagations += 1;
                        if self.decision_level() == 0 {
                            self.enqueue(lit, Reason::Decision, Some(bridge));
                        } else {
                            self.enqueue(lit, Reason::External, Some(bridge));
                        }
                    }
                    Lbool::False => {
                        // the bridge disagrees with the trail; its reason
                        // clause is falsified, integrate it and repair
                        let reason = bridge.reason(lit);
                        self.stats.lazy_reasons += 1;
                        if let Some(conflict) = self.integrate_external(reason, bridge)? {
                            return Ok(Some(conflict));
                        }
                    }
                }
            }
        }
    }

    fn pick_branch(&mut self, bridge: &mut dyn Propagator) -> Option<Lit> {
        if let Some(lit) = bridge.decision() {
            if lit.var().index() < self.num_vars && self.value(lit) == Lbool::Undef {
                self.stats.external_decisions += 1;
                return Some(lit);
            }
            self.stats.rejected_decisions += 1;
        }
        if self.config.random_decision_freq > 0.0
            && self.rng.gen_bool(self.config.random_decision_freq)
        {
            for _ in 0..16 {
                let v = Var(self.rng.gen_range(0..self.num_vars as u32));
                if self.assigns[v.index()] == Lbool::Undef {
                    return Some(Lit::new(v, self.phase[v.index()]));
                }
            }
        }
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v.index()] == Lbool::Undef {
                return Some(Lit::new(v, self.phase[v.index()]));
            }
        }
        None
    }

    pub fn solve(&mut self, bridge: &mut dyn Propagator) -> Result<(SolveStatus, Stats), SolveError> {
        let start = Instant::now();
        if !self.ok {
            return Ok((SolveStatus::Unsat, self.stats));
        }
        let mut luby_index = 0u64;
        let mut restart_budget = luby(luby_index) * self.config.luby_base;
        let mut conflicts_since_restart = 0u64;
        let mut learnt_limit = 2000 + self.clauses.len() / 3;

        loop {
            let conflict = self.full_propagate(bridge)?;
            if !self.ok {
                return Ok((SolveStatus::Unsat, self.stats));
            }
            match conflict {
                Some(cref) => {
                    self.stats.conflicts += 1;
                    conflicts_since_restart += 1;
                    if self.decision_level() == 0 {
                        return Ok((SolveStatus::Unsat, self.stats));
                    }
                    let (learnt, backjump) = self.analyze(cref, bridge)?;
                    self.backtrack(backjump, bridge);
                    if learnt.len() == 1 {
                        match self.value(learnt[0]) {
                            Lbool::False => return Ok((SolveStatus::Unsat, self.stats)),
                            Lbool::Undef => self.enqueue(learnt[0], Reason::Decision, Some(bridge)),
                            Lbool::True => {}
                        }
                    } else {
                        let head = learnt[0];
                        let cref = self.attach(learnt, true, false);
                        self.stats.learned_clauses += 1;
                        self.enqueue(head, Reason::Clause(cref), Some(bridge));
                    }
                    self.decay_activities();

                    if let Some(max) = self.config.max_conflicts {
                        if self.stats.conflicts >= max {
                            return Ok((SolveStatus::Unknown(Budget::Conflicts), self.stats));
                        }
                    }
                    if self.stats.conflicts % 1024 == 0 {
                        if let Some(t) = self.config.timeout {
                            if start.elapsed() >= t {
                                return Ok((SolveStatus::Unknown(Budget::WallClock), self.stats));
                            }
                        }
                    }
                    if conflicts_since_restart >= restart_budget {
                        self.stats.restarts += 1;
                        luby_index += 1;
                        restart_budget = luby(luby_index) * self.config.luby_base;
                        conflicts_since_restart = 0;
                        self.backtrack(0, bridge);
                    }
                    let learnt_live =
                        self.stats.learned_clauses - self.stats.deleted_clauses;
                    if learnt_live > learnt_limit as u64 {
                        self.reduce_learnts();
                        learnt_limit += learnt_limit / 2;
                    }
                }
                None => {
                    if self.trail.len() == self.num_vars {
                        let model: Vec<bool> =
                            self.assigns.iter().map(|&a| a == Lbool::True).collect();
                        return Ok((SolveStatus::Sat(model), self.stats));
                    }
                    if let Some(t) = self.config.timeout {
                        if self.stats.decisions % 2048 == 0 && start.elapsed() >= t {
                            return Ok((SolveStatus::Unknown(Budget::WallClock), self.stats));
                        }
                    }
                    match self.pick_branch(bridge) {
                        Some(lit) => {
                            self.stats.decisions += 1;
                            self.trail_lim.push(self.trail.len());
                            bridge.on_new_level();
                            self.enqueue(lit, Reason::Decision, Some(bridge));
                        }
                        None => {
                            let model: Vec<bool> =
                                self.assigns.iter().map(|&a| a == Lbool::True).collect();
                            return Ok((SolveStatus::Sat(model), self.stats));
                        }
                    }
                }
            }
        }
    }
}

/// The reluctant-doubling restart sequence 1,1,2,1,1,2,4,...
fn luby(i: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u64;
    while size < i + 2 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut i = i;
    while size - 1 != i {
        size = (size - 1) / 2;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

/// Convenience wrapper: solve an instance with a fresh solver.
pub fn solve_instance(
    instance: &CnfInstance,
    bridge: &mut dyn Propagator,
    config: SolverConfig,
) -> Result<(SolveStatus, Stats), SolveError> {
    Solver::new(instance, config)?.solve(bridge)
}
