//! Two-bit conditions and inconsistency blocking.
//!
//! A bitsliced differential of a bitwise function often forces a linear
//! relation x ^ y = z between two concrete bits of one instance. Collecting
//! these relations in a graph (vertices are variables, edges carry the parity
//! and the trail literals that imply them) makes contradictions visible as
//! cycles whose edge parities sum to 1 over F2. Each new edge triggers a
//! breadth-first search for the shortest such cycle through it; the union of
//! the cycle's reason literals then forms a blocking clause that is falsified
//! by the current trail.

use crate::cnf::{Lit, Var};
use crate::cond::Cond;
use crate::lru::LruCache;
use crate::bitslice::SliceFunc;

/// Where a relation endpoint sits within a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlicePos {
    Input(u8),
    Output(u8),
}

/// A forced relation between two positions of one slice, per instance side:
/// first-instance bits when `side` is 0, second-instance when 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoBitPattern {
    pub a: SlicePos,
    pub b: SlicePos,
    pub side: u8,
    /// value(a) ^ value(b)
    pub parity: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TwoBitStats {
    pub derivations: u64,
    pub cache_hits: u64,
    pub edges_added: u64,
    pub duplicate_edges: u64,
    pub cycles_found: u64,
    pub cycle_length_total: u64,
    pub blocking_literals_total: u64,
}

/// Derives two-bit patterns from bitsliced differentials, memoized.
pub struct TwoBitEngine {
    cache: LruCache<u64, Vec<TwoBitPattern>>,
    pub stats: TwoBitStats,
}

impl TwoBitEngine {
    pub fn new(cache_capacity: usize) -> Self {
        TwoBitEngine { cache: LruCache::new(cache_capacity), stats: TwoBitStats::default() }
    }

    /// All relations that hold in every grounding of the differential.
    /// Only bitwise functions are considered; relations where one endpoint is
    /// already constant across groundings are left to value propagation.
    pub fn derive(&mut self, func: SliceFunc, inputs: &[Cond], output: Cond) -> Vec<TwoBitPattern> {
        debug_assert!(!matches!(func, SliceFunc::Add(_)), "two-bit conditions are for gates");
        self.stats.derivations += 1;
        let key = pack_key(func, inputs, output);
        if let Some(hit) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return hit;
        }
        let result = derive_patterns(func, inputs, output);
        self.cache.insert(key, result.clone());
        result
    }
}

fn pack_key(func: SliceFunc, inputs: &[Cond], output: Cond) -> u64 {
    let code = |c: Cond| -> u64 {
        match c {
            Cond::Any => 0,
            Cond::Same => 1,
            Cond::Diff => 2,
            Cond::Zero => 3,
            Cond::U => 4,
            Cond::N => 5,
            Cond::One => 6,
        }
    };
    let mut key = match func {
        SliceFunc::Xor3 => 0u64,
        SliceFunc::Xor2 => 1,
        SliceFunc::If => 2,
        SliceFunc::Maj => 3,
        SliceFunc::Add(_) => unreachable!(),
    };
    let mut shift = 4;
    for &c in inputs {
        key |= code(c) << shift;
        shift += 3;
    }
    key |= code(output) << shift;
    key
}

fn derive_patterns(func: SliceFunc, inputs: &[Cond], output: Cond) -> Vec<TwoBitPattern> {
    let arity = inputs.len();
    // collect surviving groundings as (input bits, output bit) per instance
    let mut groundings: Vec<(u32, bool, u32, bool)> = Vec::new();
    let mut idx = vec![0u8; arity];
    let options: Vec<Vec<(bool, bool)>> = inputs
        .iter()
        .map(|c| {
            [(false, false), (true, false), (false, true), (true, true)]
                .into_iter()
                .filter(|&(x, x2)| c.allows(x, x2))
                .collect()
        })
        .collect();
    if options.iter().any(|o| o.is_empty()) {
        return Vec::new();
    }
    'outer: loop {
        let mut bits1 = 0u32;
        let mut bits2 = 0u32;
        for i in 0..arity {
            let (x, x2) = options[i][idx[i] as usize];
            bits1 |= (x as u32) << i;
            bits2 |= (x2 as u32) << i;
        }
        let mut o1 = [false; 3];
        let mut o2 = [false; 3];
        func.eval_pub(bits1, &mut o1);
        func.eval_pub(bits2, &mut o2);
        if output.allows(o1[0], o2[0]) {
            groundings.push((bits1, o1[0], bits2, o2[0]));
        }
        for i in 0..arity {
            idx[i] += 1;
            if (idx[i] as usize) < options[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    if groundings.is_empty() {
        return Vec::new();
    }

    let positions: Vec<SlicePos> = (0..arity as u8)
        .map(SlicePos::Input)
        .chain(std::iter::once(SlicePos::Output(0)))
        .collect();
    let value = |g: &(u32, bool, u32, bool), pos: SlicePos, side: u8| -> bool {
        match (pos, side) {
            (SlicePos::Input(i), 0) => g.0 >> i & 1 == 1,
            (SlicePos::Input(i), _) => g.2 >> i & 1 == 1,
            (SlicePos::Output(_), 0) => g.1,
            (SlicePos::Output(_), _) => g.3,
        }
    };

    let mut out = Vec::new();
    for side in 0..2u8 {
        for (pi, &a) in positions.iter().enumerate() {
            // skip positions that are constant across groundings
            let a0 = value(&groundings[0], a, side);
            if groundings.iter().all(|g| value(g, a, side) == a0) {
                continue;
            }
            for &b in &positions[pi + 1..] {
                let b0 = value(&groundings[0], b, side);
                if groundings.iter().all(|g| value(g, b, side) == b0) {
                    continue;
                }
                let p0 = a0 ^ b0;
                if groundings.iter().all(|g| value(g, a, side) ^ value(g, b, side) == p0) {
                    out.push(TwoBitPattern { a, b, side, parity: p0 });
                }
            }
        }
    }
    out
}

/// One relation instantiated on solver variables, with its trail support.
#[derive(Debug, Clone)]
pub struct Edge {
    pub u: Var,
    pub v: Var,
    /// u ^ v = parity
    pub parity: bool,
    pub reason: Vec<Lit>,
    pub level: usize,
}

/// A cycle whose parity sum is odd, as edge indices into the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InconsistentCycle {
    pub edges: Vec<usize>,
}

/// Parity-labelled graph over solver variables. Edges are pushed and popped
/// stackwise as the solver trail grows and backtracks.
pub struct EquationGraph {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    pub stats: TwoBitStats,
    // BFS scratch, sized 2*num_vars for the (vertex, parity) product graph
    visited: Vec<u32>,
    parent: Vec<(u32, u32)>,
    stamp: u32,
}

impl EquationGraph {
    pub fn new(num_vars: usize) -> Self {
        EquationGraph {
            adj: vec![Vec::new(); num_vars],
            edges: Vec::new(),
            stats: TwoBitStats::default(),
            visited: vec![0; 2 * num_vars],
            parent: vec![(0, 0); 2 * num_vars],
            stamp: 0,
        }
    }

    pub fn edge(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Inserts the relation and looks for a shortest inconsistent cycle
    /// through it. Duplicate edges with the same parity are ignored; with
    /// opposite parity they form an immediate two-edge inconsistency.
    pub fn add_edge(
        &mut self,
        u: Var,
        v: Var,
        parity: bool,
        reason: Vec<Lit>,
        level: usize,
    ) -> Option<InconsistentCycle> {
        debug_assert_ne!(u, v, "endpoints must be distinct");
        let parallel: Vec<usize> = self.adj[u.index()]
            .iter()
            .copied()
            .filter(|&e| self.edges[e].u == v || self.edges[e].v == v)
            .collect();
        if parallel.iter().any(|&e| self.edges[e].parity == parity) {
            self.stats.duplicate_edges += 1;
            return None;
        }
        if let Some(&existing) = parallel.first() {
            // contradictory parallel edge: record it and report the 2-cycle
            self.stats.duplicate_edges += 1;
            let idx = self.push_edge(u, v, parity, reason, level);
            return Some(self.found_cycle(vec![idx, existing]));
        }
        let idx = self.push_edge(u, v, parity, reason, level);
        // BFS from u to v in the parity-split graph, excluding the new edge;
        // a closing path with parity sum equal to !parity gives an odd cycle.
        let target_parity = !parity;
        match self.shortest_path(u, v, target_parity, idx) {
            Some(mut path) => {
                path.push(idx);
                Some(self.found_cycle(path))
            }
            None => None,
        }
    }

    fn push_edge(&mut self, u: Var, v: Var, parity: bool, reason: Vec<Lit>, level: usize) -> usize {
        let idx = self.edges.len();
        self.edges.push(Edge { u, v, parity, reason, level });
        self.adj[u.index()].push(idx);
        self.adj[v.index()].push(idx);
        self.stats.edges_added += 1;
        idx
    }

    fn found_cycle(&mut self, edges: Vec<usize>) -> InconsistentCycle {
        self.stats.cycles_found += 1;
        self.stats.cycle_length_total += edges.len() as u64;
        debug_assert_eq!(
            edges.iter().fold(false, |acc, &e| acc ^ self.edges[e].parity),
            true,
            "reported cycle must have odd parity"
        );
        InconsistentCycle { edges }
    }

    /// BFS over (vertex, accumulated parity) states; edges are explored in
    /// insertion order, so ties resolve to the earliest-inserted path.
    fn shortest_path(&mut self, from: Var, to: Var, parity: bool, skip: usize) -> Option<Vec<usize>> {
        self.stamp += 1;
        let stamp = self.stamp;
        let state = |v: Var, p: bool| 2 * v.index() + p as usize;
        let mut queue = std::collections::VecDeque::new();
        self.visited[state(from, false)] = stamp;
        queue.push_back((from, false));
        while let Some((x, p)) = queue.pop_front() {
            for &e in &self.adj[x.index()] {
                if e == skip {
                    continue;
                }
                let edge = &self.edges[e];
                let y = if edge.u == x { edge.v } else { edge.u };
                let q = p ^ edge.parity;
                let s = state(y, q);
                if self.visited[s] == stamp {
                    continue;
                }
                self.visited[s] = stamp;
                self.parent[s] = (state(x, p) as u32, e as u32);
                if y == to && q == parity {
                    // reconstruct
                    let mut path = Vec::new();
                    let mut cur = s;
                    while cur != state(from, false) {
                        let (prev, via) = self.parent[cur];
                        path.push(via as usize);
                        cur = prev as usize;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back((y, q));
            }
        }
        None
    }

    /// Drops every edge inserted above `level`. Edges are stacked in trail
    /// order, so this pops from the adjacency tails.
    pub fn backtrack(&mut self, level: usize) {
        while let Some(edge) = self.edges.last() {
            if edge.level <= level {
                break;
            }
            let idx = self.edges.len() - 1;
            let (u, v) = (edge.u, edge.v);
            debug_assert_eq!(self.adj[u.index()].last(), Some(&idx));
            debug_assert_eq!(self.adj[v.index()].last(), Some(&idx));
            self.adj[u.index()].pop();
            self.adj[v.index()].pop();
            self.edges.pop();
        }
    }

    /// The clause blocking an inconsistent cycle: the negated union of the
    /// trail literals supporting its edges. Falsified by construction under
    /// the trail that produced the edges.
    pub fn blocking_clause(&mut self, cycle: &InconsistentCycle) -> Vec<Lit> {
        let mut lits: Vec<Lit> = cycle
            .edges
            .iter()
            .flat_map(|&e| self.edges[e].reason.iter().map(|&l| !l))
            .collect();
        lits.sort();
        lits.dedup();
        self.stats.blocking_literals_total += lits.len() as u64;
        lits
    }
}

// expose the slice evaluator for the derivation loop
impl SliceFunc {
    pub(crate) fn eval_pub(&self, bits: u32, out: &mut [bool; 3]) {
        use crate::sha256::{if_bit, maj_bit};
        match self {
            SliceFunc::Xor3 => out[0] = (bits & 1 ^ (bits >> 1) & 1 ^ (bits >> 2) & 1) == 1,
            SliceFunc::Xor2 => out[0] = (bits & 1 ^ (bits >> 1) & 1) == 1,
            SliceFunc::If => {
                out[0] = if_bit(bits & 1 == 1, bits >> 1 & 1 == 1, bits >> 2 & 1 == 1)
            }
            SliceFunc::Maj => {
                out[0] = maj_bit(bits & 1 == 1, bits >> 1 & 1 == 1, bits >> 2 & 1 == 1)
            }
            SliceFunc::Add(shape) => {
                let total = bits.count_ones();
                for j in 0..shape.n_out {
                    out[j] = total >> j & 1 == 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cond::ALL_CONDS;

    fn c(s: char) -> Cond {
        Cond::from_symbol(s).unwrap()
    }

    #[test]
    fn xor_差_equal_inputs_relate_output() {
        // [-0-] -> [0] forces input2 = input0 on both sides
        let mut engine = TwoBitEngine::new(64);
        let pats = engine.derive(SliceFunc::Xor3, &[c('-'), c('0'), c('-')], c('0'));
        for side in 0..2u8 {
            assert!(
                pats.contains(&TwoBitPattern {
                    a: SlicePos::Input(0),
                    b: SlicePos::Input(2),
                    side,
                    parity: false
                }),
                "missing x2 = x0 on side {side}: {pats:?}"
            );
        }
    }

    #[test]
    fn maj_with_one_flip_and_equal_output_relates_other_inputs() {
        // MAJ inputs (x, -, -) with output '-': the flipped input only leaves
        // the output unchanged when y = z.
        let mut engine = TwoBitEngine::new(64);
        let pats = engine.derive(SliceFunc::Maj, &[c('x'), c('-'), c('-')], c('-'));
        for side in 0..2u8 {
            assert!(
                pats.contains(&TwoBitPattern {
                    a: SlicePos::Input(1),
                    b: SlicePos::Input(2),
                    side,
                    parity: false
                }),
                "missing y = z on side {side}: {pats:?}"
            );
        }
    }

    #[test]
    fn fully_unknown_slice_has_no_patterns() {
        let mut engine = TwoBitEngine::new(64);
        assert!(engine.derive(SliceFunc::Xor3, &[c('?'); 3], c('?')).is_empty());
        assert!(engine.derive(SliceFunc::If, &[c('?'); 3], c('?')).is_empty());
    }

    /// Oracle: re-derive patterns by explicit grounding enumeration over a
    /// different code path, for every condition tuple of each gate.
    #[test]
    fn derivation_matches_enumeration_exhaustively() {
        let mut engine = TwoBitEngine::new(1 << 14);
        for func in [SliceFunc::Xor3, SliceFunc::If, SliceFunc::Maj] {
            for a in ALL_CONDS {
                for b in ALL_CONDS {
                    for cc in ALL_CONDS {
                        for o in ALL_CONDS {
                            let got = engine.derive(func, &[a, b, cc], o);
                            let want = oracle_patterns(func, &[a, b, cc], o);
                            assert_eq!(got, want, "{func:?} [{a:?} {b:?} {cc:?}] -> {o:?}");
                        }
                    }
                }
            }
        }
    }

    fn oracle_patterns(func: SliceFunc, inputs: &[Cond], output: Cond) -> Vec<TwoBitPattern> {
        // materialize all groundings naively
        let mut values: Vec<Vec<bool>> = Vec::new(); // per grounding: pos values side0 then side1
        let n = inputs.len();
        for assignment in 0..(1u32 << (2 * n)) {
            let bits1 = assignment & ((1 << n) - 1);
            let bits2 = assignment >> n;
            let ok = (0..n).all(|i| inputs[i].allows(bits1 >> i & 1 == 1, bits2 >> i & 1 == 1));
            if !ok {
                continue;
            }
            let mut o1 = [false; 3];
            let mut o2 = [false; 3];
            func.eval_pub(bits1, &mut o1);
            func.eval_pub(bits2, &mut o2);
            if !output.allows(o1[0], o2[0]) {
                continue;
            }
            let mut row = Vec::new();
            for i in 0..n {
                row.push(bits1 >> i & 1 == 1);
            }
            row.push(o1[0]);
            for i in 0..n {
                row.push(bits2 >> i & 1 == 1);
            }
            row.push(o2[0]);
            values.push(row);
        }
        if values.is_empty() {
            return Vec::new();
        }
        let npos = n + 1;
        let mut out = Vec::new();
        for side in 0..2u8 {
            let off = side as usize * npos;
            for pa in 0..npos {
                if values.iter().all(|r| r[off + pa] == values[0][off + pa]) {
                    continue;
                }
                for pb in pa + 1..npos {
                    if values.iter().all(|r| r[off + pb] == values[0][off + pb]) {
                        continue;
                    }
                    let p0 = values[0][off + pa] ^ values[0][off + pb];
                    if values.iter().all(|r| r[off + pa] ^ r[off + pb] == p0) {
                        let to_pos = |p: usize| {
                            if p == n {
                                SlicePos::Output(0)
                            } else {
                                SlicePos::Input(p as u8)
                            }
                        };
                        out.push(TwoBitPattern { a: to_pos(pa), b: to_pos(pb), side, parity: p0 });
                    }
                }
            }
        }
        out
    }

    #[test]
    fn three_cycle_inconsistency() {
        // a = b, b = c, then c != a closes an odd cycle of length 3
        let mut g = EquationGraph::new(4);
        assert!(g.add_edge(Var(0), Var(1), false, vec![Lit::from_dimacs(10)], 1).is_none());
        assert!(g.add_edge(Var(1), Var(2), false, vec![Lit::from_dimacs(11)], 1).is_none());
        let cycle = g.add_edge(Var(2), Var(0), true, vec![Lit::from_dimacs(12)], 2).unwrap();
        assert_eq!(cycle.edges.len(), 3);
        let clause = g.blocking_clause(&cycle);
        assert_eq!(
            clause,
            vec![!Lit::from_dimacs(10), !Lit::from_dimacs(11), !Lit::from_dimacs(12)]
        );
    }

    #[test]
    fn even_cycle_is_consistent() {
        let mut g = EquationGraph::new(4);
        g.add_edge(Var(0), Var(1), false, vec![], 1);
        g.add_edge(Var(1), Var(2), false, vec![], 1);
        assert!(g.add_edge(Var(2), Var(0), false, vec![], 1).is_none());
    }

    #[test]
    fn disconnected_edge_finds_nothing() {
        let mut g = EquationGraph::new(6);
        g.add_edge(Var(0), Var(1), true, vec![], 1);
        assert!(g.add_edge(Var(3), Var(4), true, vec![], 1).is_none());
    }

    #[test]
    fn opposite_parallel_edge_is_a_two_cycle() {
        let mut g = EquationGraph::new(3);
        g.add_edge(Var(0), Var(1), false, vec![Lit::from_dimacs(5)], 1);
        let cycle = g.add_edge(Var(0), Var(1), true, vec![Lit::from_dimacs(6)], 1).unwrap();
        assert_eq!(cycle.edges.len(), 2);
        // same-parity duplicate is ignored
        assert!(g.add_edge(Var(1), Var(0), true, vec![], 1).is_none());
        assert_eq!(g.stats.duplicate_edges, 2);
    }

    #[test]
    fn backtracking_restores_earlier_graph() {
        let mut g = EquationGraph::new(5);
        g.add_edge(Var(0), Var(1), false, vec![], 0);
        g.add_edge(Var(1), Var(2), false, vec![], 1);
        g.add_edge(Var(2), Var(3), true, vec![], 2);
        g.backtrack(1);
        assert_eq!(g.len(), 2);
        // rebuild from scratch and compare structure
        let mut fresh = EquationGraph::new(5);
        fresh.add_edge(Var(0), Var(1), false, vec![], 0);
        fresh.add_edge(Var(1), Var(2), false, vec![], 1);
        assert_eq!(g.len(), fresh.len());
        for i in 0..g.len() {
            assert_eq!(g.edge(i).u, fresh.edge(i).u);
            assert_eq!(g.edge(i).v, fresh.edge(i).v);
            assert_eq!(g.edge(i).parity, fresh.edge(i).parity);
        }
        // the popped edge can be re-added
        assert!(g.add_edge(Var(2), Var(3), true, vec![], 1).is_none());
    }

    /// Exhaustive shortest-odd-cycle search through one required edge.
    fn exhaustive_shortest(edges: &[(usize, usize, bool)], through: usize, n: usize) -> Option<usize> {
        // DFS over simple paths from one endpoint of `through` to the other
        let (su, sv, sp) = edges[through];
        let mut best: Option<usize> = None;
        fn dfs(
            edges: &[(usize, usize, bool)],
            skip: usize,
            cur: usize,
            target: usize,
            parity: bool,
            used_v: &mut Vec<bool>,
            depth: usize,
            want: bool,
            best: &mut Option<usize>,
        ) {
            if let Some(b) = *best {
                if depth >= b {
                    return;
                }
            }
            if cur == target && depth > 0 {
                if parity == want && best.map_or(true, |b| depth < b) {
                    *best = Some(depth);
                }
                return;
            }
            for (i, &(u, v, p)) in edges.iter().enumerate() {
                if i == skip {
                    continue;
                }
                let next = if u == cur {
                    v
                } else if v == cur {
                    u
                } else {
                    continue;
                };
                if used_v[next] && next != target {
                    continue;
                }
                if next != target {
                    used_v[next] = true;
                }
                dfs(edges, skip, next, target, parity ^ p, used_v, depth + 1, want, best);
                if next != target {
                    used_v[next] = false;
                }
            }
        }
        let mut used = vec![false; n];
        used[su] = true;
        dfs(edges, through, su, sv, false, &mut used, 0, !sp, &mut best);
        best.map(|b| b + 1) // count the required edge
    }

    #[test]
    fn random_graphs_match_exhaustive_shortest_cycle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for round in 0..300 {
            let n = rng.gen_range(4..=14usize);
            let m = rng.gen_range(3..=22usize);
            let mut edges: Vec<(usize, usize, bool)> = Vec::new();
            let mut g = EquationGraph::new(n);
            let mut first_cycle: Option<(usize, usize)> = None; // (edge idx, got length)
            for _ in 0..m {
                let u = rng.gen_range(0..n);
                let mut v = rng.gen_range(0..n);
                while v == u {
                    v = rng.gen_range(0..n);
                }
                // avoid parallel duplicates for a clean oracle comparison
                if edges.iter().any(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u)) {
                    continue;
                }
                let p = rng.gen_bool(0.5);
                edges.push((u, v, p));
                let got = g.add_edge(Var(u as u32), Var(v as u32), p, vec![], 0);
                if let Some(cycle) = got {
                    first_cycle = Some((edges.len() - 1, cycle.edges.len()));
                    break;
                } else {
                    // oracle agrees there is no odd cycle through this edge
                    assert_eq!(
                        exhaustive_shortest(&edges, edges.len() - 1, n),
                        None,
                        "round {round}: missed a cycle"
                    );
                }
            }
            if let Some((idx, got_len)) = first_cycle {
                let want = exhaustive_shortest(&edges, idx, n).expect("oracle must also find one");
                assert_eq!(got_len, want, "round {round}: cycle length mismatch");
            }
        }
    }
}
