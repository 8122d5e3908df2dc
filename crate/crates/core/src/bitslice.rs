//! Bitsliced propagation: locally perfect refinement of the differential
//! conditions around one gate or adder column.
//!
//! For a slice with input conditions I and output conditions O, every
//! grounding (a concrete value pair per position) conforming to I whose
//! function outputs conform to O is enumerated; the refined condition of a
//! position is the tightest symbol containing the surviving pairs. This is
//! perfect propagation restricted to one bit position, and it refines inputs
//! and outputs simultaneously. Results are memoized in a bounded LRU map
//! keyed by the packed slice description.

use crate::cond::Cond;
use crate::lru::LruCache;
use crate::sha256::{if_bit, maj_bit};
use crate::tables::AdderShape;

/// The bit-level functions occurring in the compression circuit, plus the
/// generic adder column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceFunc {
    Xor3,
    Xor2,
    If,
    Maj,
    Add(AdderShape),
}

impl SliceFunc {
    pub fn arity(&self) -> usize {
        match self {
            SliceFunc::Xor3 | SliceFunc::If | SliceFunc::Maj => 3,
            SliceFunc::Xor2 => 2,
            SliceFunc::Add(s) => s.n_in(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            SliceFunc::Add(s) => s.n_out,
            _ => 1,
        }
    }

    /// Applies the function to one instance's input bits.
    fn eval(&self, bits: u32, out: &mut [bool; 3]) {
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

    fn pack(&self) -> u64 {
        match self {
            SliceFunc::Xor3 => 0,
            SliceFunc::Xor2 => 1,
            SliceFunc::If => 2,
            SliceFunc::Maj => 3,
            SliceFunc::Add(s) => {
                0x8 | (s.addends as u64) << 4
                    | (s.lo_in as u64) << 8
                    | (s.hi_in as u64) << 9
                    | (s.n_out as u64) << 10
            }
        }
    }
}

fn cond_code(c: Cond) -> u64 {
    match c {
        Cond::Any => 0,
        Cond::Same => 1,
        Cond::Diff => 2,
        Cond::Zero => 3,
        Cond::U => 4,
        Cond::N => 5,
        Cond::One => 6,
    }
}

/// Packs (function, inputs, outputs) into a cache key.
fn slice_key(func: SliceFunc, inputs: &[Cond], outputs: &[Cond]) -> u64 {
    let mut key = func.pack();
    let mut shift = 12;
    for &c in inputs.iter().chain(outputs.iter()) {
        key |= cond_code(c) << shift;
        shift += 3;
    }
    key
}

/// A refinement of every position of a slice, or a contradiction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceResult {
    Refined { inputs: Vec<Cond>, outputs: Vec<Cond> },
    Contradiction,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BitsliceStats {
    pub queries: u64,
    pub cache_hits: u64,
    pub contradictions: u64,
    pub refined_positions: u64,
}

pub struct BitsliceEngine {
    cache: LruCache<u64, SliceResult>,
    pub stats: BitsliceStats,
}

/// Default rule-cache capacity (entries).
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

impl BitsliceEngine {
    pub fn new(cache_capacity: usize) -> Self {
        BitsliceEngine { cache: LruCache::new(cache_capacity), stats: BitsliceStats::default() }
    }

    pub fn cache_hit_rate(&self) -> f64 {
        self.cache.hit_rate()
    }

    /// Locally perfect propagation over one slice.
    pub fn propagate(&mut self, func: SliceFunc, inputs: &[Cond], outputs: &[Cond]) -> SliceResult {
        debug_assert_eq!(inputs.len(), func.arity());
        debug_assert_eq!(outputs.len(), func.n_out());
        self.stats.queries += 1;
        let key = slice_key(func, inputs, outputs);
        if let Some(hit) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            self.tally(&hit, inputs, outputs);
            return hit;
        }
        let result = enumerate_slice(func, inputs, outputs);
        self.cache.insert(key, result.clone());
        self.tally(&result, inputs, outputs);
        result
    }

    fn tally(&mut self, result: &SliceResult, inputs: &[Cond], outputs: &[Cond]) {
        match result {
            SliceResult::Contradiction => self.stats.contradictions += 1,
            SliceResult::Refined { inputs: ri, outputs: ro } => {
                let tightened = ri.iter().zip(inputs).filter(|(a, b)| *a != *b).count()
                    + ro.iter().zip(outputs).filter(|(a, b)| *a != *b).count();
                self.stats.refined_positions += tightened as u64;
            }
        }
    }

    /// Columnwise propagation across a whole addition of `operands` (each a
    /// low-to-high condition slice of equal width) with output conditions
    /// `out`. Carry conditions are threaded between adjacent columns and the
    /// sweep repeats until nothing changes. Returns refined operands and
    /// output, or None on contradiction.
    pub fn propagate_add_word(
        &mut self,
        operands: &[Vec<Cond>],
        out: &[Cond],
    ) -> Option<(Vec<Vec<Cond>>, Vec<Cond>)> {
        let w = out.len();
        assert!(operands.iter().all(|o| o.len() == w));
        let k = operands.len();
        let mut ops: Vec<Vec<Cond>> = operands.to_vec();
        let mut sum: Vec<Cond> = out.to_vec();
        // carries[col] = (lo out of col, hi out of col)
        let mut lo: Vec<Cond> = vec![Cond::Any; w];
        let mut hi: Vec<Cond> = vec![Cond::Any; w];
        loop {
            let mut changed = false;
            for col in 0..w {
                let lo_in = (col >= 1).then(|| lo[col - 1]);
                let hi_in = (col >= 2).then(|| hi[col - 2]);
                let n_out = (w - col).min(3);
                let shape = AdderShape {
                    addends: k,
                    lo_in: lo_in.is_some(),
                    hi_in: hi_in.is_some(),
                    n_out,
                };
                let mut inputs: Vec<Cond> = (0..k).map(|i| ops[i][col]).collect();
                inputs.extend(lo_in);
                inputs.extend(hi_in);
                let mut outputs: Vec<Cond> = vec![sum[col]];
                if n_out >= 2 {
                    outputs.push(lo[col]);
                }
                if n_out >= 3 {
                    outputs.push(hi[col]);
                }
                match self.propagate(SliceFunc::Add(shape), &inputs, &outputs) {
                    SliceResult::Contradiction => return None,
                    SliceResult::Refined { inputs: ri, outputs: ro } => {
                        for i in 0..k {
                            if ops[i][col] != ri[i] {
                                ops[i][col] = ri[i];
                                changed = true;
                            }
                        }
                        let mut idx = k;
                        if let Some(_) = lo_in {
                            if lo[col - 1] != ri[idx] {
                                lo[col - 1] = ri[idx];
                                changed = true;
                            }
                            idx += 1;
                        }
                        if let Some(_) = hi_in {
                            if hi[col - 2] != ri[idx] {
                                hi[col - 2] = ri[idx];
                                changed = true;
                            }
                        }
                        if sum[col] != ro[0] {
                            sum[col] = ro[0];
                            changed = true;
                        }
                        if n_out >= 2 && lo[col] != ro[1] {
                            lo[col] = ro[1];
                            changed = true;
                        }
                        if n_out >= 3 && hi[col] != ro[2] {
                            hi[col] = ro[2];
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return Some((ops, sum));
            }
        }
    }
}

/// The enumeration core: walk all pair groundings conforming to the input
/// conditions, apply the function to both instances, keep groundings whose
/// outputs conform, and project each position back to a condition.
fn enumerate_slice(func: SliceFunc, inputs: &[Cond], outputs: &[Cond]) -> SliceResult {
    let arity = inputs.len();
    let n_out = outputs.len();
    // per-position candidate pairs (x, x')
    let mut choices: Vec<[Option<(bool, bool)>; 4]> = Vec::with_capacity(arity);
    for c in inputs {
        let mut opts = [None; 4];
        let mut n = 0;
        for (x, x2) in [(false, false), (true, false), (false, true), (true, true)] {
            if c.allows(x, x2) {
                opts[n] = Some((x, x2));
                n += 1;
            }
        }
        if n == 0 {
            return SliceResult::Contradiction;
        }
        choices.push(opts);
    }
    let mut in_masks = vec![0u8; arity];
    let mut out_masks = vec![0u8; n_out];
    let mut idx = vec![0usize; arity];
    let mut any = false;
    'outer: loop {
        // evaluate this grounding
        let mut bits1 = 0u32;
        let mut bits2 = 0u32;
        for (i, &j) in idx.iter().enumerate() {
            let (x, x2) = choices[i][j].unwrap();
            bits1 |= (x as u32) << i;
            bits2 |= (x2 as u32) << i;
        }
        let mut o1 = [false; 3];
        let mut o2 = [false; 3];
        func.eval(bits1, &mut o1);
        func.eval(bits2, &mut o2);
        let conforms = (0..n_out).all(|j| outputs[j].allows(o1[j], o2[j]));
        if conforms {
            any = true;
            for (i, &j) in idx.iter().enumerate() {
                let (x, x2) = choices[i][j].unwrap();
                in_masks[i] |= crate::cond::pair_bit(x, x2);
            }
            for j in 0..n_out {
                out_masks[j] |= crate::cond::pair_bit(o1[j], o2[j]);
            }
        }
        // odometer
        for i in 0..arity {
            idx[i] += 1;
            if idx[i] < 4 && choices[i][idx[i]].is_some() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    if !any {
        return SliceResult::Contradiction;
    }
    let project = |mask: u8, original: Cond| -> Cond {
        let tight = Cond::tightest_superset(mask).expect("nonempty");
        // never loosen: intersect with what was already known
        tight.intersect(original).unwrap_or(original)
    };
    SliceResult::Refined {
        inputs: (0..arity).map(|i| project(in_masks[i], inputs[i])).collect(),
        outputs: (0..n_out).map(|j| project(out_masks[j], outputs[j])).collect(),
    }
}
