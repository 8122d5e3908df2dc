//! Differential-path grids: starting points and characteristics.
//!
//! A grid holds one row per step i in -4..n, with condition words for A and E
//! (and W for i >= 0). A starting point is a partially constrained grid fixed
//! before search; a characteristic is the concrete grid read off a solution.
//!
//! File format, one row per line:
//!
//! ```text
//! # comment
//!  -4: <A-word> <E-word> .
//!   0: <A-word> <E-word> <W-word>
//! ```
//!
//! Words are 32 condition symbols (most significant first) or `.` for an
//! absent word (absent A/E parse as all-'?'; W must be `.` on rows i < 0).

use std::fmt;

use crate::cond::{Cond, CondWord};
use crate::error::ParseError;
use crate::sha256::{ChainingValue, MessageBlock, StateTrace};

/// One grid row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub a: CondWord,
    pub e: CondWord,
    /// Present exactly for steps 0..n.
    pub w: Option<CondWord>,
}

/// A differential-path grid over steps -4..n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondGrid {
    n: usize,
    rows: Vec<Row>,
}

/// Starting points and characteristics share the grid representation; a
/// characteristic is expected to be a pointwise refinement of its starting
/// point, which `CondGrid::refines` checks.
pub type StartingPoint = CondGrid;
pub type Characteristic = CondGrid;

impl CondGrid {
    /// An unconstrained n-step grid: '-' on the chaining-value rows (the two
    /// instances share the chaining value) and '?' everywhere else.
    pub fn unconstrained(n: usize) -> Self {
        assert!(n <= 64);
        let mut rows = Vec::with_capacity(n + 4);
        for i in -4..(n as isize) {
            rows.push(Row {
                a: if i < 0 { CondWord::same() } else { CondWord::any() },
                e: if i < 0 { CondWord::same() } else { CondWord::any() },
                w: (i >= 0).then(CondWord::any),
            });
        }
        CondGrid { n, rows }
    }

    pub fn from_rows(n: usize, rows: Vec<Row>) -> Result<Self, ParseError> {
        if rows.len() != n + 4 {
            return Err(ParseError::Other(format!(
                "grid for {n} steps needs {} rows, got {}",
                n + 4,
                rows.len()
            )));
        }
        for (idx, row) in rows.iter().enumerate() {
            let i = idx as isize - 4;
            if (i < 0) != row.w.is_none() {
                return Err(ParseError::Other(format!("row {i}: W word presence is wrong")));
            }
        }
        Ok(CondGrid { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: isize) -> &Row {
        &self.rows[(i + 4) as usize]
    }

    pub fn row_mut(&mut self, i: isize) -> &mut Row {
        &mut self.rows[(i + 4) as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = (isize, &Row)> {
        self.rows.iter().enumerate().map(|(idx, r)| (idx as isize - 4, r))
    }

    /// Removes the last `k` step rows, yielding an (n-k)-step grid. The four
    /// chaining-value rows can never be dropped.
    pub fn drop_rows(&self, k: usize) -> Result<CondGrid, ParseError> {
        if k > self.n {
            return Err(ParseError::Other(format!(
                "cannot drop {k} rows from a {}-step grid",
                self.n
            )));
        }
        let mut rows = self.rows.clone();
        rows.truncate(self.n + 4 - k);
        Ok(CondGrid { n: self.n - k, rows })
    }

    /// Pointwise refinement: every word's allowed-sets are subsets of the
    /// other grid's. Both grids must have the same step count.
    pub fn refines(&self, coarser: &CondGrid) -> bool {
        self.n == coarser.n
            && self.rows.iter().zip(coarser.rows.iter()).all(|(f, c)| {
                f.a.refines(&c.a)
                    && f.e.refines(&c.e)
                    && match (f.w.as_ref(), c.w.as_ref()) {
                        (Some(fw), Some(cw)) => fw.refines(cw),
                        (None, None) => true,
                        _ => false,
                    }
            })
    }

    /// True if some W row forces a difference (contains 'x', 'u' or 'n'),
    /// which is how starting points encode M != M'.
    pub fn forces_message_difference(&self) -> bool {
        self.rows.iter().filter_map(|r| r.w.as_ref()).any(|w| {
            w.iter().any(|c| matches!(c, Cond::Diff | Cond::U | Cond::N))
        })
    }

    /// The concrete characteristic of a solution pair: conditions '-', 'u',
    /// 'n' read off the two state traces.
    pub fn from_traces(t1: &StateTrace, t2: &StateTrace) -> CondGrid {
        assert_eq!(t1.n, t2.n);
        let n = t1.n;
        let mut rows = Vec::with_capacity(n + 4);
        for i in -4..(n as isize) {
            rows.push(Row {
                a: CondWord::from_pair(t1.a(i), t2.a(i)),
                e: CondWord::from_pair(t1.e(i), t2.e(i)),
                w: (i >= 0).then(|| CondWord::from_pair(t1.w(i as usize), t2.w(i as usize))),
            });
        }
        CondGrid { n, rows }
    }

    /// True iff a concrete pair of executions (chaining value plus messages)
    /// satisfies every condition in the grid.
    pub fn admits(&self, cv: &ChainingValue, m: &MessageBlock, m2: &MessageBlock) -> bool {
        let (_, t1) = crate::sha256::compress_trace(cv, m, self.n);
        let (_, t2) = crate::sha256::compress_trace(cv, m2, self.n);
        CondGrid::from_traces(&t1, &t2).refines(self)
    }

    pub fn parse(text: &str) -> Result<CondGrid, ParseError> {
        let mut rows: Vec<(isize, Row)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ParseError::Grid { line: lineno + 1, msg };
            let (idx_part, rest) = line
                .split_once(':')
                .ok_or_else(|| err("missing `i:` prefix".into()))?;
            let i: isize = idx_part
                .trim()
                .parse()
                .map_err(|_| err(format!("bad row index {idx_part:?}")))?;
            let words: Vec<&str> = rest.split_whitespace().collect();
            if words.len() != 3 {
                return Err(err(format!("expected 3 words, got {}", words.len())));
            }
            let parse_word = |s: &str| -> Result<Option<CondWord>, ParseError> {
                if s == "." {
                    Ok(None)
                } else {
                    CondWord::parse(s)
                        .map(Some)
                        .map_err(|e| err(format!("{e}")))
                }
            };
            let a = parse_word(words[0])?.unwrap_or_else(CondWord::any);
            let e = parse_word(words[1])?.unwrap_or_else(CondWord::any);
            let w = parse_word(words[2])?;
            if i < -4 {
                return Err(err(format!("row index {i} out of range")));
            }
            if (i < 0) && w.is_some() {
                return Err(err(format!("row {i} must not have a W word")));
            }
            if i >= 0 && w.is_none() {
                return Err(err(format!("row {i} must have a W word")));
            }
            if rows.iter().any(|(j, _)| *j == i) {
                return Err(err(format!("duplicate row {i}")));
            }
            rows.push((i, Row { a, e, w }));
        }
        rows.sort_by_key(|(i, _)| *i);
        let n = rows.len().checked_sub(4).ok_or_else(|| ParseError::Other("empty grid".into()))?;
        for (pos, (i, _)) in rows.iter().enumerate() {
            if *i != pos as isize - 4 {
                return Err(ParseError::Other(format!("missing row {}", pos as isize - 4)));
            }
        }
        CondGrid::from_rows(n, rows.into_iter().map(|(_, r)| r).collect())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows() {
            let w = row.w.as_ref().map_or_else(|| ".".into(), |w| w.render());
            out.push_str(&format!("{i:>3}: {} {} {w}\n", row.a.render(), row.e.render()));
        }
        out
    }
}

impl fmt::Display for CondGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sha256::{compress_trace, IV};

    #[test]
    fn parse_render_round_trip() {
        let mut sp = CondGrid::unconstrained(5);
        sp.row_mut(2).w.as_mut().unwrap().0[31] = Cond::Diff;
        sp.row_mut(0).a.0[7] = Cond::U;
        let text = sp.render();
        let parsed = CondGrid::parse(&text).unwrap();
        assert_eq!(parsed, sp);
        assert_eq!(parsed.render(), text);
    }

    #[test]
    fn parse_accepts_comments_and_dot_words() {
        let text = "# header\n -4: . . .\n -3: . . .\n -2: . . .\n -1: . . .\n  0: . . ????????????????????????????????\n";
        let g = CondGrid::parse(text).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.row(0).a, CondWord::any());
    }

    #[test]
    fn parse_errors() {
        // 31-symbol word
        let bad = format!(" -4: {} . .\n", "-".repeat(31));
        assert!(CondGrid::parse(&bad).is_err());
        // missing row -2
        let text = " -4: . . .\n -3: . . .\n -1: . . .\n  0: . . .\n";
        assert!(CondGrid::parse(text).is_err());
        // W word on a chaining-value row
        let text = format!(" -4: . . {}\n", "-".repeat(32));
        assert!(CondGrid::parse(&text).is_err());
    }

    #[test]
    fn drop_rows_behaviour() {
        let sp = CondGrid::unconstrained(21);
        assert_eq!(sp.drop_rows(0).unwrap(), sp);
        assert_eq!(sp.drop_rows(3).unwrap().n(), 18);
        assert!(sp.drop_rows(25).is_err());
    }

    #[test]
    fn characteristic_from_traces_refines_unconstrained() {
        let cv = ChainingValue::from_fips(IV);
        let m1 = MessageBlock([3; 16]);
        let mut m2 = m1;
        m2.0[5] ^= 0x80;
        let (_, t1) = compress_trace(&cv, &m1, 12);
        let (_, t2) = compress_trace(&cv, &m2, 12);
        let ch = CondGrid::from_traces(&t1, &t2);
        assert!(ch.refines(&CondGrid::unconstrained(12)));
        assert!(ch.forces_message_difference());
        // and a concrete pair admits its own characteristic
        assert!(ch.admits(&cv, &m1, &m2));
        let mut m3 = m1;
        m3.0[0] ^= 1;
        assert!(!ch.admits(&cv, &m1, &m3));
    }
}
