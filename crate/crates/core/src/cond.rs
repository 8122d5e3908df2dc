//! Differential conditions on a bit pair (x, x') across the two hash
//! instances, and 32-bit condition words.
//!
//! A condition is a nonempty subset of the four possible values of (x, x'),
//! restricted to the seven subsets that have a symbol:
//!
//! ```text
//! (x,x')   0  u  n  1  x  -  ?
//! (0,0)    +              +  +
//! (1,0)       +        +     +
//! (0,1)          +     +     +
//! (1,1)             +     +  +
//! ```

use std::fmt;

use crate::error::ParseError;

/// Mask bit for each (x, x') pair: bit 0 = (0,0), bit 1 = (1,0),
/// bit 2 = (0,1), bit 3 = (1,1).
#[inline]
pub fn pair_bit(x: bool, x2: bool) -> u8 {
    1 << ((x as u8) | ((x2 as u8) << 1))
}

/// One differential condition from the seven-symbol alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cond {
    /// `?`: unconstrained.
    Any,
    /// `-`: x = x'.
    Same,
    /// `x`: x != x'.
    Diff,
    /// `0`: x = x' = 0.
    Zero,
    /// `u`: (x, x') = (1, 0).
    U,
    /// `n`: (x, x') = (0, 1).
    N,
    /// `1`: x = x' = 1.
    One,
}

pub const ALL_CONDS: [Cond; 7] =
    [Cond::Any, Cond::Same, Cond::Diff, Cond::Zero, Cond::U, Cond::N, Cond::One];

impl Cond {
    /// The allowed-set as a 4-bit mask.
    #[inline]
    pub fn mask(self) -> u8 {
        match self {
            Cond::Zero => 0b0001,
            Cond::U => 0b0010,
            Cond::N => 0b0100,
            Cond::One => 0b1000,
            Cond::Diff => 0b0110,
            Cond::Same => 0b1001,
            Cond::Any => 0b1111,
        }
    }

    /// The symbol for exactly this allowed-set, if one exists.
    pub fn from_mask(mask: u8) -> Option<Cond> {
        ALL_CONDS.iter().copied().find(|c| c.mask() == mask)
    }

    /// The tightest symbol whose allowed-set contains `mask`. Masks that are
    /// not one of the seven sets close upward ('?' in the worst case).
    /// Returns None for the empty mask (a contradiction).
    pub fn tightest_superset(mask: u8) -> Option<Cond> {
        if mask == 0 || mask > 0b1111 {
            return None;
        }
        if let Some(c) = Cond::from_mask(mask) {
            return Some(c);
        }
        Some(Cond::Any)
    }

    pub fn symbol(self) -> char {
        match self {
            Cond::Any => '?',
            Cond::Same => '-',
            Cond::Diff => 'x',
            Cond::Zero => '0',
            Cond::U => 'u',
            Cond::N => 'n',
            Cond::One => '1',
        }
    }

    pub fn from_symbol(c: char) -> Option<Cond> {
        match c {
            '?' => Some(Cond::Any),
            '-' => Some(Cond::Same),
            'x' => Some(Cond::Diff),
            '0' => Some(Cond::Zero),
            'u' => Some(Cond::U),
            'n' => Some(Cond::N),
            '1' => Some(Cond::One),
            _ => None,
        }
    }

    #[inline]
    pub fn allows(self, x: bool, x2: bool) -> bool {
        self.mask() & pair_bit(x, x2) != 0
    }

    /// Set intersection; None when the result is empty. The intersection of
    /// two symbols is always itself a symbol (checked exhaustively in tests).
    pub fn intersect(self, other: Cond) -> Option<Cond> {
        let m = self.mask() & other.mask();
        if m == 0 {
            None
        } else {
            Some(Cond::from_mask(m).expect("closed under intersection"))
        }
    }

    /// True when the pair value is fully determined.
    #[inline]
    pub fn is_concrete(self) -> bool {
        self.mask().count_ones() == 1
    }

    /// True when x - x' is the same for every allowed pair, i.e. the
    /// contribution to a modular difference is known.
    #[inline]
    pub fn has_known_diff(self) -> bool {
        !matches!(self, Cond::Any | Cond::Diff)
    }

    /// x - x' in {-1, 0, 1} when known.
    #[inline]
    pub fn signed_diff(self) -> Option<i64> {
        match self {
            Cond::Zero | Cond::One | Cond::Same => Some(0),
            Cond::U => Some(1),
            Cond::N => Some(-1),
            Cond::Any | Cond::Diff => None,
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Differential conditions of a 32-bit word pair; index 0 is the least
/// significant bit. Rendered as [c31 c30 ... c0], most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CondWord(pub [Cond; 32]);

impl CondWord {
    pub fn all(c: Cond) -> Self {
        CondWord([c; 32])
    }

    pub fn any() -> Self {
        Self::all(Cond::Any)
    }

    pub fn same() -> Self {
        Self::all(Cond::Same)
    }

    /// Conditions that exactly describe a concrete word pair.
    pub fn from_pair(w: u32, w2: u32) -> Self {
        let mut conds = [Cond::Same; 32];
        for (bit, c) in conds.iter_mut().enumerate() {
            let x = (w >> bit) & 1 == 1;
            let x2 = (w2 >> bit) & 1 == 1;
            *c = match (x, x2) {
                (false, false) | (true, true) => Cond::Same,
                (true, false) => Cond::U,
                (false, true) => Cond::N,
            };
        }
        CondWord(conds)
    }

    pub fn allows_pair(&self, w: u32, w2: u32) -> bool {
        (0..32).all(|bit| self.0[bit].allows((w >> bit) & 1 == 1, (w2 >> bit) & 1 == 1))
    }

    /// Pointwise refinement check: every bit's allowed-set is a subset.
    pub fn refines(&self, coarser: &CondWord) -> bool {
        self.0
            .iter()
            .zip(coarser.0.iter())
            .all(|(a, b)| a.mask() & b.mask() == a.mask())
    }

    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let conds = parse_conds(s)?;
        if conds.len() != 32 {
            return Err(ParseError::Other(format!(
                "condition word must have 32 symbols, got {}",
                conds.len()
            )));
        }
        let mut arr = [Cond::Any; 32];
        arr.copy_from_slice(&conds);
        Ok(CondWord(arr))
    }

    pub fn render(&self) -> String {
        self.0.iter().rev().map(|c| c.symbol()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Cond> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for CondWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Parses a condition string (most significant symbol first) of any width;
/// used for the fixed 32-bit words and for narrow test vectors.
pub fn parse_conds(s: &str) -> Result<Vec<Cond>, ParseError> {
    let mut out = Vec::with_capacity(s.len());
    for c in s.chars().rev() {
        match Cond::from_symbol(c) {
            Some(cond) => out.push(cond),
            None => return Err(ParseError::Other(format!("unknown condition symbol {c:?}"))),
        }
    }
    Ok(out)
}

/// Renders a condition slice (index 0 = LSB) most significant first.
pub fn render_conds(conds: &[Cond]) -> String {
    conds.iter().rev().map(|c| c.symbol()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_masks_match() {
        // One '+' row per allowed pair, exactly as published.
        assert_eq!(Cond::Zero.mask(), pair_bit(false, false));
        assert_eq!(Cond::U.mask(), pair_bit(true, false));
        assert_eq!(Cond::N.mask(), pair_bit(false, true));
        assert_eq!(Cond::One.mask(), pair_bit(true, true));
        assert_eq!(Cond::Diff.mask(), pair_bit(true, false) | pair_bit(false, true));
        assert_eq!(Cond::Same.mask(), pair_bit(false, false) | pair_bit(true, true));
        assert_eq!(Cond::Any.mask(), 0b1111);
    }

    #[test]
    fn symbol_set_bijection() {
        for c in ALL_CONDS {
            assert_eq!(Cond::from_mask(c.mask()), Some(c));
            assert_eq!(Cond::from_symbol(c.symbol()), Some(c));
        }
        // Exactly 9 of the 16 subsets have no symbol.
        let undefined = (0u8..16).filter(|m| Cond::from_mask(*m).is_none()).count();
        assert_eq!(undefined, 9);
    }

    #[test]
    fn intersection_lattice() {
        for a in ALL_CONDS {
            assert_eq!(a.intersect(a), Some(a), "idempotent");
            assert_eq!(Cond::Any.intersect(a), Some(a), "? is identity");
            for b in ALL_CONDS {
                assert_eq!(a.intersect(b), b.intersect(a), "commutative");
                // Closure: a nonempty intersection is one of the 7 symbols.
                let m = a.mask() & b.mask();
                if m != 0 {
                    assert!(Cond::from_mask(m).is_some());
                }
                for c in ALL_CONDS {
                    let left = a.intersect(b).and_then(|ab| ab.intersect(c));
                    let right = b.intersect(c).and_then(|bc| a.intersect(bc));
                    assert_eq!(left, right, "associative");
                }
            }
        }
    }

    #[test]
    fn specific_intersections() {
        assert_eq!(Cond::Any.intersect(Cond::Diff), Some(Cond::Diff));
        assert_eq!(Cond::Diff.intersect(Cond::U), Some(Cond::U));
        assert_eq!(Cond::Same.intersect(Cond::Diff), None);
        assert_eq!(Cond::Same.intersect(Cond::Zero), Some(Cond::Zero));
    }

    #[test]
    fn upward_closure() {
        assert_eq!(Cond::tightest_superset(0b0001), Some(Cond::Zero));
        assert_eq!(Cond::tightest_superset(0b1001), Some(Cond::Same));
        // Unrepresentable sets close to '?'.
        assert_eq!(Cond::tightest_superset(0b0011), Some(Cond::Any));
        assert_eq!(Cond::tightest_superset(0b0111), Some(Cond::Any));
        assert_eq!(Cond::tightest_superset(0), None);
    }

    #[test]
    fn word_render_order() {
        let mut w = CondWord::same();
        w.0[0] = Cond::U; // least significant bit renders last
        let s = w.render();
        assert_eq!(s.len(), 32);
        assert!(s.ends_with('u'));
        assert_eq!(CondWord::parse(&s).unwrap(), w);
    }

    #[test]
    fn word_pair_round_trip() {
        let w = CondWord::from_pair(0b1010, 0b0110);
        assert_eq!(w.0[0], Cond::Same);
        assert_eq!(w.0[1], Cond::Same);
        assert_eq!(w.0[2], Cond::N);
        assert_eq!(w.0[3], Cond::U);
        assert!(w.allows_pair(0b1010, 0b0110));
        assert!(!w.allows_pair(0b1010, 0b0111));
    }

    #[test]
    fn parse_rejects_bad_width_and_symbols() {
        assert!(CondWord::parse(&"-".repeat(31)).is_err());
        assert!(CondWord::parse(&"-".repeat(33)).is_err());
        assert!(CondWord::parse(&format!("{}y", "-".repeat(31))).is_err());
    }
}
