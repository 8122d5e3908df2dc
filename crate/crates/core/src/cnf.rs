//! Literals, clauses, the variable map for the two-instance encoding, and
//! DIMACS import/export.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use crate::error::ParseError;

/// A propositional variable, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }
}

/// A literal: variable plus polarity, packed as var*2 + negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(pub u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit((var.0 << 1) | (!positive) as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// From a DIMACS-style nonzero integer.
    pub fn from_dimacs(x: i32) -> Lit {
        debug_assert!(x != 0);
        Lit::new(Var((x.unsigned_abs()) - 1), x > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = (self.var().0 + 1) as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Which hash instance a variable belongs to, or the difference layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Inst {
    First,
    Second,
    Delta,
}

impl Inst {
    pub fn tag(self) -> &'static str {
        match self {
            Inst::First => "1",
            Inst::Second => "2",
            Inst::Delta => "d",
        }
    }
}

/// The four modular additions of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AdderSite {
    /// T_i = E_{i-4} + S1 + IF + K_i + W_i
    T,
    /// E_i = A_{i-4} + T_i
    E,
    /// A_i = T_i + S0 + MAJ
    A,
    /// W_i = s1(W_{i-2}) + W_{i-7} + s0(W_{i-15}) + W_{i-16}, for i >= 16
    WExpand,
}

pub const ADDER_SITES: [AdderSite; 4] = [AdderSite::T, AdderSite::E, AdderSite::A, AdderSite::WExpand];

impl AdderSite {
    pub fn tag(self) -> &'static str {
        match self {
            AdderSite::T => "t",
            AdderSite::E => "e",
            AdderSite::A => "a",
            AdderSite::WExpand => "wx",
        }
    }
}

/// What a solver variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// State word A_i (chaining value for i in -4..0).
    A,
    /// State word E_i.
    E,
    /// Schedule word W_i.
    W,
    /// Auxiliary word T_i.
    T,
    /// Round constant K_i (shared between instances).
    K,
    /// Output of S0(A_{i-1}).
    BigSigma0,
    /// Output of S1(E_{i-1}).
    BigSigma1,
    /// Output of s0(W_{i-15}) in the expansion.
    SmallSigma0,
    /// Output of s1(W_{i-2}) in the expansion.
    SmallSigma1,
    /// Output of IF(E_{i-1}, E_{i-2}, E_{i-3}).
    IfOut,
    /// Output of MAJ(A_{i-1}, A_{i-2}, A_{i-3}).
    MajOut,
    /// Low carry out of a column (weight 2 into the next column).
    CarryLo(AdderSite),
    /// High carry out of a column (weight 4 into the column after next).
    CarryHi(AdderSite),
}

impl Role {
    pub fn tag(self) -> String {
        match self {
            Role::A => "a".into(),
            Role::E => "e".into(),
            Role::W => "w".into(),
            Role::T => "t".into(),
            Role::K => "k".into(),
            Role::BigSigma0 => "bs0".into(),
            Role::BigSigma1 => "bs1".into(),
            Role::SmallSigma0 => "ss0".into(),
            Role::SmallSigma1 => "ss1".into(),
            Role::IfOut => "if".into(),
            Role::MajOut => "maj".into(),
            Role::CarryLo(s) => format!("clo:{}", s.tag()),
            Role::CarryHi(s) => format!("chi:{}", s.tag()),
        }
    }

    /// Primary variables are the A/E/W state bits; everything else is
    /// auxiliary.
    pub fn is_primary(self) -> bool {
        matches!(self, Role::A | Role::E | Role::W)
    }
}

/// Identifies one encoded bit: (role, step, bit, instance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarKey {
    pub role: Role,
    pub step: i16,
    pub bit: u8,
    pub inst: Inst,
}

impl VarKey {
    pub fn new(role: Role, step: i16, bit: u8, inst: Inst) -> Self {
        VarKey { role, step, bit, inst }
    }
}

/// Bidirectional map between encoded bits and solver variables. Chaining
/// value words and round constants are shared between instances, so two keys
/// may map to one variable; the reverse map keeps the first key registered.
#[derive(Debug, Clone, Default)]
pub struct VarMap {
    fwd: HashMap<VarKey, Var>,
    rev: Vec<VarKey>,
    next: u32,
}

impl VarMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> u32 {
        self.next
    }

    /// Allocates a fresh variable for `key`.
    pub fn fresh(&mut self, key: VarKey) -> Var {
        debug_assert!(!self.fwd.contains_key(&key), "duplicate key {key:?}");
        let v = Var(self.next);
        self.next += 1;
        self.fwd.insert(key, v);
        self.rev.push(key);
        v
    }

    /// Registers `key` as an alias of an existing variable.
    pub fn alias(&mut self, key: VarKey, var: Var) {
        debug_assert!(!self.fwd.contains_key(&key));
        self.fwd.insert(key, var);
    }

    pub fn get(&self, key: &VarKey) -> Option<Var> {
        self.fwd.get(key).copied()
    }

    pub fn var(&self, role: Role, step: i16, bit: u8, inst: Inst) -> Var {
        let key = VarKey::new(role, step, bit, inst);
        *self
            .fwd
            .get(&key)
            .unwrap_or_else(|| panic!("unmapped variable {key:?}"))
    }

    pub fn key_of(&self, var: Var) -> VarKey {
        self.rev[var.index()]
    }

    pub fn entries(&self) -> impl Iterator<Item = (&VarKey, &Var)> {
        self.fwd.iter()
    }

    /// Sidecar map listing `(role, step, bit, instance) -> var`, one entry
    /// per line, 1-based variable numbers matching the DIMACS output.
    pub fn write_map<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut entries: Vec<(&VarKey, &Var)> = self.fwd.iter().collect();
        entries.sort_by_key(|(k, v)| (v.0, **k));
        for (key, var) in entries {
            writeln!(
                out,
                "{} {} {} {} {}",
                key.role.tag(),
                key.step,
                key.bit,
                key.inst.tag(),
                var.0 + 1
            )?;
        }
        Ok(())
    }
}

/// An immutable clause database plus its variable map.
#[derive(Debug, Clone, Default)]
pub struct CnfInstance {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl CnfInstance {
    pub fn add_clause(&mut self, lits: Vec<Lit>) {
        debug_assert!(!lits.is_empty(), "empty clause at build time");
        debug_assert!(lits.iter().all(|l| l.var().0 < self.num_vars));
        self.clauses.push(lits);
    }

    pub fn unit(&mut self, lit: Lit) {
        self.add_clause(vec![lit]);
    }

    /// True iff the total assignment satisfies every clause.
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.falsified_clause(assignment).is_none()
    }

    /// Index of some clause falsified by the total assignment.
    pub fn falsified_clause(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses.iter().position(|cl| {
            !cl.iter()
                .any(|l| assignment[l.var().index()] == l.is_positive())
        })
    }

    pub fn write_dimacs<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        let mut line = String::new();
        for clause in &self.clauses {
            line.clear();
            for lit in clause {
                line.push_str(&lit.to_dimacs().to_string());
                line.push(' ');
            }
            line.push('0');
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_dimacs(&self) -> String {
        let mut buf = Vec::new();
        self.write_dimacs(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    pub fn parse_dimacs(text: &str) -> Result<CnfInstance, ParseError> {
        let mut num_vars: Option<u32> = None;
        let mut clauses = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(ParseError::Grid { line: lineno + 1, msg: "bad p line".into() });
                }
                num_vars = Some(parts[2].parse().map_err(|_| ParseError::Grid {
                    line: lineno + 1,
                    msg: "bad variable count".into(),
                })?);
                continue;
            }
            for tok in line.split_whitespace() {
                let x: i32 = tok.parse().map_err(|_| ParseError::Grid {
                    line: lineno + 1,
                    msg: format!("bad literal {tok:?}"),
                })?;
                if x == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(Lit::from_dimacs(x));
                }
            }
        }
        let num_vars =
            num_vars.ok_or_else(|| ParseError::Other("missing p cnf header".into()))?;
        Ok(CnfInstance { num_vars, clauses })
    }
}
