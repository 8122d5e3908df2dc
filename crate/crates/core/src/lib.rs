//! SAT-based semi-free-start collision search for step-reduced SHA-256.
//!
//! The crate contains a bit-exact reference compression function, the
//! differential-condition calculus and starting-point files, a CNF encoder
//! for the dual-instance collision problem, a CDCL solver with an external
//! propagator interface, bitsliced and wordwise difference-propagation
//! engines, a two-bit-condition inconsistency detector, and the search
//! driver used by the command-line tool.



pub mod bitslice;
pub mod bridge;
pub mod cnf;
pub mod cond;
pub mod encoder;
pub mod error;

pub mod lru;
pub mod path;

pub mod search;
pub mod sha256;
pub mod solver;
pub mod twobit;
pub mod wordwise;
pub mod tables;



pub use cnf::{CnfInstance, Inst, Lit, Role, Var, VarKey, VarMap};
pub use cond::{Cond, CondWord};
pub use encoder::{Encoded, Encoder};
pub use solver::{NullPropagator, Propagator, SolveStatus, Solver, SolverConfig, Stats};
pub use error::{ParseError, SolveError};
pub use path::{Characteristic, CondGrid, StartingPoint};
pub use sha256::{ChainingValue, MessageBlock, StateTrace};

