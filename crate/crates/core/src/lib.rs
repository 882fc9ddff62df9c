//! Verification of hierarchical key assignment schemes modelled as explicit
//! finite joint distributions over per-class keys and private information.
//!
//! The crate checks correctness, KI-security, SKI-security and key
//! independence of a scheme, generates fixture schemes, and replays the
//! KI/SKI equivalence argument on concrete corpora.

pub mod check;
pub mod cli;
pub mod expr;
pub mod gen;
pub mod graph;
pub mod harness;
pub mod info;
pub mod prng;
pub mod rational;
pub mod scheme;

pub use graph::{AccessGraph, ClassId, ClassSequence, GraphError};
pub use info::{InfoError, JointDistribution, Value, VarId, VarKind};
pub use prng::SplitMix64;
pub use rational::Rational;
pub use check::{CheckError, CheckKind, CheckReport, Witness};
pub use expr::{parse_entropy_expr, EntropyExpr, ExprError};
pub use gen::{GenError, GenKind, GenSpec};
pub use scheme::{CoalitionQuery, Scheme, SchemeError};
