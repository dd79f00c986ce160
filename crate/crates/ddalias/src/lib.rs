//! Demand-driven flow-sensitive alias analysis for a small object-oriented
//! three-address IR, with an exhaustive baseline, verification oracles
//! and a virtual call resolution client.

pub mod absdomain;
pub mod devirt;
pub mod gen;
pub mod ir;
pub mod oracle;
pub mod solver;
pub mod transfer;

pub use absdomain::{AbstractName, Abstraction, AliasRel, DemandSet, NameId, NameTable};
pub use ir::{parse_program, AccessExpr, IrError, NodeId, ProgramIR, StmtKind};
pub use solver::{
    solve, solve_ex, solve_with, NodeState, SolveOptions, SolveResult, WorklistOrder,
};
pub use transfer::{AnalysisError, Mutation, Variant, VariantConfig};
