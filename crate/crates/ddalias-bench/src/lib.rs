//! Shared inputs for the benchmarks.

use ddalias::gen::{generate, GenConfig};
use ddalias::ProgramIR;

/// Statement counts of the large programs.
pub const LARGE_SIZES: &[usize] = &[100, 300, 1000];

/// Statement counts of the dense programs, which grow much faster.
pub const DENSE_SIZES: &[usize] = &[100, 300];

/// A large program with five virtual calls and the given statement count.
pub fn large(statements: usize, seed: u64) -> ProgramIR {
    generate(&GenConfig::large(statements, 5), seed)
}

/// A single region where every statement may touch every variable.
pub fn dense(statements: usize, seed: u64) -> ProgramIR {
    generate(&GenConfig::dense(statements, 5), seed)
}
