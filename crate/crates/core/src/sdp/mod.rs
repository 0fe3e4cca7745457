//! Semidefinite programs over block-diagonal Hermitian variables and an
//! interior-point solver for them.

mod problem;
mod solver;

pub use problem::{BlockMatrix, BlockStructure, Feasibility, SdpProblem, Side};
pub use solver::{solve, SdpOptions, SdpSolution, SolveStatus};
