//! Alternating second-order-cone design of the power spectra.
//!
//! [`problem`] is a small modelling layer, [`solver`] a self-contained
//! interior-point method for it, [`design`] builds the per-block
//! subproblems, and [`alternate`] drives the outer loop.

pub mod alternate;
pub mod design;
pub mod problem;
pub mod solver;

pub use alternate::{alternate_optimize, alternate_optimize_from, finalize_design, AlternateOptions, AlternateOutcome, SurrogateState};
pub use design::{amgm_surrogate, build_product_tree, build_product_tree_scaled, build_subproblem, update_phi, FreeBlock, Subproblem, PHI_FLOOR};
pub use problem::{Affine, ConicProblem, Sense, Var};
pub use solver::{solve_conic, ConicSolution, ConicSolver, InteriorPointSolver, SolveStatus};
