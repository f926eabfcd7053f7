//! Regularized Dirichlet solver and pull-in continuation.

mod continuation;
mod newton;

pub use continuation::{
    continue_pullin, solve_pullin, Branch, BranchPoint, ContinuationConfig, Fold, PullinSolution, Snapshot,
    SnapshotTrigger,
};
pub use newton::{harmonic_extension, residual_field, solve_dirichlet, DirichletSolution, RegularizedNonlinearity, SolveConfig};
