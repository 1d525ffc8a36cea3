//! Sparse principal component analysis under an ℓ0 budget with strictly
//! orthogonal components.
//!
//! The crate provides three solvers for the sequential problem
//! "maximize `xᵀQx` over unit `x` with at most `p` nonzeros, orthogonal to
//! every earlier component":
//!
//! * [`exact`]: exhaustive support enumeration with a Gram–Schmidt projection
//!   on each support,
//! * [`bnb`]: an ε-optimal best-first branch-and-bound over partially fixed
//!   supports,
//! * [`decomp`]: threshold the covariance, split it into independent blocks
//!   and merge per-block solutions through a candidate pool.
//!
//! [`certify`] re-checks any solution against an independent exhaustive
//! oracle, and [`cli`] wraps everything in the `ortho-spca` binary.

pub mod bnb;
pub mod certify;
pub mod cli;
pub mod decomp;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod synth;

pub use bnb::{lower_bound, solve_kth_bnb, upper_bound, BnbCertificate, KthSolver, SupportBounds};
pub use certify::{
    check_eps_certificate, check_solution, deflation_baseline, exhaustive_optimum, max_pairwise_angle_deviation,
    CertLevel, CertificateReport, Check,
};
pub use decomp::{
    block_diagonalize, connected_components, merge_sorted, predicted_cost, threshold_matrix, threshold_spca,
    BlockStructure, CandidatePool, ThresholdOutput,
};
pub use error::{Result, SpcaError};
pub use exact::{
    reduced_pca_on_support, solve_kth_exact, solve_sequence, solve_sequence_from, ReducedPca, SolveStats, SolverMode,
    SparseComponent, SpcaSolution,
};
pub use linalg::{
    complement_projector, embed, gram_schmidt, restrict, sym_eig_max, IndexSet, MatrixFingerprint, OrthonormalBasis,
    SymMatrix,
};
