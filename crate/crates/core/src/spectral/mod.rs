//! Norms, spectral radii and the two families of joint spectral radius estimates.

pub mod eigen;
pub mod jsr;
pub mod norms;
pub mod rsr;
pub mod verdict;

pub use eigen::{eigenvalues, spectral_radius};
pub use jsr::{jsr_branch_and_bound, BoundsReport, BranchAndBoundOptions};
pub use norms::{matrix_norm, MatrixNorm, NormRegistry, NormValue};
pub use rsr::{restricted_norm, RsrMethod, RsrRegistry};
pub use verdict::{divergence_check, regularity_report, RegularityVerdict, ReportOptions};
