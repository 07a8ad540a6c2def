//! Level set regularization for reconstructing a binary source density in
//! the unit square from a single pair of boundary measurements.
//!
//! The forward model is `Δu = χ_D` in `(0, 1)²` with `u = 0` on the
//! boundary; the data are the outward normal derivative `∂u/∂ν`. The
//! unknown set `D` is carried by a level set function `φ` through the
//! smoothed projection `P_ε`, and `φ` is evolved by an explicit scheme whose
//! steps each need three elliptic solves.

pub mod components;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod inversion;
pub mod linalg;
pub mod projection;

pub use elliptic::{Backend, EllipticSolver};
pub use error::{Error, Result};
pub use geometry::{bv_seminorm, curvature_term, velocity_rhs, CurvatureParams};
pub use grid::{laplacian_stencil, neumann_trace, BoundaryTrace, Grid, ScalarField};
pub use inversion::{fit_to_data_beta_alpha, IterationRecord, Reconstruction, ReconstructionConfig, RunOutput, Termination};
pub use projection::{
    project_clamp, project_exp, project_sharp, project_smooth, project_smooth_derivative, signed_distance_init,
    ProjectionParams,
};
