//! Reconstruction of harmonic functions on a rectangle from noisy Cauchy data
//! on part of the boundary, and the harmonic-measure map that tells where such
//! a reconstruction can be trusted.

pub mod basis;
pub mod contour;
pub mod error;
pub mod evaluate;
pub mod fdm;
pub mod forward;
pub mod grid;
pub mod harmonic;
pub mod tikhonov;

pub use nalgebra;

pub use basis::{
    assemble_system, build_basis, compute_base_solutions, discrete_norms, BaseSolutionSet, BasisKind, BoundaryBasis,
    DiscreteNorms, DiscreteSystem, RegMode,
};
pub use contour::{marching_squares, LevelContour};
pub use error::{Error, Result};
pub use evaluate::{
    envelope_check, pointwise_error, rate_fit, reliability_summary, spearman, EnvelopeReport, EnvelopeSettings,
    RateFit, ReliabilitySummary,
};
pub use fdm::{
    laplacian_residual, normal_derivative, solve_dirichlet, DiffOrder, DirichletSolver, LinearSolver, ScalarField,
    SolveOptions,
};
pub use forward::{add_noise, trace_cauchy, CauchyData, ExactSolution, NoiseModel};
pub use grid::{boundary_partition, build_grid, BoundaryPartition, GammaQuadrature, Grid2D, Rect, Side};
pub use harmonic::{
    annulus_tau, compute_indicate, rectangle_series_tau, reliable_region, two_constants_bound, IndicateField,
};
pub use tikhonov::{
    minimize, minimize_with_alpha, reconstruct, reconstruct_field, residuals, select_alpha, AlphaRule, LsqBackend,
    Minimizer, ReconstructionResult, Residuals, TikhonovConfig,
};
