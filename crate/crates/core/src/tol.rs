//! All numerical tolerances used by the kernels, in one place.
//!
//! Values are relative unless noted. Operations that accept a
//! [`crate::metric::MetricConfig`] read the runtime-tunable knobs from
//! there; everything else uses these fixed constants.

/// Relative singular-value cutoff for the 4-point collinearity test.
pub const COLLINEARITY_CUTOFF: f64 = 1e-10;

/// Relative singular-value cutoff for rank, kernel, and image of an
/// endomorphism class. Matches the scale of converged limit residuals.
pub const SV_CUTOFF: f64 = 1e-9;

/// Relative boundary classification band around a domain boundary.
pub const BOUNDARY_BAND: f64 = 1e-10;

/// Canonical-representative distance below which two projective points
/// are considered equal.
pub const POINT_EQ: f64 = 1e-9;

/// Quantization step for orbit deduplication of canonical representatives.
pub const ORBIT_QUANT: f64 = 1e-9;

/// Relative residual below which a pairwise commutator counts as scalar.
pub const COMMUTATOR_TOL: f64 = 1e-10;

/// Minimum coordinate value for a positive representative of a point in
/// the open simplex.
pub const POSITIVE_EPS: f64 = 1e-13;

/// Canonical distance below which a vertex counts as fixed by a map.
pub const FIX_RESIDUAL: f64 = 1e-9;

/// Relative tolerance for treating a matrix as diagonal after a
/// simultaneous change of basis.
pub const DIAGONALIZATION_TOL: f64 = 1e-8;

/// Interior margin for the "hull meets the domain" feasibility program.
pub const INTERIOR_MARGIN: f64 = 1e-7;

/// Default slack above the translation length when sampling minimal sets.
pub const MIN_SET_EPS: f64 = 1e-6;

/// Singular-value cutoff for the rank of a lattice of log-eigenvalue
/// vectors, relative to the largest singular value.
pub const LATTICE_RANK_TOL: f64 = 1e-9;

/// Entry magnitude at which orbit words are considered blown up.
pub const ORBIT_BLOWUP: f64 = 1e12;

/// Largest-entry threshold under which a matrix is rejected as zero.
pub const MATRIX_ZERO: f64 = 1e-300;
