//! Hilbert metric geometry on properly convex domains.
//!
//! The crate is organized around a small set of value types: projective
//! points and maps ([`projective`]), properly convex domains and their
//! faces ([`domain`]), the Hilbert distance and derived constructions
//! ([`metric`]), the closed-form geometry of the open simplex
//! ([`simplex`]), group actions with translation lengths and minimal
//! sets ([`action`]), and the detection of invariant flats for commuting
//! families ([`flat`]). Scene files, reports, and the property suite used
//! by the CLI live in [`scene`], [`report`], and [`verify`].

pub mod action;
pub mod domain;
pub mod error;
pub mod feasibility;
pub mod flat;
pub mod metric;
pub mod projective;
pub mod report;
pub mod sampling;
pub mod scene;
pub mod simplex;
pub mod tol;
pub mod verify;

pub use error::CoreError;
pub use projective::{EndomorphismClass, ProjectiveMap, ProjectivePoint};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
