//! Numerical laboratory for steady planar incompressible flows on annular
//! domains: bounded annuli, exteriors of disks, punctured disks, and the
//! punctured plane.
//!
//! The crate builds explicit velocity fields (a named catalog plus parsed
//! expressions), reconstructs stream functions on polar grids, traces
//! streamlines and gradient curves, extracts the vorticity function coupling
//! a stream function to its Laplacian, solves the radial Dirichlet
//! eigenproblems, and audits symmetry: reflection comparisons between level
//! curves, circularity scores, critical-point censuses, and overdetermined
//! boundary conditions.
//!
//! Flows are strategies behind [`flows::FlowModel`], registered by name in
//! [`flows::catalog`] and selected at runtime from code, JSON configs, or the
//! CLI. Scenario checks follow the same pattern in [`scenario`].

pub mod flows;
pub mod geometry;
pub mod interp;
pub mod ode;
pub mod radial;
pub mod scenario;
pub mod stream;
pub mod symmetry;
pub mod trace;

pub use flows::{FieldKind, FieldSpec, FlowModel, VectorField};
pub use geometry::{make_annulus, AnnularDomain, JordanPolygon, Point, PolarGrid};
pub use stream::StreamGrid;
