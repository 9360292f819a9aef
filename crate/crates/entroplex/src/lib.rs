//! Exact-rational converse bounds for coded caching.
//!
//! The crate builds symmetry-reduced entropy linear programs for the
//! `(N files, K users)` caching problem, solves them with an exact rational
//! simplex that produces dual certificates, turns sparse certificates into
//! human-checkable proof tables, enumerates corner points of the memory-rate
//! lower hull, probes which joint entropy values are forced at a corner, and
//! verifies explicit linear coded-caching schemes over prime fields.
//!
//! All arithmetic that affects results is exact (`num::BigRational`);
//! floating point is used only as a screening heuristic inside the simplex
//! pricing step, with every accepted pivot re-verified exactly.

pub mod codes;
pub mod lpbuild;
pub mod model;
pub mod prooftab;
pub mod ratsolve;
pub mod symmetry;
pub mod tradeoff;

pub use model::{DemandFilter, DemandType, ProblemInstance, RandomVar, VarSet};
pub use ratsolve::Rational;
