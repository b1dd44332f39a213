//! Toric resolutions of cyclic quotient singularities and the Ekedahl
//! invariants of the discrete Heisenberg groups.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] — exact integer linear algebra (Hermite/Smith forms,
//!   kernels, solves);
//! * [`fan`] — polyhedral fans, cyclic-quotient cones, stellar subdivision
//!   and resolution of singularities;
//! * [`cohomology`] — integral cohomology of smooth complete toric
//!   varieties (shelling bases, intersection numbers, Gysin maps) and the
//!   integral cohomology ring of `(Z/p)^2`;
//! * [`spectral`] — the exceptional-divisor spectral sequence of a
//!   resolution and the Cartan–Leray sequence of a free quotient;
//! * [`motivic`] — formal classes of varieties, the cohomological maps
//!   into the group of abelian-group classes, and the Ekedahl-invariant
//!   recurrence solver;
//! * [`heisenberg`] — the Heisenberg group `H_p`, its projective action on
//!   `P^{p-1}`, the singular-locus analysis and the end-to-end invariant
//!   report;
//! * [`cli`] — file formats and the command-line driver.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod cli;
pub mod cohomology;
pub mod fan;
pub mod heisenberg;
pub mod lattice;
pub mod motivic;
pub mod spectral;

pub use fan::{Cone, CyclicQuotientType, Fan, ResolutionRecord};
pub use lattice::{IntMatrix, IntVector, IntegerLinearMap, SmithForm};
