//! Exact-arithmetic laboratory for differential graded Lie algebras.
//!
//! Everything is finite-dimensional and over the rationals: graded spaces,
//! cochain complexes and their cohomology, DG-Lie algebras with the
//! `End`/`Aff`/cone constructions, Thom-Whitney homotopy fibers of morphisms
//! and of commutative squares, Maurer-Cartan theory over local Artin
//! coefficient rings, Cartan homotopies with formal period and Abel-Jacobi
//! data, and the iterated-integral A-infinity machinery tying the two ends
//! together. Identities are verified exactly; there is no floating point.

pub mod artin;
pub mod builtin;
pub mod cartan;
pub mod check;
pub mod commands;
pub mod complex;
pub mod dgla;
pub mod error;
pub mod fixture;
pub mod forms;
pub mod functors;
pub mod graded;
pub mod iterated;
pub mod linalg;
pub mod mc;
pub mod report;
pub mod scalar;
pub mod tw;

pub use error::{Error, Result};
