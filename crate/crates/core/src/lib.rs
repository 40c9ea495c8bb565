//! Entanglement analysis for a small quantum imperative language.
//!
//! The crate pairs three semantics of the same language:
//!
//! * [`concrete`] — the exact meaning of a program as a trace-decreasing map
//!   on density matrices, plus a pure-branch ensemble evaluator whose mixture
//!   reproduces the density-matrix run and doubles as a separability witness.
//! * [`abstract_domain`] — a static analysis that tracks, per qubit, a basis
//!   flag and a partition of the register over-approximating entanglement.
//! * [`soundness`] — the bridge between the two: the β basis extraction, the
//!   π-separability witness, and an end-to-end checker for the relation
//!   "the concrete output is π-separable and β(ρ) stays below the flags".
//!
//! [`syntax`] holds the AST and the `.qpl` grammar; [`linalg`] the dense
//! complex matrix kernel everything runs on.

pub mod abstract_domain;
pub mod concrete;
pub mod linalg;
pub mod soundness;
pub mod syntax;
