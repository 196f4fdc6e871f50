//! Classification, reformulation and desk-scale solving of distributionally
//! favorable optimization (DFO) problems.
//!
//! A DFO problem minimizes, over a compact polyhedral decision set, the most
//! favorable expected recourse cost across an ambiguity set of distributions.
//! This crate:
//!
//! * models such problems ([`model`]),
//! * classifies each instance as tractable, representable as a mixed-integer
//!   convex program, provably not so representable, or unknown ([`reform`]),
//! * compiles the representable ones into LP batches or single MILPs with a
//!   provenance ledger per constraint block ([`reform`]),
//! * solves them with an embedded simplex + branch-and-bound engine
//!   ([`milp`]),
//! * and verifies results against independent brute-force oracles
//!   ([`oracle`]).
//!
//! The [`bench`] module reproduces a two-stage resource-allocation study at
//! desk scale, and [`io`] handles the problem/file formats used by the
//! `dfokit` binary.

pub mod bench;
pub mod io;
pub mod linalg;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod reform;
