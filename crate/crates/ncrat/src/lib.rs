//! Noncommutative rational functions: regularity, stable boundedness and
//! global positivity.
//!
//! The crate decides these properties for rational expressions in freely
//! noncommuting self-adjoint variables by
//!
//! 1. parsing expressions and evaluating them on matrix tuples ([`ncexpr`]),
//! 2. constructing linear pencil realizations `r = c* L(x)^{-1} b` and
//!    reducing them to minimal size ([`realization`]),
//! 3. classifying pencils as stably elliptic / elliptic / not elliptic with a
//!    semidefinite-programming recursion that emits machine-checkable
//!    certificates or singular-point witnesses ([`ellipticity`], [`sdp`]),
//! 4. certifying global positivity through sums of hermitian squares and
//!    extracting Moore-Penrose counterexamples when certification fails
//!    ([`positivity`]).
//!
//! A command line front end lives in the `ncrat` binary; see [`cli`].

pub mod cli;
pub mod ellipticity;
mod jsonio;
mod error;
pub mod linalg;
pub mod ncexpr;
pub mod pencil;
pub mod positivity;
pub mod realization;
pub mod regular;
pub mod sdp;

pub use error::{Error, Result};
