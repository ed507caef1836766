//! Exact computational workbench for the algebra of finite-type invariants
//! of rational homology spheres: Jacobi diagram spaces modulo AS/IHX,
//! augmented diagram spaces, linking forms on finite abelian groups,
//! first-homology gluing calculus, bracket (alternating-sum) calculus, and
//! the graded dual-basis / Hopf machinery tying them together.
//!
//! All arithmetic is exact (arbitrary-precision integers and rationals).
//! Every public value is immutable after construction and every operation is
//! a pure function, so the whole crate is safe to use from concurrent
//! contexts without synchronization.

pub mod augmented;
pub mod bracket;
pub mod homology;
pub mod hopf;
pub mod jacobi;
pub mod linking;
pub mod matrix;
