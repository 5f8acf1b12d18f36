//! Recursive Fourier sampling (RFS).
//!
//! A depth-`l` tree with `2^n` children per node carries an `n`-bit secret at
//! every node, subject to the promise `g(s_child) = s_parent . x_child (mod 2)`.
//! Only `g` of the leaf secrets is observable, through a query-counted oracle.
//! The goal is `g(s_root)`.
//!
//! This crate provides seeded instances, the classical `n^l`-query solver, a
//! statevector simulation of the exact `2^l`-query quantum recursion, and the
//! interactive proof in which a classical verifier spends `3^l` oracle queries
//! to check a prover's claimed subtree secrets, along with honest and
//! adversarial provers and an experiment harness.

pub mod bits;
pub mod classical;
pub mod error;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod protocol;
pub mod provers;
pub mod quantum;

pub use bits::{g_eval, inner_product, unit_string, BitString, GVariant};
pub use classical::{solve_classical, solve_classical_root, SolveResult};
pub use error::{Result, RfsError};
pub use instance::{CheckMode, InstanceDescriptor, NodePath, PromiseReport, RfsInstance, PRG_ID};
pub use oracle::{CountingOracle, QueryCounts};
