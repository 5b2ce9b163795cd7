//! Numerical toolkit for linear-sieve level-of-distribution computations.
//!
//! The crate is organized around the objects that show up when one pushes
//! the linear sieve past the classical level `x^{1/2}`:
//!
//! * [`special`] — the Buchstab function and the linear sieve functions
//!   `F`, `f`, tabulated as delay-differential solutions, plus Wu's
//!   piecewise savings table.
//! * [`exponents`] — closed-form exponent maps: the unimodal level map
//!   `theta(t)`, its three-variable refinement, the critical interval for
//!   the middle factor, headline levels, and the quintilinear bound-shape
//!   evaluator.
//! * [`factorize`] — membership tests for the well-factorable support
//!   sets, the triple-constraint system in exponent space, and the
//!   criterion/greedy/case-analysis factorization algorithms with a
//!   brute-force oracle.
//! * [`integrals`] — the sieve integrals `I_9..I_21`, the `G`-family and
//!   the Wu savings integral, over a parameter box with ordering
//!   invariants.
//! * [`bound`] — singular series, Hardy–Littlewood main terms, assembly
//!   of the final twin-prime/Goldbach ratios, and a simplex parameter
//!   optimizer.
//! * [`model`] — the exceptional-spectrum exponent model: rule system,
//!   grid fixed point, the maps `M`/`M*`, and the associated recursions.
//!
//! Everything heavy (quasi–Monte Carlo blocks, grid sweeps, batch
//! evaluation) is data-parallel through [`parallel`], which falls back to
//! sequential iteration when the `parallel` feature is disabled.

pub mod bound;
pub mod exponents;
pub mod factorize;
pub mod integrals;
pub mod model;
pub mod parallel;
pub mod quad;
pub mod special;

pub use exponents::ExponentConfig;
pub use integrals::{QuadratureSpec, SieveParams};
