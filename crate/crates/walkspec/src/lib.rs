//! Exact and arbitrary-precision analysis of return-probability spectra of
//! finitely supported random walks on the integers.
//!
//! A walk is described by its *shape*: the Laurent polynomial
//! `chi(t) = sum_k kappa_k t^k` whose coefficients are the (rational) step
//! probabilities.  The *spectrum* is the sequence `I_1, I_2, ...` of return
//! probabilities, `I_n = Pr[X_1 + ... + X_n = 0]`, i.e. the constant
//! coefficient of `chi(t)^n`.
//!
//! The crate provides:
//!
//! - [`walk`]: exact shapes, moments, and the spectrum-preserving
//!   transformations (reflection, reindexing, rescaling at roots of
//!   `chi(lambda) = 1`).
//! - [`spectrum`]: exact spectra by Laurent convolution, isospectrality
//!   tests, Monte Carlo estimators, and the `U(1)` invariant-dimension
//!   counts available for rational shapes.
//! - [`asymptotics`]: the Laplace-method expansion of
//!   `L(s) = e^{-s} sum_n I_n s^n / n!`, with the coefficients `A_l`
//!   computed symbolically as polynomials in normalized moments, plus
//!   high-precision evaluation of `L` and of the real-axis integral
//!   `Ltilde`.
//! - [`puiseux`]: a truncated Puiseux-series engine (roots, Lagrange
//!   inversion, composition) and the branch functions `alpha`, `gamma`
//!   attached to the two real inverse branches of `u = chi(t) - 1`.
//! - [`reconstruct`]: inverse algorithms recovering the shape from spectral
//!   or series data, and a classifier reporting which uniqueness guarantee
//!   applies to a given pair `(e, f)`.
//! - [`moment_map`]: experiments on the polynomial map
//!   `(I_1, ..., I_N)` over the affine space of mean-zero coefficient
//!   vectors: sampling, exact Jacobians, Morse-type certificates, and
//!   brute-force isospectrality searches.
//! - [`special`]: independent high-precision evaluations (Bessel `I_0`,
//!   `K_0`, the Euler-Mascheroni constant) used as cross-checks.

pub mod asymptotics;
pub mod moment_map;
pub mod puiseux;
pub mod quadrature;
pub mod ratpoly;
pub mod real;
pub mod reconstruct;
pub mod special;
pub mod spectrum;
pub mod symbolic;
pub mod walk;

pub use real::{Ctx, Real};
pub use walk::{Rational, WalkShape};
