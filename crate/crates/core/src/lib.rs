//! Exact oracles and asymptotic expansions for integer random walks killed
//! when they leave the positive half-line.
//!
//! A mean-zero, span-1 integer walk `S_n` started at zero is killed at the
//! first time `τ = inf{n ≥ 1 : S_n ≤ 0}` (strict barrier) or
//! `τ̄ = inf{n ≥ 1 : S_n < 0}` (weak barrier). For normal deviations
//! (`x` of order `σ√n`) the local survival probability admits the expansion
//!
//! ```text
//! P(S_n = x, τ > n) ≈ e^{-t²/2} Σ_{ν=2}^{r+1} P_ν(t) / n^{ν/2},   t = x / (σ√n)
//! ```
//!
//! with polynomials `P_ν` of degree `3ν − 5`. This crate computes those
//! polynomials and everything needed to check them:
//!
//! * [`increments`] validates the step distribution and computes moments
//!   and cumulants exactly.
//! * [`oracle`] runs the exact forward dynamic program for the free and the
//!   killed walk, in rational or `f64` arithmetic.
//! * [`extrapolation`] fits power-law tails to recover limits such as
//!   `θ₀ = lim k^{3/2} P(τ = k)`.
//! * [`constants`] produces `θ₀`, `θ₁`, the overshoot coefficients
//!   `b_ℓ^{(h)}` and the harmonic function `U₁`.
//! * [`edgeworth`] holds the local CLT machinery (Hermite polynomials,
//!   the `q̂_ν` polynomials and the re-indexed coefficients `a_{q,j}`).
//! * [`laurent`] has exact Laurent polynomials, the `γ_{q,j,ℓ}` numbers
//!   and the functions `Q_{j,ℓ,m}`.
//! * [`expansion`] assembles `Q_η`, returns `P_ν = −2 Q_ν` and evaluates
//!   the truncated series.
//! * [`integral`] checks the closed-form Euler-type integral behind the
//!   convolution asymptotics by adaptive quadrature.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod constants;
pub mod edgeworth;
pub mod error;
pub mod expansion;
pub mod extrapolation;
pub mod increments;
pub mod integral;
pub mod laurent;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
pub use increments::{ArithmeticMode, IncrementDistribution, MomentVector};
pub use oracle::BarrierKind;
pub use scalar::Scalar;
