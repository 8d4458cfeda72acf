//! # converse-kit
//!
//! Lower bounds on the minimax risk of estimation problems, obtained by
//! reducing estimation to M-ary hypothesis testing and bounding the error of
//! the optimal decoder through a binary hypothesis test against an auxiliary
//! output law Q:
//!
//! ```text
//! eps_M >= 1 - (1+λ) (λM)^{-λ/(1+λ)} [ (1/M) Σ_i exp(λ D_{1+λ}(P_i || Q)) ]^{1/(1+λ)}
//! ```
//!
//! Unlike Fano's inequality, this bound tends to one (a strong converse) in
//! the regimes studied by [`applications`].
//!
//! ## Layout
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`divergence`] | Rényi, KL, Hellinger, E_γ divergences; κ(λ,t); Bernoulli and Gaussian closed forms |
//! | [`converse`] | the Rényi converse with λ and Q optimisation, Fano, generalised Fano, risk assembly |
//! | [`packing`] | greedy Gilbert–Varshamov codes, random sparse sphere packings, trimming |
//! | [`oracle`] | exact Bayes error by enumeration, density quadrature, randomized suites |
//! | [`applications`] | density estimation, active learning, compressed sensing |
//! | [`report`] | JSON and CSV encodings of reports |

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod converse;
pub mod divergence;
mod error;
pub mod optimize;
pub mod oracle;
pub mod packing;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
