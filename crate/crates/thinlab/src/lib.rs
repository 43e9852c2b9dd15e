//! Binomial thinning of discrete probability distributions (the
//! photon-number-diagonal restriction of the quantum-limited attenuator)
//! together with the entropy functionals that govern it and a solver for
//! the entropy-constrained extremal distributions.
//!
//! The crate is organized around a few facts about thinning `T_λ`:
//!
//! * thermal (geometric) inputs are fixed up to rescaled energy,
//!   `T_λ(geom(E)) = geom(λE)`, so their output entropy is `h(λE)`;
//! * among all inputs of entropy S, that value `h(λ·h⁻¹(S))` is the
//!   minimum output entropy, strictly above the entropy-power bound
//!   `ln(λ(e^S−1)+1)` except at the edges;
//! * along the flow `λ = e^{−t}` entropy decreases at rate
//!   `F(p) = Σ n pₙ ln(p_{n−1}/pₙ)`, and `−F(p) ≥ f(H(p))` with equality
//!   exactly on the geometric family.
//!
//! [`dist`] holds validated distributions and order-theoretic helpers,
//! [`entropy`] the scalar functions, [`attenuator`] the channel and its
//! flow, [`extremal`] the constrained maximizer of `F`, [`sample`] seeded
//! input generators, and [`report`] the sweep drivers the CLI exposes.

// negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod attenuator;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod extremal;
pub mod report;
pub mod sample;

pub use dist::{ProbVec, SupportProfile};
pub use error::{Error, Result};
