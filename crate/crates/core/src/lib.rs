//! Nash equilibria of a Cournot duopoly with quartic costs, both in its
//! classical form and under the hyperbolic strategy mixing induced by a
//! two-mode entangling operation of strength `gamma`.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: demand, cost, profits and the strategy-to-quantity map.
//! - [`realroots`]: dense polynomials, closed-form cubics and Sturm-based
//!   real-root isolation.
//! - [`equilibria`]: best responses, full equilibrium enumeration, the
//!   closed-form symmetric equilibrium and the joint-profit optimum.
//! - [`bifurcation`]: sweeps over `gamma` and the count-change thresholds.
//! - [`oracle`]: a slow brute-force equilibrium finder used to cross-check
//!   the enumeration.
//! - [`cli`]: configuration and table serialisation behind the `qcournot`
//!   binary.

pub mod bifurcation;
pub mod cli;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod oracle;
pub mod realroots;

pub use error::{Error, Result};
pub use model::{EntangledGame, ModelParams, ProfitPair, QuantityPair, StrategyPair, GAMMA_MAX};
