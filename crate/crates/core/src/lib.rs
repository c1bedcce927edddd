//! Upper-confidence-bound index policies for stochastic bandits with rewards
//! in `[0, 1]`.
//!
//! The kl-UCB index `max{q : d_kl(p, q) <= delta}` has no closed form. This
//! crate replaces it with cheap surrogates:
//!
//! - [`divergences`]: kl-dominated semi-distances with closed-form indices.
//! - [`policies`]: UCB(d) and UCBoost(D), the minimum of several closed-form
//!   indices, plus a bisection kl-UCB reference.
//! - [`kl_approx`]: UCBoost(eps), an eps-accurate kl-UCB approximation built
//!   from a step-function envelope with `O(log(1/eps))` cost.
//! - [`klucb_dual`]: the KL-UCB index for a general finite-support empirical
//!   distribution, solved through a one-dimensional dual.
//! - [`environments`] and [`harness`]: reward models, regret simulation, index
//!   timing and CSV output.
//!
//! ```
//! use ucboost::divergences::UnitScalar;
//! use ucboost::policies::{default_boost_set, ucboost_index};
//!
//! let p = UnitScalar::new(0.5).unwrap();
//! let q = ucboost_index(&default_boost_set(), p, 0.4).unwrap();
//! assert!(q.get() > 0.5 && q.get() < 1.0);
//! ```

pub mod cli;
pub mod divergences;
pub mod environments;
pub mod error;
pub mod harness;
pub mod kl_approx;
pub mod klucb_dual;
pub mod par;
pub mod policies;

pub use divergences::{Divergence, UnitScalar};
pub use error::{Error, Result};
pub use par::Execution;
pub use policies::{PolicyConfig, PolicyKind};
