//! Rare-event analytics for default-driven portfolio losses.
//!
//! A portfolio of n obligors accrues normalized losses L_n(t)/n on the
//! integer epochs t = 1..N: each obligor defaults at a random epoch (or
//! never) and then contributes a random amount. This crate provides the
//! machinery to quantify rare excursions of that loss path:
//!
//! - [`law`] — loss-amount families behind a common CGF trait, selected by
//!   name at run time, plus the window-thinned composite variables;
//! - [`default_times`] — the (possibly defective) default-epoch law;
//! - [`legendre`] — convex conjugates, tilt solving, perspective values;
//! - [`path_rate`] / [`multiclass`] — exponential decay rates of whole
//!   path events via convex minimization over default-weight profiles;
//! - [`asymptotics`] — dominating epochs/windows and sharp prefactor
//!   estimates for barrier and increment crossings;
//! - [`oracle`] — exact finite-n crossing probabilities for lattice
//!   amount laws (ground truth for everything else);
//! - [`mc`] — reproducible Monte Carlo, plain and exponentially tilted.

pub mod asymptotics;
pub mod barrier;
pub mod default_times;
pub mod error;
pub mod law;
pub mod legendre;
pub mod mc;
pub mod multiclass;
pub mod oracle;
pub mod path_rate;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
