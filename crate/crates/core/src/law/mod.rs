//! Loss-amount laws and cumulant-generating-function machinery.
//!
//! Every amount family implements [`LossLaw`] and is registered by name in
//! [`registry`], so configurations pick a family at run time. The composite
//! variables U·Z(t) and U·(Z(t)−Z(s)) — an amount thinned by whether the
//! default lands in a time window — implement the same [`Cgf`] interface,
//! which is all the transform and asymptotics layers ever need.

mod atoms;
mod composite;
mod exponential;
pub(crate) mod lattice;
mod poisson;
mod registry;
mod tails;

pub use atoms::AtomLaw;
pub use composite::{CompositeCgf, CompositeKind};
pub use exponential::ExponentialLaw;
pub use poisson::PoissonTypeLaw;
pub use registry::{build_law, families, FamilyEntry};
pub use tails::{check_light_tail, LightTailReport, TailClass};

use crate::error::Result;
use rand::RngCore;
use serde::Serialize;
use std::sync::Arc;

/// One point of a purely atomic law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Support metadata: values lie on offset + span·Z, span maximal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeInfo {
    pub span: f64,
    /// Reduced into [0, span).
    pub offset: f64,
}

impl LatticeInfo {
    /// Whether x sits on the progression, 1e-9 relative tolerance.
    pub fn contains(&self, x: f64) -> bool {
        let k = (x - self.offset) / self.span;
        (k - k.round()).abs() <= 1e-9 * k.abs().max(1.0)
    }
}

/// CGF value with first and second derivative at a point: the tilted
/// log-normalizer, tilted mean, tilted variance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CgfDerivs {
    pub value: f64,
    pub mean: f64,
    pub var: f64,
}

/// Cumulant generating function access.
///
/// `cgf` returns +∞ outside the finiteness domain instead of erroring, so
/// sup-searches may probe freely; `cgf_derivs` errors there instead, since
/// derivatives have no +∞ convention that keeps solvers honest.
pub trait Cgf {
    fn cgf(&self, theta: f64) -> f64;

    /// Λ, Λ', Λ'' at a point strictly inside the domain.
    fn cgf_derivs(&self, theta: f64) -> Result<CgfDerivs>;

    /// sup{θ : Λ(θ) < ∞}; +∞ for everywhere-finite laws.
    fn theta_sup(&self) -> f64;

    fn mean(&self) -> f64;

    fn ess_inf(&self) -> f64;

    /// Essential supremum; +∞ for unbounded laws.
    fn ess_sup(&self) -> f64;

    /// Point mass at `ess_inf`, when that point is an atom.
    fn mass_at_inf(&self) -> Option<f64>;

    /// Point mass at `ess_sup`, when it is finite and an atom.
    fn mass_at_sup(&self) -> Option<f64>;
}

/// A nonnegative loss-amount law: CGF access plus support metadata,
/// sampling, and exponential tilting.
pub trait LossLaw: Cgf + Send + Sync {
    /// Registry name of the family.
    fn family(&self) -> &'static str;

    /// Present iff the support is an arithmetic progression.
    fn lattice(&self) -> Option<LatticeInfo>;

    /// Finite support, when the law is purely atomic.
    fn atoms(&self) -> Option<&[Atom]>;

    /// The tilted law dQ/dP ∝ e^{σ·U}. σ must keep the CGF finite.
    fn tilt(&self, sigma: f64) -> Result<Arc<dyn LossLaw>>;

    fn sample(&self, rng: &mut dyn RngCore) -> f64;

    fn variance(&self) -> f64 {
        self.cgf_derivs(0.0).expect("theta = 0 is always interior").var
    }
}

/// log(e^a + e^b) without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
