//! Poisson-type loss amounts: U = u·(1 + K), K ~ Poisson(λ).
//!
//! Support {u, 2u, 3u, …}; Λ(θ) = θu + λ(e^{θu} − 1), finite everywhere.

use super::{Atom, Cgf, CgfDerivs, LatticeInfo, LossLaw};
use crate::error::{Error, Result};
use rand::RngCore;
use rand_distr::{Distribution, Poisson};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct PoissonTypeLaw {
    unit: f64,
    lambda: f64,
    sampler: Poisson<f64>,
}

impl PoissonTypeLaw {
    pub fn new(unit: f64, lambda: f64) -> Result<Self> {
        if !unit.is_finite() || unit <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "poisson-type unit {unit} must be finite and positive"
            )));
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "poisson-type intensity {lambda} must be finite and positive"
            )));
        }
        let sampler = Poisson::new(lambda)
            .map_err(|e| Error::InvalidModel(format!("poisson intensity {lambda}: {e}")))?;
        Ok(PoissonTypeLaw {
            unit,
            lambda,
            sampler,
        })
    }

    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Cgf for PoissonTypeLaw {
    fn cgf(&self, theta: f64) -> f64 {
        if theta.is_nan() {
            return f64::INFINITY;
        }
        theta * self.unit + self.lambda * ((theta * self.unit).exp() - 1.0)
    }

    fn cgf_derivs(&self, theta: f64) -> Result<CgfDerivs> {
        if !theta.is_finite() {
            return Err(Error::OutsideDomain {
                theta,
                sup: f64::INFINITY,
            });
        }
        // saturates honestly for θ·u beyond ~709; solvers treat ∞ as "too high"
        let e = (theta * self.unit).exp();
        Ok(CgfDerivs {
            value: theta * self.unit + self.lambda * (e - 1.0),
            mean: self.unit * (1.0 + self.lambda * e),
            var: self.lambda * self.unit * self.unit * e,
        })
    }

    fn theta_sup(&self) -> f64 {
        f64::INFINITY
    }

    fn mean(&self) -> f64 {
        self.unit * (1.0 + self.lambda)
    }

    fn ess_inf(&self) -> f64 {
        self.unit
    }

    fn ess_sup(&self) -> f64 {
        f64::INFINITY
    }

    fn mass_at_inf(&self) -> Option<f64> {
        Some((-self.lambda).exp())
    }

    fn mass_at_sup(&self) -> Option<f64> {
        None
    }
}

impl LossLaw for PoissonTypeLaw {
    fn family(&self) -> &'static str {
        "poisson-type"
    }

    fn lattice(&self) -> Option<LatticeInfo> {
        Some(LatticeInfo {
            span: self.unit,
            offset: 0.0,
        })
    }

    fn atoms(&self) -> Option<&[Atom]> {
        None
    }

    fn tilt(&self, sigma: f64) -> Result<Arc<dyn LossLaw>> {
        if !sigma.is_finite() {
            return Err(Error::Argument(format!("tilt {sigma} must be finite")));
        }
        // tilting maps λ ↦ λ·e^{σu} (counts stay Poisson)
        let lambda = self.lambda * (sigma * self.unit).exp();
        if !lambda.is_finite() || lambda < f64::MIN_POSITIVE {
            return Err(Error::Argument(format!(
                "tilt {sigma} drives the poisson intensity to {lambda}"
            )));
        }
        Ok(Arc::new(Self::new(self.unit, lambda)?))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let k: f64 = self.sampler.sample(rng);
        self.unit * (1.0 + k)
    }
}
