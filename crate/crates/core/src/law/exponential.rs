//! Exponential loss amounts, parameterized by RATE: mean = 1/rate and
//! Λ(θ) = log(rate/(rate − θ)) for θ < rate.
//!
//! Note on conventions: the transform of this law is x·rate − 1 − log(x·rate)
//! at x > 0, which pins the parameter as a rate even where prose elsewhere
//! calls the same symbol a mean; configurations must pass a rate.

use super::{Atom, Cgf, CgfDerivs, LatticeInfo, LossLaw};
use crate::error::{Error, Result};
use rand::RngCore;
use rand_distr::{Distribution, Exp};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ExponentialLaw {
    rate: f64,
    sampler: Exp<f64>,
}

impl ExponentialLaw {
    pub fn new(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "exponential rate {rate} must be finite and positive"
            )));
        }
        let sampler =
            Exp::new(rate).map_err(|e| Error::InvalidModel(format!("exponential rate {rate}: {e}")))?;
        Ok(ExponentialLaw { rate, sampler })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Cgf for ExponentialLaw {
    fn cgf(&self, theta: f64) -> f64 {
        if theta.is_nan() || theta >= self.rate {
            return f64::INFINITY;
        }
        // −log(1 − θ/rate), stable near 0
        -(-theta / self.rate).ln_1p()
    }

    fn cgf_derivs(&self, theta: f64) -> Result<CgfDerivs> {
        if !theta.is_finite() || theta >= self.rate {
            return Err(Error::OutsideDomain {
                theta,
                sup: self.rate,
            });
        }
        let mean = 1.0 / (self.rate - theta);
        Ok(CgfDerivs {
            value: -(-theta / self.rate).ln_1p(),
            mean,
            var: mean * mean,
        })
    }

    fn theta_sup(&self) -> f64 {
        self.rate
    }

    fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    fn ess_inf(&self) -> f64 {
        0.0
    }

    fn ess_sup(&self) -> f64 {
        f64::INFINITY
    }

    fn mass_at_inf(&self) -> Option<f64> {
        None
    }

    fn mass_at_sup(&self) -> Option<f64> {
        None
    }
}

impl LossLaw for ExponentialLaw {
    fn family(&self) -> &'static str {
        "exponential"
    }

    fn lattice(&self) -> Option<LatticeInfo> {
        None
    }

    fn atoms(&self) -> Option<&[Atom]> {
        None
    }

    fn tilt(&self, sigma: f64) -> Result<Arc<dyn LossLaw>> {
        if !sigma.is_finite() || sigma >= self.rate {
            return Err(Error::OutsideDomain {
                theta: sigma,
                sup: self.rate,
            });
        }
        Ok(Arc::new(Self::new(self.rate - sigma)?))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.sampler.sample(rng)
    }
}
