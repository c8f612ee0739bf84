//! Composite variables U·Z(t) and U·(Z(t) − Z(s)): a loss amount thinned
//! by whether the default lands in a time window of success mass w, so
//! Λ(θ) = log(w·e^{Λ_U(θ)} + 1 − w). At w = 1 this is Λ_U itself; at w = 0
//! the variable is identically 0.

use super::{lattice, log_add_exp, Cgf, CgfDerivs, LatticeInfo, LossLaw};
use crate::default_times::DefaultTimeModel;
use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompositeKind {
    /// Loss contribution by epoch t: U·Z(t).
    AtTime { t: u32 },
    /// Loss contribution inside (s, t]: U·(Z(t) − Z(s)).
    Increment { s: u32, t: u32 },
}

#[derive(Clone)]
pub struct CompositeCgf {
    law: Arc<dyn LossLaw>,
    kind: CompositeKind,
    weight: f64,
}

impl std::fmt::Debug for CompositeCgf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeCgf")
            .field("family", &self.law.family())
            .field("kind", &self.kind)
            .field("weight", &self.weight)
            .finish()
    }
}

impl CompositeCgf {
    pub fn at_time(law: Arc<dyn LossLaw>, tau: &DefaultTimeModel, t: u32) -> Result<Self> {
        if t == 0 || t as usize > tau.grid_len() {
            return Err(Error::Argument(format!(
                "epoch t = {t} is not on the grid 1..={}",
                tau.grid_len()
            )));
        }
        Ok(Self::with_weight(law, CompositeKind::AtTime { t }, tau.cum(t as usize)))
    }

    /// As `at_time` but with F saturating beyond the grid (defect mass never
    /// defaults); used by beyond-horizon tail probes.
    pub(crate) fn at_time_saturating(
        law: Arc<dyn LossLaw>,
        tau: &DefaultTimeModel,
        t: u32,
    ) -> Result<Self> {
        if t == 0 {
            return Err(Error::argument("epoch t must be at least 1"));
        }
        Ok(Self::with_weight(law, CompositeKind::AtTime { t }, tau.cum(t as usize)))
    }

    pub fn increment(law: Arc<dyn LossLaw>, tau: &DefaultTimeModel, s: u32, t: u32) -> Result<Self> {
        if s >= t {
            return Err(Error::Argument(format!(
                "increment window needs s < t, got (s, t) = ({s}, {t})"
            )));
        }
        if t as usize > tau.grid_len() {
            return Err(Error::Argument(format!(
                "epoch t = {t} is not on the grid 1..={}",
                tau.grid_len()
            )));
        }
        let weight = tau.cum(t as usize) - tau.cum(s as usize);
        Ok(Self::with_weight(law, CompositeKind::Increment { s, t }, weight))
    }

    fn with_weight(law: Arc<dyn LossLaw>, kind: CompositeKind, weight: f64) -> Self {
        CompositeCgf {
            law,
            kind,
            weight: weight.clamp(0.0, 1.0),
        }
    }

    /// Success mass w of the window.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn kind(&self) -> CompositeKind {
        self.kind
    }

    pub fn law(&self) -> &Arc<dyn LossLaw> {
        &self.law
    }

    /// Lattice of the composite support: the amount support plus the zero
    /// atom whenever the window can miss.
    pub fn lattice(&self) -> Option<LatticeInfo> {
        if self.weight >= 1.0 {
            return self.law.lattice();
        }
        if self.weight <= 0.0 {
            return lattice::detect(&[0.0]);
        }
        let atoms = self.law.atoms()?;
        let mut values: Vec<f64> = Vec::with_capacity(atoms.len() + 1);
        if atoms[0].value > 0.0 {
            values.push(0.0);
        }
        values.extend(atoms.iter().map(|a| a.value));
        lattice::detect(&values)
    }
}

impl Cgf for CompositeCgf {
    fn cgf(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0; // log E[e^0], exactly
        }
        if self.weight >= 1.0 {
            return self.law.cgf(theta);
        }
        if self.weight <= 0.0 {
            return 0.0;
        }
        let lu = self.law.cgf(theta);
        if lu == f64::INFINITY {
            return f64::INFINITY;
        }
        log_add_exp(self.weight.ln() + lu, (1.0 - self.weight).ln())
    }

    fn cgf_derivs(&self, theta: f64) -> Result<CgfDerivs> {
        if self.weight >= 1.0 {
            return self.law.cgf_derivs(theta);
        }
        if self.weight <= 0.0 {
            return Ok(CgfDerivs {
                value: 0.0,
                mean: 0.0,
                var: 0.0,
            });
        }
        let d = self.law.cgf_derivs(theta)?;
        let value = log_add_exp(self.weight.ln() + d.value, (1.0 - self.weight).ln());
        // success share after tilting; all derivatives flow through it
        let s = (self.weight.ln() + d.value - value).exp();
        Ok(CgfDerivs {
            value,
            mean: s * d.mean,
            var: s * d.var + s * (1.0 - s) * d.mean * d.mean,
        })
    }

    fn theta_sup(&self) -> f64 {
        if self.weight <= 0.0 {
            f64::INFINITY
        } else {
            self.law.theta_sup()
        }
    }

    fn mean(&self) -> f64 {
        self.weight * self.law.mean()
    }

    fn ess_inf(&self) -> f64 {
        if self.weight >= 1.0 {
            self.law.ess_inf()
        } else {
            0.0
        }
    }

    fn ess_sup(&self) -> f64 {
        if self.weight <= 0.0 {
            0.0
        } else {
            self.law.ess_sup()
        }
    }

    fn mass_at_inf(&self) -> Option<f64> {
        if self.weight >= 1.0 {
            return self.law.mass_at_inf();
        }
        let mut m = 1.0 - self.weight;
        if self.law.ess_inf() == 0.0 {
            m += self.weight * self.law.mass_at_inf().unwrap_or(0.0);
        }
        Some(m)
    }

    fn mass_at_sup(&self) -> Option<f64> {
        if self.weight <= 0.0 {
            return Some(1.0);
        }
        let m = self.law.mass_at_sup()?;
        Some(if self.weight >= 1.0 { m } else { self.weight * m })
    }
}
