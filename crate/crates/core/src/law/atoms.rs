//! Finite atomic loss amounts: the `discrete-atoms` family and its
//! `bounded-empirical` alias (same machinery, named for configurations
//! built from empirical samples).

use super::lattice;
use super::{Atom, Cgf, CgfDerivs, LatticeInfo, LossLaw};
use crate::error::{Error, Result};
use rand::RngCore;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct AtomLaw {
    family: &'static str,
    atoms: Vec<Atom>,
    log_probs: Vec<f64>,
    cum: Vec<f64>,
    lattice: Option<LatticeInfo>,
    mean: f64,
}

impl AtomLaw {
    pub fn discrete(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::build("discrete-atoms", pairs)
    }

    pub fn bounded_empirical(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::build("bounded-empirical", pairs)
    }

    fn build(family: &'static str, pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid_model("atom list is empty"));
        }
        let mut atoms: Vec<Atom> = pairs
            .iter()
            .map(|&(value, prob)| Atom { value, prob })
            .collect();
        for a in &atoms {
            if !a.value.is_finite() || a.value < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "atom value {} must be finite and nonnegative",
                    a.value
                )));
            }
            if !a.prob.is_finite() || a.prob <= 0.0 || a.prob > 1.0 {
                return Err(Error::InvalidModel(format!(
                    "atom probability {} must lie in (0, 1]",
                    a.prob
                )));
            }
        }
        atoms.sort_by(|a, b| a.value.total_cmp(&b.value));
        for w in atoms.windows(2) {
            if w[0].value == w[1].value {
                return Err(Error::InvalidModel(format!(
                    "duplicate atom value {}",
                    w[0].value
                )));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "atom probabilities sum to {total}, not 1 within 1e-12"
            )));
        }
        for a in &mut atoms {
            a.prob /= total;
        }
        let values: Vec<f64> = atoms.iter().map(|a| a.value).collect();
        let lattice = lattice::detect(&values);
        let log_probs = atoms.iter().map(|a| a.prob.ln()).collect();
        let mut cum = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.prob;
            cum.push(acc);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        let mean = atoms.iter().map(|a| a.value * a.prob).sum();
        Ok(AtomLaw {
            family,
            atoms,
            log_probs,
            cum,
            lattice,
            mean,
        })
    }
}

impl Cgf for AtomLaw {
    fn cgf(&self, theta: f64) -> f64 {
        if theta.is_nan() {
            return f64::INFINITY;
        }
        if theta == 0.0 {
            return 0.0; // log E[e^0], exactly
        }
        // log Σ p_i e^{θ v_i}, log-sum-exp
        let mut m = f64::NEG_INFINITY;
        for (a, lp) in self.atoms.iter().zip(&self.log_probs) {
            m = m.max(theta * a.value + lp);
        }
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut s = 0.0;
        for (a, lp) in self.atoms.iter().zip(&self.log_probs) {
            s += (theta * a.value + lp - m).exp();
        }
        m + s.ln()
    }

    fn cgf_derivs(&self, theta: f64) -> Result<CgfDerivs> {
        if !theta.is_finite() {
            return Err(Error::OutsideDomain {
                theta,
                sup: f64::INFINITY,
            });
        }
        let mut m = f64::NEG_INFINITY;
        for (a, lp) in self.atoms.iter().zip(&self.log_probs) {
            m = m.max(theta * a.value + lp);
        }
        let mut z = 0.0;
        let mut z_v = 0.0;
        for (a, lp) in self.atoms.iter().zip(&self.log_probs) {
            let w = (theta * a.value + lp - m).exp();
            z += w;
            z_v += w * a.value;
        }
        let mean = z_v / z;
        let mut z_vv = 0.0;
        for (a, lp) in self.atoms.iter().zip(&self.log_probs) {
            let w = (theta * a.value + lp - m).exp();
            let d = a.value - mean;
            z_vv += w * d * d;
        }
        Ok(CgfDerivs {
            value: m + z.ln(),
            mean,
            var: z_vv / z,
        })
    }

    fn theta_sup(&self) -> f64 {
        f64::INFINITY
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn ess_inf(&self) -> f64 {
        self.atoms[0].value
    }

    fn ess_sup(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].value
    }

    fn mass_at_inf(&self) -> Option<f64> {
        Some(self.atoms[0].prob)
    }

    fn mass_at_sup(&self) -> Option<f64> {
        Some(self.atoms[self.atoms.len() - 1].prob)
    }
}

impl LossLaw for AtomLaw {
    fn family(&self) -> &'static str {
        self.family
    }

    fn lattice(&self) -> Option<LatticeInfo> {
        self.lattice
    }

    fn atoms(&self) -> Option<&[Atom]> {
        Some(&self.atoms)
    }

    fn tilt(&self, sigma: f64) -> Result<Arc<dyn LossLaw>> {
        if !sigma.is_finite() {
            return Err(Error::Argument(format!("tilt {sigma} must be finite")));
        }
        let norm = self.cgf(sigma);
        let pairs: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .zip(&self.log_probs)
            .map(|(a, lp)| (a.value, (sigma * a.value + lp - norm).exp()))
            .collect();
        Ok(Arc::new(Self::build(self.family, &pairs)?))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rand::Rng::gen(rng);
        let idx = self.cum.partition_point(|&c| c <= u);
        self.atoms[idx.min(self.atoms.len() - 1)].value
    }
}
