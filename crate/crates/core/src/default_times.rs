//! Default-time law on the integer grid {1, …, N}, possibly defective:
//! mass may remain on "never defaults" (defect = 1 − F_N).

use crate::error::{Error, Result};
use serde::Serialize;

pub const DEFECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefaultTimeModel {
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl DefaultTimeModel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid_model("default-time grid is empty"));
        }
        for (j, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidModel(format!(
                    "default probability p_{} = {p} must lie in [0, 1]",
                    j + 1
                )));
            }
        }
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc.min(1.0));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + DEFECT_TOL {
            return Err(Error::InvalidModel(format!(
                "default probabilities sum to {total}, exceeding 1"
            )));
        }
        Ok(DefaultTimeModel { probs, cum })
    }

    /// Number of grid epochs N.
    pub fn grid_len(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// p_j for the 1-based epoch j.
    pub fn prob(&self, j: usize) -> f64 {
        assert!(j >= 1 && j <= self.probs.len(), "epoch {j} off the grid");
        self.probs[j - 1]
    }

    /// F_t = P(τ ≤ t); F_0 = 0, saturating at F_N beyond the grid.
    pub fn cum(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cum[(t - 1).min(self.cum.len() - 1)]
        }
    }

    /// Never-default mass 1 − F_N.
    pub fn defect(&self) -> f64 {
        (1.0 - self.cum[self.cum.len() - 1]).max(0.0)
    }

    pub fn is_proper(&self) -> bool {
        self.defect() <= DEFECT_TOL
    }

    /// Hazard P(τ = j | τ ≥ j) = p_j / (1 − F_{j−1}); 0 once no mass survives.
    pub fn hazard(&self, j: usize) -> f64 {
        let surv = 1.0 - self.cum(j - 1);
        if surv <= 1e-15 {
            0.0
        } else {
            (self.prob(j) / surv).clamp(0.0, 1.0)
        }
    }

    /// Grid extended by one epoch absorbing the defect mass (identity when proper).
    pub fn augmented(&self) -> DefaultTimeModel {
        if self.is_proper() {
            return self.clone();
        }
        let mut probs = self.probs.clone();
        probs.push(self.defect());
        DefaultTimeModel::new(probs).expect("augmentation preserves validity")
    }
}
