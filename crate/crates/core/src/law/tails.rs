//! Light-tail classification: how far the CGF stays finite, and the
//! growth of Λ*(x)/x — which is unbounded exactly when the CGF is finite
//! everywhere, and capped by the domain edge otherwise.

use super::Cgf;
use crate::error::{Error, Result};
use crate::legendre;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailClass {
    /// Λ(θ) < ∞ for every θ.
    EverywhereFinite,
    /// Finite exactly up to the stated domain edge.
    FiniteUpTo { theta0: f64 },
    /// No positive θ keeps the CGF finite (not constructible from the
    /// built-in families; reported for completeness).
    Heavy,
}

#[derive(Debug, Clone, Serialize)]
pub struct LightTailReport {
    pub class: TailClass,
    /// Whether Λ was finite at every probe point.
    pub cgf_finite_on_probes: bool,
    /// (x, Λ*(x)/x) per probe; infeasible probes report +∞.
    pub ratios: Vec<(f64, f64)>,
    pub ratio_increasing: bool,
    /// Increasing with no finite cap — the everywhere-finite signature.
    pub ratio_unbounded: bool,
}

pub fn check_light_tail(cgf: &dyn Cgf, probes: &[f64]) -> Result<LightTailReport> {
    if probes.is_empty() {
        return Err(Error::argument("probe grid is empty"));
    }
    for w in probes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Argument(format!(
                "probe grid must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    if !probes[0].is_finite() || probes[0] <= 0.0 {
        return Err(Error::Argument(format!(
            "probe grid must be positive, starts at {}",
            probes[0]
        )));
    }
    // Λ*(x)/x measures upper-tail cost only above the mean (below it the
    // conjugate tracks the lower tail and the ratio falls back to 0)
    if probes[0] <= cgf.mean() {
        return Err(Error::Argument(format!(
            "probe grid must start above the mean {}, starts at {}",
            cgf.mean(),
            probes[0]
        )));
    }
    let theta0 = cgf.theta_sup();
    let class = if theta0 == f64::INFINITY {
        TailClass::EverywhereFinite
    } else if theta0 > 0.0 {
        TailClass::FiniteUpTo { theta0 }
    } else {
        TailClass::Heavy
    };
    let cgf_finite_on_probes = probes.iter().all(|&th| cgf.cgf(th).is_finite());
    let mut ratios = Vec::with_capacity(probes.len());
    for &x in probes {
        let v = legendre::legendre_transform(cgf, x, legendre::DEFAULT_TILT_TOL)?.value;
        ratios.push((x, v / x));
    }
    let ratio_increasing = ratios.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    let ratio_unbounded = ratio_increasing && matches!(class, TailClass::EverywhereFinite);
    Ok(LightTailReport {
        class,
        cgf_finite_on_probes,
        ratios,
        ratio_increasing,
        ratio_unbounded,
    })
}
