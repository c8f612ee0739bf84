//! Convex-conjugate machinery: Λ*(x) = sup_θ (θx − Λ(θ)), the tilt solver
//! Λ'(σ) = q behind it, and the perspective map (Δ, w) ↦ w·Λ*(Δ/w) with its
//! closed convex-hull boundary values at w = 0.
//!
//! The conjugate is computed through the dual root problem: for x strictly
//! inside the support range the sup is attained at the unique σ with
//! Λ'(σ) = x (strict convexity of Λ on non-degenerate laws), found by
//! bracketing plus a Newton/bisection hybrid. Support endpoints carrying an
//! atom get the analytic value −log P(X = endpoint); beyond the support the
//! conjugate is +∞.

use crate::error::{Error, Result, TiltSide};
use crate::law::Cgf;
use serde::Serialize;

pub const DEFAULT_TILT_TOL: f64 = 1e-10;

/// Relative width of the endpoint snap: targets within this of the support
/// boundary are treated as boundary cases rather than fed to the solver.
const BOUNDARY_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFlag {
    Interior,
    AtDomainBoundary,
    Infeasible,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LegendreResult {
    /// Conjugate value, ≥ 0; +∞ when x is outside the closed support range.
    pub value: f64,
    /// Attaining tilt, when the sup is attained at an interior point.
    pub argmax: Option<f64>,
    pub boundary: BoundaryFlag,
}

/// Scale of the variable's values, used to cap tilt magnitudes at
/// 700/scale so θ·x stays clear of exp overflow.
fn value_scale(cgf: &dyn Cgf) -> f64 {
    let sup = cgf.ess_sup();
    let s = if sup.is_finite() {
        sup.abs()
    } else {
        cgf.mean().abs().max(cgf.ess_inf().abs())
    };
    s.max(1e-12)
}

/// Λ'(θ), with +∞ standing in for "outside the domain / saturated".
fn slope(cgf: &dyn Cgf, theta: f64) -> f64 {
    match cgf.cgf_derivs(theta) {
        Ok(d) if d.mean.is_finite() => d.mean,
        _ => f64::INFINITY,
    }
}

/// Solve Λ'(σ) = q to |Λ'(σ) − q| ≤ tol·max(1, |q|).
pub fn tilt_solve(cgf: &dyn Cgf, q: f64, tol: f64) -> Result<f64> {
    tilt_solve_warm(cgf, q, tol, None)
}

pub(crate) fn tilt_solve_warm(cgf: &dyn Cgf, q: f64, tol: f64, warm: Option<f64>) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::Argument(format!("tilt target {q} must be finite")));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let sup = cgf.ess_sup();
    let inf = cgf.ess_inf();
    if q >= sup {
        return Err(Error::NoTilt {
            side: TiltSide::AboveSupport,
            target: q,
            bound: sup,
        });
    }
    if q <= inf {
        return Err(Error::NoTilt {
            side: TiltSide::BelowSupport,
            target: q,
            bound: inf,
        });
    }
    let target_tol = tol * q.abs().max(1.0);
    let mean = cgf
        .cgf_derivs(0.0)
        .expect("theta = 0 is always interior")
        .mean;
    if (mean - q).abs() <= target_tol {
        return Ok(0.0);
    }

    let theta_cap = 700.0 / value_scale(cgf);
    let (mut lo, mut hi);
    if q > mean {
        lo = 0.0;
        let tsup = cgf.theta_sup();
        if tsup.is_finite() {
            // approach the domain edge geometrically; Λ' → ∞ there
            let mut k = 1;
            loop {
                let cand = tsup * (1.0 - 0.5_f64.powi(k));
                if slope(cgf, cand) >= q {
                    hi = cand;
                    break;
                }
                lo = cand;
                k += 1;
                if k > 200 {
                    return Err(Error::NoTilt {
                        side: TiltSide::AboveSupport,
                        target: q,
                        bound: sup,
                    });
                }
            }
        } else {
            let mut cand = 1.0_f64.min(theta_cap);
            loop {
                if slope(cgf, cand) >= q {
                    hi = cand;
                    break;
                }
                if cand >= theta_cap {
                    // float-saturated slope still below q: q is boundary-close
                    return Err(Error::NoTilt {
                        side: TiltSide::AboveSupport,
                        target: q,
                        bound: sup,
                    });
                }
                lo = cand;
                cand = (cand * 2.0).min(theta_cap);
            }
        }
    } else {
        hi = 0.0;
        let mut cand = (-1.0_f64).max(-theta_cap);
        loop {
            if slope(cgf, cand) <= q {
                lo = cand;
                break;
            }
            if cand <= -theta_cap {
                return Err(Error::NoTilt {
                    side: TiltSide::BelowSupport,
                    target: q,
                    bound: inf,
                });
            }
            hi = cand;
            cand = (cand * 2.0).max(-theta_cap);
        }
    }

    // Newton from a warm start (when inside the bracket), safeguarded by
    // bisection; the bracket keeps Λ'(lo) < q < Λ'(hi).
    let mut theta = match warm {
        Some(w) if w > lo && w < hi => w,
        _ => 0.5 * (lo + hi),
    };
    for _ in 0..256 {
        let d = match cgf.cgf_derivs(theta) {
            Ok(d) if d.mean.is_finite() => d,
            _ => {
                hi = theta;
                theta = 0.5 * (lo + hi);
                continue;
            }
        };
        let h = d.mean - q;
        if h.abs() <= target_tol {
            return Ok(theta);
        }
        if h > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        if hi - lo <= f64::EPSILON * theta.abs().max(1.0) {
            return Ok(theta); // resolved to float precision
        }
        let newton = theta - h / d.var;
        theta = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(theta)
}

/// Fenchel conjugate Λ*(x) with the attaining tilt and a boundary flag.
pub fn legendre_transform(cgf: &dyn Cgf, x: f64, tol: f64) -> Result<LegendreResult> {
    transform_warm(cgf, x, tol, None)
}

pub(crate) fn transform_warm(
    cgf: &dyn Cgf,
    x: f64,
    tol: f64,
    warm: Option<f64>,
) -> Result<LegendreResult> {
    if !x.is_finite() {
        return Err(Error::Argument(format!("conjugate point {x} must be finite")));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let sup = cgf.ess_sup();
    let inf = cgf.ess_inf();
    if sup.is_finite() {
        let snap = BOUNDARY_SNAP * sup.abs().max(1.0);
        if x > sup + snap {
            return Ok(LegendreResult {
                value: f64::INFINITY,
                argmax: None,
                boundary: BoundaryFlag::Infeasible,
            });
        }
        if x >= sup - snap {
            let value = cgf
                .mass_at_sup()
                .map(|m| -m.ln())
                .unwrap_or(f64::INFINITY);
            return Ok(LegendreResult {
                value,
                argmax: None,
                boundary: BoundaryFlag::AtDomainBoundary,
            });
        }
    }
    let snap = BOUNDARY_SNAP * inf.abs().max(1.0);
    if x < inf - snap {
        return Ok(LegendreResult {
            value: f64::INFINITY,
            argmax: None,
            boundary: BoundaryFlag::Infeasible,
        });
    }
    if x <= inf + snap {
        let value = cgf.mass_at_inf().map(|m| -m.ln()).unwrap_or(f64::INFINITY);
        return Ok(LegendreResult {
            value,
            argmax: None,
            boundary: BoundaryFlag::AtDomainBoundary,
        });
    }
    let sigma = tilt_solve_warm(cgf, x, tol, warm)?;
    // the duality gap at the solved tilt is second-order in the residual
    let value = (sigma * x - cgf.cgf(sigma)).max(0.0);
    Ok(LegendreResult {
        value,
        argmax: Some(sigma),
        boundary: BoundaryFlag::Interior,
    })
}

/// Perspective w·Λ*(Δ/w) extended by closed convexity to w = 0:
/// 0 at Δ = 0, otherwise Δ·θ_sup (+∞ for everywhere-finite CGFs).
pub fn perspective(cgf: &dyn Cgf, increment: f64, weight: f64, tol: f64) -> Result<f64> {
    if !increment.is_finite() || increment < 0.0 {
        return Err(Error::Argument(format!(
            "increment {increment} must be finite and nonnegative"
        )));
    }
    if !weight.is_finite() || !(0.0..=1.0).contains(&weight) {
        return Err(Error::Argument(format!(
            "weight {weight} must lie in [0, 1]"
        )));
    }
    if weight == 0.0 {
        return Ok(if increment == 0.0 {
            0.0
        } else {
            increment * cgf.theta_sup()
        });
    }
    let ratio = increment / weight;
    if !ratio.is_finite() {
        return Ok(f64::INFINITY); // subnormal weight with positive increment
    }
    Ok(weight * legendre_transform(cgf, ratio, tol)?.value)
}
