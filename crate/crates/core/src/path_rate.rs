//! Decay rate of whole-path loss events: minimize the entropy-plus-
//! perspective objective
//!
//!   Σ_i φ_i·( log(φ_i/p_i) + Λ*(Δx_i/φ_i) )
//!
//! over default-weight profiles φ on the simplex. The objective is convex
//! and separable across epochs; minimization runs exponentiated-gradient
//! mirror descent with Armijo backtracking, then a pairwise coordinate
//! polish that is robust near the feasible boundary. Buckets whose box
//! bounds pin them (degenerate amount laws) and entropy-affine
//! configurations (closed-form Gibbs weights) bypass the iteration.

use crate::error::{Error, Result};
use crate::law::Cgf;
use crate::legendre::{self, BoundaryFlag, DEFAULT_TILT_TOL};
use crate::default_times::{DefaultTimeModel, DEFECT_TOL};
use serde::Serialize;

pub const DEFAULT_PATH_TOL: f64 = 1e-8;
pub const OPT_ITER_CAP: usize = 100_000;

/// Nondecreasing nonnegative loss levels x_1..x_N (implicit x_0 = 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossPath {
    values: Vec<f64>,
}

impl LossPath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("loss path is empty"));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Argument(format!(
                    "path level x_{} = {v} must be finite",
                    i + 1
                )));
            }
        }
        if values[0] < 0.0 {
            return Err(Error::Argument(format!(
                "path level x_1 = {} must be nonnegative",
                values[0]
            )));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::Argument(format!(
                    "path must be nondecreasing: x_{} = {} < x_{} = {}",
                    i + 2,
                    w[1],
                    i + 1,
                    w[0]
                )));
            }
        }
        Ok(LossPath { values })
    }

    /// The mean path x_j = E[U]·F_j of the given models.
    pub fn mean_path(law: &dyn Cgf, tau: &DefaultTimeModel) -> Self {
        let m = law.mean();
        let values = (1..=tau.grid_len()).map(|j| m * tau.cum(j)).collect();
        LossPath { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Per-epoch increments Δx_i = x_i − x_{i−1}.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&v| {
                let d = (v - prev).max(0.0);
                prev = v;
                d
            })
            .collect()
    }
}

/// A point of the probability simplex (sums to 1, entries ≥ 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    weights: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::argument("simplex point is empty"));
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Argument(format!(
                    "simplex weight {w} must be finite and nonnegative"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "simplex weights sum to {sum}, not 1"
            )));
        }
        // exact renormalization of accumulated dust
        let weights = weights.into_iter().map(|w| w / sum).collect();
        Ok(SimplexPoint { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRateResult {
    /// Infimum of the objective; +∞ when no feasible profile exists.
    pub rate: f64,
    /// Feasible minimizer over the (possibly augmented) epoch grid.
    pub argmin: Option<SimplexPoint>,
    /// Whether a virtual never-default epoch was appended.
    pub augmented: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Rate of the path event {L_n(·)/n ≈ x}; requires a proper default law.
pub fn path_rate(
    x: &LossPath,
    law: &dyn Cgf,
    tau: &DefaultTimeModel,
    tol: f64,
) -> Result<PathRateResult> {
    if !tau.is_proper() {
        return Err(Error::DefectiveTau {
            defect: tau.defect(),
        });
    }
    path_rate_impl(x, law, tau, tol, false)
}

/// As [`path_rate`], but a defective law is absorbed by a virtual final
/// epoch carrying the never-default mass with a forced zero increment
/// (no amount is drawn for obligors that never default).
pub fn path_rate_augmented(
    x: &LossPath,
    law: &dyn Cgf,
    tau: &DefaultTimeModel,
    tol: f64,
) -> Result<PathRateResult> {
    path_rate_impl(x, law, tau, tol, true)
}

fn path_rate_impl(
    x: &LossPath,
    law: &dyn Cgf,
    tau: &DefaultTimeModel,
    tol: f64,
    augment: bool,
) -> Result<PathRateResult> {
    if x.len() != tau.grid_len() {
        return Err(Error::Argument(format!(
            "path has {} levels but the default grid has {} epochs",
            x.len(),
            tau.grid_len()
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let mut buckets: Vec<Bucket> = tau
        .probs()
        .iter()
        .zip(x.increments())
        .map(|(&p, delta)| Bucket {
            p,
            delta,
            entropy_only: false,
        })
        .collect();
    let mut augmented = false;
    if augment && tau.defect() > DEFECT_TOL {
        buckets.push(Bucket {
            p: tau.defect(),
            delta: 0.0,
            entropy_only: true,
        });
        augmented = true;
    }
    let sol = minimize_buckets(law, &buckets, tol)?;
    let argmin = match sol.phi {
        Some(phi) if sol.value.is_finite() => Some(SimplexPoint::new(phi)?),
        _ => None,
    };
    Ok(PathRateResult {
        rate: sol.value,
        argmin,
        augmented,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Dominant scenario under a finite mixture: inputs are signed decay
/// exponents lim (1/n)·log P ≤ 0 per scenario, and the mixture decays at
/// their maximum. First occurrence wins ties.
pub fn mixture_decay(rates: &[(String, f64)]) -> Result<(String, f64)> {
    if rates.is_empty() {
        return Err(Error::argument("mixture has no scenarios"));
    }
    for (label, r) in rates {
        if r.is_nan() || *r > 0.0 {
            return Err(Error::Argument(format!(
                "scenario '{label}' has decay exponent {r}; exponents are log-limits and must be ≤ 0"
            )));
        }
    }
    let mut best = 0usize;
    for i in 1..rates.len() {
        if rates[i].1 > rates[best].1 {
            best = i;
        }
    }
    Ok((rates[best].0.clone(), rates[best].1))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bucket {
    pub p: f64,
    pub delta: f64,
    /// Never-default bucket: no amount is drawn, so only the entropy term.
    pub entropy_only: bool,
}

pub(crate) struct Sol {
    pub value: f64,
    pub phi: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

fn infeasible() -> Sol {
    Sol {
        value: f64::INFINITY,
        phi: None,
        iterations: 0,
        converged: true,
    }
}

/// Objective of one bucket at weight f, boundary values allowed.
fn bucket_value(law: &dyn Cgf, b: &Bucket, f: f64, lstar0: f64) -> f64 {
    if f <= 0.0 {
        // φ = 0: entropy limit is 0; positive increments are infeasible here
        // (p = 0 buckets, by the documented convention)
        return if b.delta > 0.0 { f64::INFINITY } else { 0.0 };
    }
    let mut v = f * (f / b.p).ln();
    if !b.entropy_only {
        if b.delta == 0.0 {
            v += f * lstar0;
        } else {
            match legendre::legendre_transform(law, b.delta / f, DEFAULT_TILT_TOL) {
                Ok(r) => v += f * r.value,
                Err(_) => return f64::INFINITY,
            }
        }
    }
    v
}

/// Minimize Σ bucket objectives over φ ≥ 0, Σφ = 1.
pub(crate) fn minimize_buckets(law: &dyn Cgf, buckets: &[Bucket], tol: f64) -> Result<Sol> {
    let nb = buckets.len();
    let lstar0 = legendre::legendre_transform(law, 0.0, DEFAULT_TILT_TOL)?.value;
    let sup = law.ess_sup();
    let inf = law.ess_inf();

    let mut phi = vec![0.0; nb];
    let mut lower = vec![0.0; nb];
    let mut upper = vec![0.0; nb];
    let mut active: Vec<usize> = Vec::new();
    for (i, b) in buckets.iter().enumerate() {
        if b.p <= 0.0 {
            if b.delta > 0.0 {
                return Ok(infeasible()); // mass must flow through a p = 0 epoch
            }
            continue; // φ_i = 0, zero contribution
        }
        if !b.entropy_only && b.delta == 0.0 && lstar0.is_infinite() {
            continue; // a weighted epoch with no loss needs P(U = 0) > 0
        }
        if b.entropy_only || b.delta == 0.0 {
            upper[i] = 1.0;
        } else {
            lower[i] = if sup.is_finite() { b.delta / sup } else { 0.0 };
            upper[i] = if inf > 0.0 {
                (b.delta / inf).min(1.0)
            } else {
                1.0
            };
            if lower[i] > upper[i] + 1e-12 {
                return Ok(infeasible());
            }
            lower[i] = lower[i].min(upper[i]);
        }
        active.push(i);
    }
    let sum_lo: f64 = active.iter().map(|&i| lower[i]).sum();
    let sum_hi: f64 = active.iter().map(|&i| upper[i]).sum();
    if sum_lo > 1.0 + 1e-10 || sum_hi < 1.0 - 1e-10 {
        return Ok(infeasible());
    }

    // Buckets whose feasible interval is a point are pinned outright.
    let mut opt: Vec<usize> = Vec::new();
    let mut pinned_mass = 0.0;
    for &i in &active {
        if upper[i] - lower[i] <= 1e-13 * upper[i].max(1.0) {
            phi[i] = lower[i];
            pinned_mass += lower[i];
        } else {
            opt.push(i);
        }
    }
    let pinned_value: f64 = active
        .iter()
        .filter(|i| !opt.contains(i))
        .map(|&i| bucket_value(law, &buckets[i], phi[i], lstar0))
        .sum();
    let m = 1.0 - pinned_mass;

    let finish = |phi: Vec<f64>, value: f64, iterations: usize, converged: bool| {
        if value.is_finite() {
            Sol {
                value,
                phi: Some(phi),
                iterations,
                converged,
            }
        } else {
            infeasible()
        }
    };

    if opt.is_empty() {
        if m.abs() > 1e-9 {
            return Ok(infeasible());
        }
        return Ok(finish(phi, pinned_value, 0, true));
    }
    let m_lo: f64 = opt.iter().map(|&i| lower[i]).sum();
    let m_hi: f64 = opt.iter().map(|&i| upper[i]).sum();
    if m < m_lo - 1e-10 || m > m_hi + 1e-10 {
        return Ok(infeasible());
    }
    // mass exactly exhausts a box face: the profile is forced
    let face_snap = 1e-10 * m.abs().max(1.0);
    if m - m_lo <= face_snap || m_hi - m <= face_snap {
        let at_lower = m - m_lo <= face_snap;
        for &i in &opt {
            phi[i] = if at_lower { lower[i] } else { upper[i] };
        }
        let value = pinned_value
            + opt
                .iter()
                .map(|&i| bucket_value(law, &buckets[i], phi[i], lstar0))
                .sum::<f64>();
        return Ok(finish(phi, value, 0, true));
    }

    // Entropy-affine free set: Gibbs closed form.
    if opt
        .iter()
        .all(|&i| buckets[i].entropy_only || buckets[i].delta == 0.0)
    {
        let mut w_sum = 0.0;
        let mut gibbs = Vec::with_capacity(opt.len());
        for &i in &opt {
            let c = if buckets[i].entropy_only { 0.0 } else { lstar0 };
            let w = buckets[i].p * (-c).exp();
            gibbs.push(w);
            w_sum += w;
        }
        let mut value = pinned_value + m * (m / w_sum).ln();
        for (k, &i) in opt.iter().enumerate() {
            phi[i] = m * gibbs[k] / w_sum;
            if phi[i] > upper[i] {
                // Gibbs weight exceeding the unit cap cannot happen with m ≤ 1
                phi[i] = upper[i];
            }
        }
        if !value.is_finite() {
            value = f64::INFINITY;
        }
        return Ok(finish(phi, value, 0, true));
    }

    // General case: mirror descent, then pairwise polish.
    let solved = descend(law, buckets, &opt, &lower, &upper, m, lstar0, tol, pinned_value)?;
    for (k, &i) in opt.iter().enumerate() {
        phi[i] = solved.phi[k];
    }
    Ok(finish(phi, solved.value, solved.iterations, solved.converged))
}

struct FreeSol {
    phi: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Value and gradient over the free coordinates; None when any coordinate
/// leaves the feasible interior (callers backtrack on that).
#[allow(clippy::too_many_arguments)]
fn eval_free(
    law: &dyn Cgf,
    buckets: &[Bucket],
    opt: &[usize],
    f: &[f64],
    lstar0: f64,
    warm: &mut [Option<f64>],
) -> Option<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(opt.len());
    for (k, &i) in opt.iter().enumerate() {
        let b = &buckets[i];
        let fi = f[k];
        if fi <= 0.0 {
            return None;
        }
        let log_ratio = (fi / b.p).ln();
        value += fi * log_ratio;
        if b.entropy_only {
            grad.push(log_ratio + 1.0);
        } else if b.delta == 0.0 {
            value += fi * lstar0;
            grad.push(log_ratio + 1.0 + lstar0);
        } else {
            let y = b.delta / fi;
            let r = legendre::transform_warm(law, y, DEFAULT_TILT_TOL, warm[k]).ok()?;
            if r.boundary != BoundaryFlag::Interior {
                return None; // interior optimum: reject boundary iterates
            }
            let sigma = r.argmax.expect("interior transform carries its tilt");
            warm[k] = Some(sigma);
            value += fi * r.value;
            // d/dφ [φ·Λ*(Δ/φ)] = −Λ(σ(Δ/φ))
            grad.push(log_ratio + 1.0 - law.cgf(sigma));
        }
    }
    Some((value, grad))
}

#[allow(clippy::too_many_arguments)]
fn descend(
    law: &dyn Cgf,
    buckets: &[Bucket],
    opt: &[usize],
    lower: &[f64],
    upper: &[f64],
    m: f64,
    lstar0: f64,
    tol: f64,
    pinned_value: f64,
) -> Result<FreeSol> {
    let nb = opt.len();
    let lo: Vec<f64> = opt.iter().map(|&i| lower[i]).collect();
    let hi: Vec<f64> = opt.iter().map(|&i| upper[i]).collect();
    let m_lo: f64 = lo.iter().sum();

    // strictly interior start: lower bounds plus slack spread by headroom
    let caps: Vec<f64> = (0..nb).map(|k| hi[k] - lo[k]).collect();
    let cap_sum: f64 = caps.iter().sum();
    let slack = m - m_lo;
    let mut f: Vec<f64> = (0..nb)
        .map(|k| lo[k] + slack * caps[k] / cap_sum)
        .collect();
    let mut warm: Vec<Option<f64>> = vec![None; nb];

    let (mut value, mut grad) = match eval_free(law, buckets, opt, &f, lstar0, &mut warm) {
        Some(vg) => vg,
        None => {
            // The interior start only fails when the slack above a face is
            // smaller than the tilt solver's boundary snap; the face value is
            // then correct to within that snap.
            let at_lower = m - m_lo <= hi.iter().sum::<f64>() - m;
            for k in 0..nb {
                f[k] = if at_lower { lo[k] } else { hi[k] };
            }
            let value = pinned_value
                + (0..nb)
                    .map(|k| bucket_value(law, &buckets[opt[k]], f[k], lstar0))
                    .sum::<f64>();
            return Ok(FreeSol {
                phi: f,
                value,
                iterations: 0,
                converged: true,
            });
        }
    };

    let mut eta = 1.0_f64;
    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < OPT_ITER_CAP {
        iterations += 1;
        let gbar: f64 = (0..nb).map(|k| f[k] * grad[k]).sum::<f64>() / m;
        let var_g: f64 = (0..nb)
            .map(|k| f[k] * (grad[k] - gbar) * (grad[k] - gbar))
            .sum();
        // entropy curvature bounds the Hessian below: gap ≲ var_g / 2
        if 0.5 * var_g <= 0.05 * tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
        let mut stepped = false;
        let mut bt = 0;
        while bt < 80 {
            bt += 1;
            // multiplicative step in log space, renormalized to mass m
            let shift = grad.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut cand: Vec<f64> = (0..nb)
                .map(|k| f[k] * (-eta * (grad[k] - shift)).exp())
                .collect();
            let s: f64 = cand.iter().sum();
            if s <= 0.0 || !s.is_finite() {
                eta *= 0.25;
                continue;
            }
            for c in cand.iter_mut() {
                *c *= m / s;
            }
            if let Some((v2, g2)) = eval_free(law, buckets, opt, &cand, lstar0, &mut warm) {
                if v2 <= value - 1e-4 * eta.min(1.0) * var_g
                    || (eta <= 1e-12 && v2 < value)
                {
                    f = cand;
                    value = v2;
                    grad = g2;
                    eta = (eta * 1.5).min(256.0);
                    stepped = true;
                    break;
                }
            }
            eta *= 0.25;
            if eta < 1e-14 {
                break;
            }
        }
        if !stepped {
            break;
        }
    }

    // Pairwise coordinate polish: exact in the two-bucket subspace, robust
    // where mirror steps stall near the box boundary.
    if nb >= 2 {
        for _sweep in 0..60 {
            iterations += 1;
            let mut gain = 0.0;
            for a in 0..nb {
                for b in (a + 1)..nb {
                    gain += polish_pair(law, buckets, opt, &lo, &hi, &mut f, a, b, lstar0);
                }
            }
            if gain <= 0.02 * tol * value.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if let Some((v2, _)) = eval_free(law, buckets, opt, &f, lstar0, &mut warm) {
            value = v2;
        }
    }

    Ok(FreeSol {
        phi: f,
        value: pinned_value + value,
        iterations,
        converged,
    })
}

/// Move mass between free buckets a and b by golden-section line search;
/// returns the objective gain.
#[allow(clippy::too_many_arguments)]
fn polish_pair(
    law: &dyn Cgf,
    buckets: &[Bucket],
    opt: &[usize],
    lo: &[f64],
    hi: &[f64],
    f: &mut [f64],
    a: usize,
    b: usize,
    lstar0: f64,
) -> f64 {
    let margin = 1e-13;
    // t > 0 moves mass from a to b
    let t_max = ((f[a] - lo[a]).min(hi[b] - f[b]) - margin).max(0.0);
    let t_min = -(((f[b] - lo[b]).min(hi[a] - f[a]) - margin).max(0.0));
    if t_max - t_min <= margin {
        return 0.0;
    }
    let obj = |t: f64| -> f64 {
        bucket_value(law, &buckets[opt[a]], f[a] - t, lstar0)
            + bucket_value(law, &buckets[opt[b]], f[b] + t, lstar0)
    };
    let base = obj(0.0);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut x_lo, mut x_hi) = (t_min, t_max);
    let mut x1 = x_hi - inv_phi * (x_hi - x_lo);
    let mut x2 = x_lo + inv_phi * (x_hi - x_lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            x_hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = x_hi - inv_phi * (x_hi - x_lo);
            f1 = obj(x1);
        } else {
            x_lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = x_lo + inv_phi * (x_hi - x_lo);
            f2 = obj(x2);
        }
        if x_hi - x_lo <= 1e-14 * (t_max - t_min).max(1e-9) {
            break;
        }
    }
    let t = if f1 <= f2 { x1 } else { x2 };
    let best = f1.min(f2);
    if best < base && t.abs() > 0.0 {
        f[a] -= t;
        f[b] += t;
        base - best
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{AtomLaw, ExponentialLaw, PoissonTypeLaw};
    use approx::assert_relative_eq;

    const TOL: f64 = DEFAULT_PATH_TOL;

    #[test]
    fn mean_path_has_zero_rate_and_argmin_p() {
        let law = AtomLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.5, 0.3, 0.2]).unwrap();
        let x = LossPath::mean_path(&law, &tau);
        let r = path_rate(&x, &law, &tau, TOL).unwrap();
        assert!(r.rate.abs() <= 1e-8, "rate = {}", r.rate);
        let phi = r.argmin.unwrap();
        for (got, want) in phi.weights().iter().zip(tau.probs()) {
            assert_relative_eq!(got, want, epsilon = 1e-6);
        }
        assert!(r.converged);
    }

    #[test]
    fn single_epoch_reduces_to_conjugate() {
        // N = 1, p_1 = 1: I(x) = Λ*(x)
        let law = PoissonTypeLaw::new(1.0, 1.0).unwrap();
        let tau = DefaultTimeModel::new(vec![1.0]).unwrap();
        for &x1 in &[1.3, 2.0, 3.0, 4.5] {
            let x = LossPath::new(vec![x1]).unwrap();
            let r = path_rate(&x, &law, &tau, TOL).unwrap();
            let want = legendre::legendre_transform(&law, x1, DEFAULT_TILT_TOL)
                .unwrap()
                .value;
            assert_relative_eq!(r.rate, want, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn degenerate_amount_two_epochs_closed_form() {
        // U ≡ 1, p = (1/2, 1/2), x = (0.4, 1.0):
        // forced φ = (0.4, 0.6), I = 0.4·log0.8 + 0.6·log1.2
        let law = AtomLaw::discrete(&[(1.0, 1.0)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.5, 0.5]).unwrap();
        let x = LossPath::new(vec![0.4, 1.0]).unwrap();
        let r = path_rate(&x, &law, &tau, TOL).unwrap();
        let want = 0.4 * 0.8_f64.ln() + 0.6 * 1.2_f64.ln();
        assert_relative_eq!(r.rate, want, epsilon = 1e-12);
        let phi = r.argmin.unwrap();
        assert_relative_eq!(phi.weights()[0], 0.4, epsilon = 1e-12);
        assert_relative_eq!(phi.weights()[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn defective_tau_requires_augmentation() {
        let law = AtomLaw::discrete(&[(1.0, 1.0)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.4, 0.3]).unwrap();
        let x = LossPath::new(vec![0.3, 0.5]).unwrap();
        match path_rate(&x, &law, &tau, TOL) {
            Err(Error::DefectiveTau { defect }) => assert_relative_eq!(defect, 0.3),
            other => panic!("expected defect error, got {other:?}"),
        }
        // augmented mean path decays at rate 0
        let mean = LossPath::mean_path(&law, &tau);
        let r = path_rate_augmented(&mean, &law, &tau, TOL).unwrap();
        assert!(r.rate.abs() <= 1e-8, "rate = {}", r.rate);
        assert!(r.augmented);
        let phi = r.argmin.unwrap();
        assert_eq!(phi.weights().len(), 3);
        assert_relative_eq!(phi.weights()[2], 0.3, epsilon = 1e-6);
    }

    #[test]
    fn rate_is_nonnegative_and_scales_monotonically() {
        let law = AtomLaw::discrete(&[(0.5, 0.4), (2.0, 0.6)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.6, 0.4]).unwrap();
        let base = LossPath::mean_path(&law, &tau);
        let mut last = 0.0;
        for &c in &[1.0, 1.2, 1.5, 1.9] {
            let x = LossPath::new(base.values().iter().map(|v| v * c).collect()).unwrap();
            let r = path_rate(&x, &law, &tau, TOL).unwrap();
            assert!(r.rate >= -1e-12);
            assert!(
                r.rate >= last - 1e-9,
                "rate not monotone along scaled mean paths"
            );
            last = r.rate;
        }
        assert!(last > 0.01);
    }

    #[test]
    fn matches_dense_grid_search_two_epochs() {
        // independent oracle: 1/400 grid over the 2-simplex
        let law = AtomLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.7, 0.3]).unwrap();
        let x = LossPath::new(vec![0.9, 1.9]).unwrap();
        let r = path_rate(&x, &law, &tau, TOL).unwrap();
        let deltas = x.increments();
        let mut best = f64::INFINITY;
        let grid = 400;
        for k in 0..=grid {
            let f1 = k as f64 / grid as f64;
            let f2 = 1.0 - f1;
            let mut v = 0.0;
            for (fi, (&di, &pi)) in [f1, f2]
                .iter()
                .zip(deltas.iter().zip(tau.probs()))
            {
                if *fi <= 0.0 {
                    if di > 0.0 {
                        v = f64::INFINITY;
                    }
                    continue;
                }
                v += fi * (fi / pi).ln();
                v += fi
                    * legendre::legendre_transform(&law, di / fi, DEFAULT_TILT_TOL)
                        .unwrap()
                        .value;
            }
            best = best.min(v);
        }
        assert!(
            r.rate <= best + 1e-9,
            "optimizer {} worse than grid {best}",
            r.rate
        );
        assert!((r.rate - best).abs() <= 2e-4, "optimizer {} vs grid {best}", r.rate);
    }

    #[test]
    fn unbounded_law_optimizer_interior() {
        let law = ExponentialLaw::new(1.0).unwrap();
        let tau = DefaultTimeModel::new(vec![0.5, 0.5]).unwrap();
        let x = LossPath::new(vec![1.2, 2.2]).unwrap();
        let r = path_rate(&x, &law, &tau, TOL).unwrap();
        assert!(r.rate.is_finite() && r.rate > 0.0);
        assert!(r.converged);
        let phi = r.argmin.unwrap();
        assert!(phi.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn infeasible_paths_report_infinite_rate() {
        // U ∈ {1, 2}: the final level must be reachable (x_N ∈ [1, 2])
        let law = AtomLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.5, 0.5]).unwrap();
        let too_high = LossPath::new(vec![1.0, 2.5]).unwrap();
        let r = path_rate(&too_high, &law, &tau, TOL).unwrap();
        assert_eq!(r.rate, f64::INFINITY);
        assert!(r.argmin.is_none());
        let too_low = LossPath::new(vec![0.2, 0.5]).unwrap();
        let r2 = path_rate(&too_low, &law, &tau, TOL).unwrap();
        assert_eq!(r2.rate, f64::INFINITY);
    }

    #[test]
    fn zero_probability_epoch_with_mass_is_infeasible() {
        let law = AtomLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let tau = DefaultTimeModel::new(vec![0.0, 1.0]).unwrap();
        let x = LossPath::new(vec![0.5, 1.5]).unwrap();
        let r = path_rate(&x, &law, &tau, TOL).unwrap();
        assert_eq!(r.rate, f64::INFINITY);
        // but a flat start is fine
        let flat = LossPath::new(vec![0.0, 1.5]).unwrap();
        let r2 = path_rate(&flat, &law, &tau, TOL).unwrap();
        assert!(r2.rate.is_finite());
    }

    #[test]
    fn path_validation() {
        assert!(LossPath::new(vec![]).is_err());
        assert!(LossPath::new(vec![-0.1]).is_err());
        assert!(LossPath::new(vec![0.5, 0.4]).is_err());
        assert!(LossPath::new(vec![f64::NAN]).is_err());
        let law = AtomLaw::discrete(&[(1.0, 1.0)]).unwrap();
        let tau = DefaultTimeModel::new(vec![1.0]).unwrap();
        let x = LossPath::new(vec![0.5, 0.6]).unwrap();
        assert!(path_rate(&x, &law, &tau, TOL).is_err()); // length mismatch
    }

    #[test]
    fn mixture_decay_picks_max_signed_rate() {
        let rates = vec![
            ("A".to_string(), -0.5),
            ("B".to_string(), -0.2),
            ("C".to_string(), -0.9),
        ];
        let (label, rate) = mixture_decay(&rates).unwrap();
        assert_eq!(label, "B");
        assert_relative_eq!(rate, -0.2);
        // first occurrence wins ties
        let tied = vec![("X".to_string(), -0.3), ("Y".to_string(), -0.3)];
        assert_eq!(mixture_decay(&tied).unwrap().0, "X");
        assert!(mixture_decay(&[]).is_err());
        assert!(mixture_decay(&[("Z".to_string(), 0.1)]).is_err());
        // impossible scenarios carry −∞
        let with_inf = vec![
            ("gone".to_string(), f64::NEG_INFINITY),
            ("slow".to_string(), -0.01),
        ];
        assert_eq!(mixture_decay(&with_inf).unwrap().0, "slow");
    }
}
