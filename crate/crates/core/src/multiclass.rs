//! Heterogeneous portfolios: m obligor classes with fractions a_j, indexed
//! by class (fractions are fixed portfolio composition, constant over
//! time), each with its own amount law and default-time law. The
//! aggregated path rate is
//!
//!   inf Σ_j a_j Σ_i φ_i^j ( log(φ_i^j / p_i^j) + Λ_j*( v_i^j / (a_j φ_i^j) ) )
//!
//! jointly over per-class simplex profiles φ^j and nonnegative splits v^j
//! of each epoch increment, Σ_j v_i^j = Δx_i. Both partial problems are
//! convex: the φ-step is m independent single-class solves and the v-step
//! equalizes tilted means across classes per epoch (a monotone root).

use crate::error::{Error, Result};
use crate::law::LossLaw;
use crate::path_rate::{self, LossPath, SimplexPoint};
use crate::default_times::{DefaultTimeModel, DEFECT_TOL};
use serde::Serialize;
use std::sync::Arc;

const MAX_ROUNDS: usize = 500;
const MAX_POLISH_PASSES: usize = 50;

pub struct ClassSpec {
    pub fraction: f64,
    pub law: Arc<dyn LossLaw>,
    pub tau: DefaultTimeModel,
}

pub struct MultiClassSpec {
    classes: Vec<ClassSpec>,
}

impl MultiClassSpec {
    pub fn new(classes: Vec<ClassSpec>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::invalid_model("no obligor classes"));
        }
        let mut total = 0.0;
        for (j, c) in classes.iter().enumerate() {
            if !c.fraction.is_finite() || c.fraction <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "class {j} fraction {} must be positive",
                    c.fraction
                )));
            }
            total += c.fraction;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel(format!(
                "class fractions sum to {total}, not 1 within 1e-10"
            )));
        }
        let n0 = classes[0].tau.grid_len();
        for (j, c) in classes.iter().enumerate() {
            if c.tau.grid_len() != n0 {
                return Err(Error::InvalidModel(format!(
                    "class {j} has {} epochs, class 0 has {n0}; all classes share the grid",
                    c.tau.grid_len()
                )));
            }
        }
        Ok(MultiClassSpec { classes })
    }

    pub fn classes(&self) -> &[ClassSpec] {
        &self.classes
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiClassResult {
    pub rate: f64,
    /// Per-class epoch profiles (augmented by a final never-default epoch
    /// for defective classes).
    pub class_weights: Option<Vec<SimplexPoint>>,
    /// Per-class increment shares v_i^j on the original grid.
    pub splits: Option<Vec<Vec<f64>>>,
    pub rounds: usize,
    pub converged: bool,
}

pub fn multiclass_rate(x: &LossPath, spec: &MultiClassSpec, tol: f64) -> Result<MultiClassResult> {
    let n_epochs = spec.classes[0].tau.grid_len();
    if x.len() != n_epochs {
        return Err(Error::Argument(format!(
            "path has {} levels but the class grids have {n_epochs} epochs",
            x.len()
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance {tol} must be positive")));
    }
    let deltas = x.increments();
    let m = spec.classes.len();

    // proportional initial split, adjusted toward capacity when a bounded
    // class cannot carry its share
    let mut v: Vec<Vec<f64>> = spec
        .classes
        .iter()
        .map(|c| deltas.iter().map(|d| c.fraction * d).collect())
        .collect();

    let mut value = f64::INFINITY;
    let mut rounds = 0usize;
    let mut converged = false;
    let mut rebalanced = false;
    let mut polish_budget = MAX_POLISH_PASSES;
    let inner_tol = (0.1 * tol).max(1e-12);

    while rounds < MAX_ROUNDS {
        rounds += 1;
        // φ-step: single-class solves on the current split
        let mut new_value = 0.0;
        let mut new_phis = Vec::with_capacity(m);
        let mut infeasible = false;
        for (j, c) in spec.classes.iter().enumerate() {
            let sol = class_solve(c, &v[j], inner_tol)?;
            if !sol.0.is_finite() {
                infeasible = true;
                break;
            }
            new_value += c.fraction * sol.0;
            new_phis.push(sol.1);
        }
        if infeasible {
            // one retry from a capacity-aware split; a second failure means
            // some epoch demands more than the classes can jointly carry
            if !rebalanced && rebalance_to_capacity(spec, &deltas, &mut v).is_some() {
                rebalanced = true;
                rounds -= 1;
                continue;
            }
            return Ok(MultiClassResult {
                rate: f64::INFINITY,
                class_weights: None,
                splits: None,
                rounds,
                converged: true,
            });
        }
        // v-step: per-epoch reallocation at fixed φ
        for (i, &delta) in deltas.iter().enumerate() {
            split_epoch(spec, &new_phis, i, delta, &mut v)?;
        }

        if (value - new_value).abs() <= tol * new_value.abs().max(1.0) {
            value = new_value;
            // the alternation can stall when a class's profile is pinned to
            // its split (degenerate amount law): transfers between classes
            // then need a joint move, found by direct pairwise search
            if polish_budget > 0 {
                polish_budget -= 1;
                let polished = polish_splits(spec, &deltas, &mut v, inner_tol)?;
                if polished < value - 0.1 * tol * value.abs().max(1.0) {
                    value = polished;
                    continue; // re-run the alternation from the better split
                }
            }
            converged = true;
            break;
        }
        value = new_value;
    }

    // final φ-step so the reported profiles match the final split
    let mut final_value = 0.0;
    let mut final_phis = Vec::with_capacity(m);
    for (j, c) in spec.classes.iter().enumerate() {
        let sol = class_solve(c, &v[j], inner_tol)?;
        if !sol.0.is_finite() {
            return Ok(MultiClassResult {
                rate: f64::INFINITY,
                class_weights: None,
                splits: None,
                rounds,
                converged: true,
            });
        }
        final_value += c.fraction * sol.0;
        final_phis.push(sol.1);
    }
    value = final_value.min(value);

    let class_weights = final_phis
        .iter()
        .map(|p| SimplexPoint::new(p.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiClassResult {
        rate: value,
        class_weights: Some(class_weights),
        splits: Some(v),
        rounds,
        converged,
    })
}

/// One pass of pairwise split transfers: for every epoch and class pair,
/// golden-section the mass moved between the two classes, scoring each
/// candidate by re-solving both classes in full. Returns the total value
/// after the pass. This is plain coordinate descent on the convex master
/// problem in v, so it escapes fixed points of the φ/v alternation.
fn polish_splits(
    spec: &MultiClassSpec,
    deltas: &[f64],
    v: &mut [Vec<f64>],
    inner_tol: f64,
) -> Result<f64> {
    let m = spec.classes.len();
    let mut class_vals = vec![0.0; m];
    for (j, c) in spec.classes.iter().enumerate() {
        class_vals[j] = c.fraction * class_solve(c, &v[j], inner_tol)?.0;
    }
    for (i, &delta) in deltas.iter().enumerate() {
        if delta <= 0.0 {
            continue;
        }
        for j in 0..m {
            for k in (j + 1)..m {
                let base = class_vals[j] + class_vals[k];
                if !base.is_finite() {
                    continue;
                }
                // t > 0 moves epoch-i mass from class k to class j
                let (lo, hi) = (-v[j][i], v[k][i]);
                if hi - lo <= 1e-14 * delta.max(1.0) {
                    continue;
                }
                let eval = |t: f64| -> Result<(f64, f64, f64)> {
                    let mut vj = v[j].clone();
                    let mut vk = v[k].clone();
                    vj[i] += t;
                    vk[i] -= t;
                    let fj = spec.classes[j].fraction * class_solve(&spec.classes[j], &vj, inner_tol)?.0;
                    let fk = spec.classes[k].fraction * class_solve(&spec.classes[k], &vk, inner_tol)?.0;
                    Ok((fj + fk, fj, fk))
                };
                let (t_best, val_best) = golden_min(|t| Ok(eval(t)?.0), lo, hi, 60)?;
                if val_best < base - 1e-15 * base.abs().max(1.0) {
                    let (_, fj, fk) = eval(t_best)?;
                    v[j][i] += t_best;
                    v[k][i] -= t_best;
                    class_vals[j] = fj;
                    class_vals[k] = fk;
                }
            }
        }
    }

    // Two-epoch swaps: a class with a degenerate amount law conserves its
    // row sum Σ_i v_j[i] (its profile is rigidly φ = v/(a·u)), so every
    // single-epoch transfer is infeasible for it. Moving t from k to j in
    // one epoch and j to k in another preserves both row sums.
    let n_ep = deltas.len();
    for i1 in 0..n_ep {
        if deltas[i1] <= 0.0 {
            continue;
        }
        for i2 in (i1 + 1)..n_ep {
            if deltas[i2] <= 0.0 {
                continue;
            }
            for j in 0..m {
                for k in (j + 1)..m {
                    let base = class_vals[j] + class_vals[k];
                    if !base.is_finite() {
                        continue;
                    }
                    // t > 0: epoch i1 mass k→j, epoch i2 mass j→k
                    let lo = -v[j][i1].min(v[k][i2]);
                    let hi = v[k][i1].min(v[j][i2]);
                    if hi - lo <= 1e-14 * (deltas[i1] + deltas[i2]).max(1.0) {
                        continue;
                    }
                    let eval = |t: f64| -> Result<(f64, f64, f64)> {
                        let mut vj = v[j].clone();
                        let mut vk = v[k].clone();
                        vj[i1] += t;
                        vk[i1] -= t;
                        vj[i2] -= t;
                        vk[i2] += t;
                        let fj = spec.classes[j].fraction
                            * class_solve(&spec.classes[j], &vj, inner_tol)?.0;
                        let fk = spec.classes[k].fraction
                            * class_solve(&spec.classes[k], &vk, inner_tol)?.0;
                        Ok((fj + fk, fj, fk))
                    };
                    let (t_best, val_best) = golden_min(|t| Ok(eval(t)?.0), lo, hi, 60)?;
                    if val_best < base - 1e-15 * base.abs().max(1.0) {
                        let (_, fj, fk) = eval(t_best)?;
                        v[j][i1] += t_best;
                        v[k][i1] -= t_best;
                        v[j][i2] -= t_best;
                        v[k][i2] += t_best;
                        class_vals[j] = fj;
                        class_vals[k] = fk;
                    }
                }
            }
        }
    }
    Ok(class_vals.iter().sum())
}

/// Golden-section minimization on [a, b]; tolerates +∞ values near the
/// endpoints (the minimizer of the convex section is interior or at an
/// endpoint, both found by the shrinking bracket).
fn golden_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        if b - a <= 1e-13 * b.abs().max(1.0) {
            break;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Single-class objective a_j·Σ φ(log(φ/p) + Λ*(v/(a φ))) divided by a_j;
/// defective classes get the entropy-only virtual epoch.
fn class_solve(c: &ClassSpec, v: &[f64], tol: f64) -> Result<(f64, Vec<f64>)> {
    let mut buckets: Vec<path_rate::Bucket> = c
        .tau
        .probs()
        .iter()
        .zip(v)
        .map(|(&p, &vi)| path_rate::Bucket {
            p,
            delta: vi / c.fraction,
            entropy_only: false,
        })
        .collect();
    if c.tau.defect() > DEFECT_TOL {
        buckets.push(path_rate::Bucket {
            p: c.tau.defect(),
            delta: 0.0,
            entropy_only: true,
        });
    }
    let sol = path_rate::minimize_buckets(c.law.as_ref(), &buckets, tol)?;
    Ok((sol.value, sol.phi.unwrap_or_default()))
}

/// Reallocate epoch i's increment across classes at fixed φ by equalizing
/// tilted means: v_j = w_j·Λ_j'(η) with Σ v_j = Δ, w_j = a_j·φ_i^j.
fn split_epoch(
    spec: &MultiClassSpec,
    phis: &[Vec<f64>],
    i: usize,
    delta: f64,
    v: &mut [Vec<f64>],
) -> Result<()> {
    let m = spec.classes.len();
    if delta <= 0.0 {
        for vj in v.iter_mut() {
            vj[i] = 0.0;
        }
        return Ok(());
    }
    let weights: Vec<f64> = (0..m)
        .map(|j| spec.classes[j].fraction * phis[j].get(i).copied().unwrap_or(0.0))
        .collect();
    let active: Vec<usize> = (0..m).filter(|&j| weights[j] > 1e-300).collect();
    if active.is_empty() {
        return Ok(()); // nothing to reallocate; φ-step will price this split
    }
    if active.len() == 1 {
        let j = active[0];
        for (k, vj) in v.iter_mut().enumerate() {
            vj[i] = if k == j { delta } else { 0.0 };
        }
        return Ok(());
    }
    // degenerate classes are forced to w·u; the residual is equalized
    let mut fixed = 0.0;
    let mut free: Vec<usize> = Vec::new();
    for &j in &active {
        let law = &spec.classes[j].law;
        let sup = law.ess_sup();
        if sup.is_finite() && sup - law.ess_inf() <= 1e-12 * sup.abs().max(1.0) {
            v[j][i] = weights[j] * law.mean();
            fixed += v[j][i];
        } else {
            free.push(j);
        }
    }
    let residual = delta - fixed;
    if free.is_empty() {
        return Ok(()); // fully degenerate; φ-step prices feasibility
    }
    if residual <= 0.0 {
        for &j in &free {
            v[j][i] = 0.0;
        }
        return Ok(());
    }

    let g = |eta: f64| -> f64 {
        free.iter()
            .map(|&j| {
                let law = &spec.classes[j].law;
                match law.cgf_derivs(eta) {
                    Ok(d) if d.mean.is_finite() => weights[j] * d.mean,
                    _ => f64::INFINITY,
                }
            })
            .sum()
    };
    // bracket the monotone equation g(η) = residual
    let mut lo = -1.0;
    while g(lo) > residual {
        lo *= 2.0;
        if lo < -1e9 {
            break; // residual below every attainable mean; clamp at lo
        }
    }
    let mut hi: f64 = 1.0;
    let cap = free
        .iter()
        .map(|&j| spec.classes[j].law.theta_sup())
        .fold(f64::INFINITY, f64::min);
    loop {
        let probe = if cap.is_finite() { hi.min(0.999 * cap) } else { hi };
        if g(probe) >= residual {
            hi = probe;
            break;
        }
        if cap.is_finite() && probe >= 0.999 * cap - 1e-12 {
            hi = probe;
            break; // residual above every attainable mean; clamp at hi
        }
        hi *= 2.0;
        if hi > 1e9 {
            break;
        }
    }
    let mut eta = 0.5 * (lo + hi);
    for _ in 0..200 {
        eta = 0.5 * (lo + hi);
        let val = g(eta);
        if (val - residual).abs() <= 1e-12 * residual.max(1.0) {
            break;
        }
        if val > residual {
            hi = eta;
        } else {
            lo = eta;
        }
        if hi - lo <= f64::EPSILON * eta.abs().max(1.0) {
            break;
        }
    }
    let mut total = 0.0;
    let mut shares = vec![0.0; free.len()];
    for (k, &j) in free.iter().enumerate() {
        let law = &spec.classes[j].law;
        let mean = law
            .cgf_derivs(eta)
            .map(|d| d.mean)
            .unwrap_or(law.ess_sup());
        shares[k] = weights[j] * mean.max(law.ess_inf());
        total += shares[k];
    }
    if total > 0.0 {
        for (k, &j) in free.iter().enumerate() {
            v[j][i] = residual * shares[k] / total;
        }
        // keep every class within its current-profile capacity so the next
        // φ-step is guaranteed a feasible point (its current profile); the
        // split must still sum to the residual, so when the excess has no
        // absorber the clamp is abandoned and the φ-step prices the demand
        let unclamped: Vec<f64> = free.iter().map(|&j| v[j][i]).collect();
        for _ in 0..4 {
            let mut excess = 0.0;
            let mut headroom: Vec<(usize, f64)> = Vec::new();
            for &j in &free {
                let cap = weights[j] * spec.classes[j].law.ess_sup();
                if !cap.is_finite() {
                    headroom.push((j, f64::INFINITY));
                    continue;
                }
                let limit = cap * (1.0 - 1e-8);
                if v[j][i] > limit {
                    excess += v[j][i] - limit;
                    v[j][i] = limit;
                } else if v[j][i] < limit {
                    headroom.push((j, limit - v[j][i]));
                }
            }
            if excess <= 0.0 || headroom.is_empty() {
                break;
            }
            let room: f64 = headroom.iter().map(|h| h.1.min(1e300)).sum();
            for (j, h) in headroom {
                v[j][i] += excess * h.min(1e300) / room;
            }
        }
        let clamped_sum: f64 = free.iter().map(|&j| v[j][i]).sum();
        if (clamped_sum - residual).abs() > 1e-9 * residual.max(1.0) {
            for (k, &j) in free.iter().enumerate() {
                v[j][i] = unclamped[k];
            }
        }
    }
    Ok(())
}

/// Fallback initial split when a bounded class cannot carry a proportional
/// share: allocate by per-class capacity a_j·esssup_j. Returns None when the
/// increment exceeds the total capacity (genuinely infeasible).
fn rebalance_to_capacity(
    spec: &MultiClassSpec,
    deltas: &[f64],
    v: &mut [Vec<f64>],
) -> Option<()> {
    for (i, &delta) in deltas.iter().enumerate() {
        if delta <= 0.0 {
            continue;
        }
        let caps: Vec<f64> = spec
            .classes
            .iter()
            .map(|c| c.fraction * c.law.ess_sup())
            .collect();
        if caps.iter().any(|c| c.is_infinite()) {
            // give bounded classes their mean share, the rest to unbounded
            let mut assigned = 0.0;
            for (j, c) in spec.classes.iter().enumerate() {
                if caps[j].is_finite() {
                    v[j][i] = (c.fraction * c.law.mean()).min(0.5 * caps[j]).min(delta);
                    assigned += v[j][i];
                }
            }
            let unbounded: Vec<usize> =
                (0..caps.len()).filter(|&j| caps[j].is_infinite()).collect();
            let rest = (delta - assigned).max(0.0);
            for &j in &unbounded {
                v[j][i] = rest / unbounded.len() as f64;
            }
        } else {
            let total: f64 = caps.iter().sum();
            if delta > total {
                return None;
            }
            for j in 0..caps.len() {
                v[j][i] = delta * caps[j] / total;
            }
        }
    }
    Some(())
}
