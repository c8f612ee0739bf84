//! Exact finite-portfolio probabilities for lattice-valued amount laws.
//!
//! When every amount atom sits on a common lattice, the portfolio loss at
//! any epoch lives on multiples of that unit and marginal, barrier-crossing
//! and increment-crossing probabilities can be computed exactly by
//! convolution and dynamic programming over (survivors, accumulated loss).
//! State space is bounded by a configurable cap; anything larger is
//! refused with advice to fall back to simulation.

use crate::default_times::DefaultTimeModel;
use crate::error::{Error, Result};
use crate::law::{lattice, LossLaw};
use crate::barrier::{Barrier, IncrementBarrier};
use std::sync::Arc;

pub const DEFAULT_STATE_CAP: u64 = 2_000_000;

/// Relative snap when mapping a real threshold onto the loss lattice: a
/// value within 1e-9 of a lattice point is treated as on it.
const THRESHOLD_SNAP: f64 = 1e-9;

/// A portfolio whose amount law has finite support on a common lattice.
#[derive(Debug)]
pub struct LatticePortfolio {
    n: u64,
    tau: DefaultTimeModel,
    state_cap: u64,
    unit: f64,
    /// (lattice index, probability) per amount atom; an atom at 0 gets index 0.
    atom_idx: Vec<(u64, f64)>,
    max_idx: u64,
}

impl LatticePortfolio {
    pub fn new(n: u64, law: &Arc<dyn LossLaw>, tau: DefaultTimeModel) -> Result<Self> {
        Self::with_cap(n, law, tau, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(
        n: u64,
        law: &Arc<dyn LossLaw>,
        tau: DefaultTimeModel,
        state_cap: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("portfolio size must be at least 1"));
        }
        let atoms = law.atoms().ok_or_else(|| {
            Error::invalid_model(format!(
                "exact evaluation needs an amount law with finite discrete support; \
                 the {} family has none — use simulation instead",
                law.family()
            ))
        })?;
        let positive: Vec<f64> = atoms
            .iter()
            .map(|a| a.value)
            .filter(|&v| v > 0.0)
            .collect();
        let unit = if positive.is_empty() {
            1.0
        } else {
            lattice::rational_gcd(&positive).ok_or_else(|| {
                Error::invalid_model(
                    "amount atoms are not commensurable on a lattice; \
                     exact evaluation unavailable — use simulation instead",
                )
            })?
        };
        let mut atom_idx = Vec::with_capacity(atoms.len());
        let mut max_idx = 0u64;
        for a in atoms {
            let r = a.value / unit;
            let k = r.round();
            if (r - k).abs() > THRESHOLD_SNAP * r.abs().max(1.0) || k < 0.0 {
                return Err(Error::invalid_model(format!(
                    "amount atom {} is not a multiple of the lattice unit {unit}",
                    a.value
                )));
            }
            let idx = k as u64;
            max_idx = max_idx.max(idx);
            atom_idx.push((idx, a.prob));
        }
        let required = n
            .checked_mul(max_idx)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| Error::argument("portfolio loss lattice overflows"))?;
        if required > state_cap {
            return Err(Error::Capacity {
                required,
                cap: state_cap,
                advice: "shrink the portfolio, coarsen the amounts, or use simulation".into(),
            });
        }
        Ok(LatticePortfolio {
            n,
            tau,
            state_cap,
            unit,
            atom_idx,
            max_idx,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Lattice unit of a single amount; total loss lives on multiples of it.
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn grid_len(&self) -> usize {
        self.tau.grid_len()
    }

    /// Amount pmf on lattice indices 0..=max_idx.
    fn amount_pmf(&self) -> Vec<f64> {
        let mut pmf = vec![0.0; self.max_idx as usize + 1];
        for &(idx, p) in &self.atom_idx {
            pmf[idx as usize] += p;
        }
        pmf
    }

    /// Index of the smallest lattice point at or above x (snapping near-hits).
    fn threshold_index(&self, x: f64) -> u64 {
        threshold_index(x, self.unit)
    }
}

fn threshold_index(x: f64, unit: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let r = x / unit;
    let k = r.round();
    let snapped = if (r - k).abs() <= THRESHOLD_SNAP * r.abs().max(1.0) {
        k
    } else {
        r.ceil()
    };
    if snapped >= u64::MAX as f64 {
        u64::MAX
    } else {
        snapped as u64
    }
}

/// A distribution on multiples of a lattice unit: pmf[i] = P(X = i·unit).
#[derive(Debug, Clone)]
pub struct LatticeDist {
    unit: f64,
    pmf: Vec<f64>,
}

impl LatticeDist {
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        let mut sum = 0.0;
        let mut c = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            let term = i as f64 * p - c;
            let t = sum + term;
            c = (t - sum) - term;
            sum = t;
        }
        sum * self.unit
    }

    /// P(X ≥ x), snapping x onto the lattice within relative 1e-9.
    pub fn tail_from(&self, x: f64) -> f64 {
        let start = threshold_index(x, self.unit).min(self.pmf.len() as u64) as usize;
        let mut sum = 0.0;
        let mut c = 0.0;
        for &p in &self.pmf[start..] {
            let term = p - c;
            let t = sum + term;
            c = (t - sum) - term;
            sum = t;
        }
        sum.clamp(0.0, 1.0)
    }
}

/// Distribution of the portfolio loss when each obligor contributes its
/// amount with probability w, independently: the n-fold convolution of the
/// mixed single-obligor pmf.
fn window_marginal(pf: &LatticePortfolio, w: f64) -> LatticeDist {
    let w = w.clamp(0.0, 1.0);
    let mut base = vec![0.0; pf.max_idx as usize + 1];
    base[0] = 1.0 - w;
    for &(idx, p) in &pf.atom_idx {
        base[idx as usize] += w * p;
    }
    let nnz: Vec<(usize, f64)> = base
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i, p))
        .collect();
    let full = pf.n as usize * pf.max_idx as usize + 1;
    let mut cur = vec![0.0; full];
    cur[0] = 1.0;
    let mut reach = 0usize; // highest index with possible mass so far
    for _ in 0..pf.n {
        let mut next = vec![0.0; full];
        for i in 0..=reach {
            let m = cur[i];
            if m == 0.0 {
                continue;
            }
            for &(off, p) in &nnz {
                next[i + off] += m * p;
            }
        }
        reach = (reach + pf.max_idx as usize).min(full - 1);
        cur = next;
    }
    LatticeDist {
        unit: pf.unit,
        pmf: cur,
    }
}

/// Exact distribution of the loss at epoch t (1-based, on the grid).
pub fn exact_marginal(pf: &LatticePortfolio, t: u32) -> Result<LatticeDist> {
    if t == 0 || t as usize > pf.tau.grid_len() {
        return Err(Error::Argument(format!(
            "epoch t = {t} is not on the grid 1..={}",
            pf.tau.grid_len()
        )));
    }
    Ok(window_marginal(pf, pf.tau.cum(t as usize)))
}

/// Exact P(∃ t ≤ horizon: L(t) ≥ n·ζ(t)).
pub fn exact_barrier(pf: &LatticePortfolio, barrier: &Barrier) -> Result<f64> {
    let horizon = barrier.horizon();
    if horizon != pf.tau.grid_len() {
        return Err(Error::Argument(format!(
            "barrier tabulates {horizon} epochs but the default grid has {}",
            pf.tau.grid_len()
        )));
    }
    if barrier.levels().iter().any(|&z| z <= 0.0) {
        return Ok(1.0); // loss starts at 0, so a nonpositive threshold is crossed surely
    }
    let nf = pf.n as f64;
    let thr: Vec<u64> = (1..=horizon)
        .map(|t| pf.threshold_index(nf * barrier.level(t)))
        .collect();
    // nondecreasing loss vs nonincreasing thresholds: crossing anywhere is
    // equivalent to crossing at the final epoch
    if barrier
        .levels()
        .windows(2)
        .all(|w| w[1] <= w[0])
    {
        let dist = window_marginal(pf, pf.tau.cum(horizon));
        return Ok(dist.tail_from(nf * barrier.level(horizon)));
    }

    let max_thr = *thr.iter().max().expect("nonempty barrier");
    let loss_dim = max_thr.min(pf.n * pf.max_idx + 1); // tracked ℓ < max_thr
    let states = (pf.n + 1) * (loss_dim + 1);
    let conv_cache = pf.n * pf.n * pf.max_idx / 2 + pf.n;
    let required = states + conv_cache;
    if required > pf.state_cap {
        return Err(Error::Capacity {
            required,
            cap: pf.state_cap,
            advice: "use simulation for this portfolio/barrier combination".into(),
        });
    }

    let amount = pf.amount_pmf();
    // d-fold convolutions of the amount pmf, built on demand
    let mut upow: Vec<Vec<f64>> = vec![vec![1.0]];
    let n = pf.n as usize;
    let ld = loss_dim as usize + 1;
    // prob[k * ld + ℓ] = P(k survivors, loss index ℓ, not yet crossed)
    let mut cur = vec![0.0; (n + 1) * ld];
    cur[n * ld] = 1.0;
    let mut crossed = 0.0;
    let mut crossed_c = 0.0; // Kahan carry
    for (j, &thr_j) in thr.iter().enumerate() {
        let q = pf.tau.hazard(j + 1);
        let mut next = vec![0.0; (n + 1) * ld];
        for k in 0..=n {
            // binomial weights over d defaults among k survivors
            let weights = binomial_weights(k, q);
            while upow.len() <= k {
                let prev = upow.last().expect("seeded with the 0-fold");
                upow.push(convolve(prev, &amount));
            }
            for l in 0..ld {
                let m = cur[k * ld + l];
                if m == 0.0 {
                    continue;
                }
                for (d, &wd) in weights.iter().enumerate() {
                    if wd == 0.0 {
                        continue;
                    }
                    for (off, &pu) in upow[d].iter().enumerate() {
                        if pu == 0.0 {
                            continue;
                        }
                        let contrib = m * wd * pu;
                        let l2 = l + off;
                        if (l2 as u64) >= thr_j {
                            let term = contrib - crossed_c;
                            let t = crossed + term;
                            crossed_c = (t - crossed) - term;
                            crossed = t;
                        } else {
                            next[(k - d) * ld + l2] += contrib;
                        }
                    }
                }
            }
        }
        cur = next;
    }
    Ok(crossed.clamp(0.0, 1.0))
}

/// Exact P(∃ tabulated (s,t): L(t) − L(s) ≥ n·ξ(s,t)).
pub fn exact_increment(pf: &LatticePortfolio, table: &IncrementBarrier) -> Result<f64> {
    let grid = pf.tau.grid_len();
    if table.horizon() as usize > grid {
        return Err(Error::Argument(format!(
            "increment table reaches t = {} but the grid ends at {grid}",
            table.horizon()
        )));
    }
    if table.entries().iter().any(|e| e.level <= 0.0) {
        return Ok(1.0);
    }
    let nf = pf.n as f64;
    if table.entries().len() == 1 {
        let e = table.entries()[0];
        let w = pf.tau.cum(e.t as usize) - pf.tau.cum(e.s as usize);
        let dist = window_marginal(pf, w);
        return Ok(dist.tail_from(nf * e.level));
    }
    // joint law over epochs is needed: enumerate default-count/loss splits
    const ENUM_GRID_MAX: usize = 6;
    if grid > ENUM_GRID_MAX {
        return Err(Error::Capacity {
            required: (grid as u64).saturating_pow(pf.n as u32),
            cap: pf.state_cap,
            advice: format!(
                "joint increment tables are enumerated exactly only up to {ENUM_GRID_MAX} epochs; \
                 use simulation"
            ),
        });
    }
    let thr: Vec<(usize, usize, u64)> = table
        .entries()
        .iter()
        .map(|e| (e.s as usize, e.t as usize, pf.threshold_index(nf * e.level)))
        .collect();
    let amount = pf.amount_pmf();
    let n = pf.n as usize;
    let mut upow: Vec<Vec<f64>> = vec![vec![1.0]];
    while upow.len() <= n {
        let prev = upow.last().expect("seeded");
        upow.push(convolve(prev, &amount));
    }
    let hazards: Vec<f64> = (1..=grid).map(|j| pf.tau.hazard(j)).collect();

    struct Enum<'a> {
        grid: usize,
        hazards: &'a [f64],
        upow: &'a [Vec<f64>],
        thr: &'a [(usize, usize, u64)],
        budget: u64,
        visited: u64,
        cap: u64,
        total: f64,
        kahan: f64,
    }
    impl Enum<'_> {
        fn crossed_by(&self, cum: &[u64], upto: usize) -> bool {
            self.thr
                .iter()
                .any(|&(s, t, h)| t <= upto && cum[t] - cum[s] >= h)
        }
        fn walk(&mut self, j: usize, survivors: usize, cum: &mut Vec<u64>, prob: f64) -> Result<()> {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::Capacity {
                    required: self.visited,
                    cap: self.cap,
                    advice: "enumeration exceeded the state cap; use simulation".into(),
                });
            }
            if prob == 0.0 {
                return Ok(());
            }
            let here = *cum.last().expect("cum starts at epoch 0");
            if self.crossed_by(cum, j) {
                let term = prob - self.kahan;
                let t = self.total + term;
                self.kahan = (t - self.total) - term;
                self.total = t;
                return Ok(());
            }
            if j == self.grid {
                return Ok(());
            }
            let weights = binomial_weights(survivors, self.hazards[j]);
            for (d, &wd) in weights.iter().enumerate() {
                if wd == 0.0 {
                    continue;
                }
                for (off, &pu) in self.upow[d].iter().enumerate() {
                    if pu == 0.0 {
                        continue;
                    }
                    cum.push(here + off as u64);
                    self.walk(j + 1, survivors - d, cum, prob * wd * pu)?;
                    cum.pop();
                }
            }
            Ok(())
        }
    }

    let mut e = Enum {
        grid,
        hazards: &hazards,
        upow: &upow,
        thr: &thr,
        budget: pf.state_cap,
        visited: 0,
        cap: pf.state_cap,
        total: 0.0,
        kahan: 0.0,
    };
    let mut cum = vec![0u64];
    e.walk(0, n, &mut cum, 1.0)?;
    Ok(e.total.clamp(0.0, 1.0))
}

/// Binomial(k, q) pmf by the stable ratio recurrence.
fn binomial_weights(k: usize, q: f64) -> Vec<f64> {
    let mut w = vec![0.0; k + 1];
    if q >= 1.0 {
        w[k] = 1.0;
        return w;
    }
    if q <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    let ratio = q / (1.0 - q);
    w[0] = (1.0 - q).powi(k as i32);
    for d in 0..k {
        w[d + 1] = w[d] * ((k - d) as f64) / ((d + 1) as f64) * ratio;
    }
    w
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
