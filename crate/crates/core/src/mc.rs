//! Monte Carlo estimation of barrier and increment crossings.
//!
//! Two estimators share one reproducible stream layout: each replication
//! gets its own counter-based stream (seed fixed, stream = replication
//! index), so runs are bit-reproducible, independent of worker count, and
//! splittable — workers take disjoint replication ranges and their
//! partial sums combine exactly.
//!
//! The plain estimator averages crossing indicators. The tilted estimator
//! reweights each obligor's (epoch, amount) pair toward the dominating
//! epoch/window found by the asymptotic analysis and multiplies the
//! indicator by the exact likelihood ratio exp(−σ·L + n·Λ(σ)), which
//! collapses the variance precisely where plain sampling starves.

use crate::asymptotics::Optimum;
use crate::barrier::{Barrier, IncrementBarrier};
use crate::default_times::DefaultTimeModel;
use crate::error::{Error, Result};
use crate::law::{Cgf, CompositeCgf, LossLaw};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::sync::Arc;

/// Relative slack when comparing a simulated loss against a threshold, so
/// lattice-valued losses that hit the level exactly are not lost to
/// floating-point summation order.
const CROSSING_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethodKind {
    Plain,
    Tilted,
}

/// Estimator choice; the tilted variant carries the dominating point and
/// attaining tilt from the asymptotic analysis.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McMethod {
    Plain,
    Tilted { at: Optimum, sigma: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: u64,
    pub seed: u64,
    pub method: McMethodKind,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McParams {
    pub n: u64,
    pub replications: u64,
    pub seed: u64,
    /// Stream index of the first replication; workers splitting a run give
    /// each worker a disjoint [first, first + replications) range.
    pub first_replication: u64,
}

impl McParams {
    pub fn new(n: u64, replications: u64, seed: u64) -> Self {
        McParams {
            n,
            replications,
            seed,
            first_replication: 0,
        }
    }
}

/// One independent generator per replication index.
fn rep_rng(seed: u64, replication: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// First 1-based epoch whose cumulative mass reaches u, or None past the grid.
fn draw_epoch(cum: &[f64], u: f64) -> Option<usize> {
    let idx = cum.partition_point(|&c| c < u);
    (idx < cum.len()).then(|| idx + 1)
}

/// Raw (unnormalized) loss path over the grid for one replication.
fn sample_raw_path(
    law: &Arc<dyn LossLaw>,
    cum: &[f64],
    n: u64,
    rng: &mut dyn RngCore,
) -> Vec<f64> {
    let grid = cum.len();
    let mut inc = vec![0.0; grid];
    for _ in 0..n {
        let u: f64 = rng.gen();
        if let Some(j) = draw_epoch(cum, u) {
            inc[j - 1] += law.sample(rng);
        }
    }
    let mut acc = 0.0;
    for v in inc.iter_mut() {
        acc += *v;
        *v = acc;
    }
    inc
}

/// Iterator of simulated per-capita loss paths (L(1)/n, …, L(N)/n), one per
/// replication, each on its own stream.
pub struct PathStream {
    law: Arc<dyn LossLaw>,
    cum: Vec<f64>,
    n: u64,
    seed: u64,
    next: u64,
    end: u64,
}

impl Iterator for PathStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.end {
            return None;
        }
        let mut rng = rep_rng(self.seed, self.next);
        self.next += 1;
        let mut path = sample_raw_path(&self.law, &self.cum, self.n, &mut rng);
        let nf = self.n as f64;
        for v in path.iter_mut() {
            *v /= nf;
        }
        Some(path)
    }
}

pub fn simulate_paths(
    law: &Arc<dyn LossLaw>,
    tau: &DefaultTimeModel,
    params: &McParams,
) -> Result<PathStream> {
    validate_params(params)?;
    Ok(PathStream {
        law: law.clone(),
        cum: cum_vector(tau),
        n: params.n,
        seed: params.seed,
        next: params.first_replication,
        end: params.first_replication + params.replications,
    })
}

fn cum_vector(tau: &DefaultTimeModel) -> Vec<f64> {
    (1..=tau.grid_len()).map(|t| tau.cum(t)).collect()
}

fn validate_params(params: &McParams) -> Result<()> {
    if params.n == 0 {
        return Err(Error::argument("portfolio size must be at least 1"));
    }
    if params.replications == 0 {
        return Err(Error::argument("at least one replication is required"));
    }
    Ok(())
}

fn crosses(loss: f64, threshold: f64) -> bool {
    loss >= threshold - CROSSING_SNAP * threshold.abs().max(1.0)
}

fn barrier_hit(path: &[f64], n: f64, barrier: &Barrier) -> bool {
    path.iter()
        .enumerate()
        .any(|(i, &l)| crosses(l, n * barrier.level(i + 1)))
}

fn increment_hit(path: &[f64], n: f64, table: &IncrementBarrier) -> bool {
    table.entries().iter().any(|e| {
        let ls = if e.s == 0 { 0.0 } else { path[e.s as usize - 1] };
        crosses(path[e.t as usize - 1] - ls, n * e.level)
    })
}

/// Plain-estimator driver shared by barrier and increment events.
fn plain_event(
    law: &Arc<dyn LossLaw>,
    tau: &DefaultTimeModel,
    params: &McParams,
    hit: impl Fn(&[f64]) -> bool,
) -> McEstimate {
    let cum = cum_vector(tau);
    let mut count = 0u64;
    for rep in params.first_replication..params.first_replication + params.replications {
        let mut rng = rep_rng(params.seed, rep);
        let path = sample_raw_path(law, &cum, params.n, &mut rng);
        if hit(&path) {
            count += 1;
        }
    }
    let r = params.replications as f64;
    let p = count as f64 / r;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / r).sqrt(),
        replications: params.replications,
        seed: params.seed,
        method: McMethodKind::Plain,
    }
}

/// The exponential change of measure for one composite window: each obligor
/// defaults inside the window with the reweighted mass and draws a tilted
/// amount there; everything outside the window keeps its conditional law.
struct WindowTilt {
    /// Window is (s, t]: epochs s+1..=t (s = 0 for an at-time window).
    s: usize,
    t: usize,
    sigma: f64,
    /// Tilted success probability w·exp(Λ_U(σ) − Λ_c(σ)).
    w_tilted: f64,
    /// Composite cumulant value Λ_c(σ); the per-obligor likelihood ratio is
    /// exp(Λ_c(σ) − σ·contribution).
    lam_c: f64,
    /// Cumulative epoch masses inside the window, normalized.
    early_cum: Vec<f64>,
    /// Cumulative epoch masses outside the window, normalized by 1 − w;
    /// epochs listed in `late_epochs`; remainder never defaults.
    late_cum: Vec<f64>,
    late_epochs: Vec<usize>,
    tilted_law: Arc<dyn LossLaw>,
}

impl WindowTilt {
    fn new(
        law: &Arc<dyn LossLaw>,
        tau: &DefaultTimeModel,
        s: u32,
        t: u32,
        sigma: f64,
    ) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Argument(format!(
                "tilt {sigma} must be a finite positive value from the asymptotic analysis"
            )));
        }
        let comp = if s == 0 {
            CompositeCgf::at_time(law.clone(), tau, t)?
        } else {
            CompositeCgf::increment(law.clone(), tau, s, t)?
        };
        let w = comp.weight();
        if w <= 0.0 {
            return Err(Error::Argument(format!(
                "the window ({s}, {t}] carries no default mass; nothing to tilt toward"
            )));
        }
        let lam_u = law.cgf(sigma);
        let lam_c = comp.cgf(sigma);
        if !lam_u.is_finite() || !lam_c.is_finite() {
            return Err(Error::Argument(format!(
                "tilt {sigma} lies outside the amount law's cumulant domain"
            )));
        }
        let w_tilted = (w.ln() + lam_u - lam_c).exp().clamp(0.0, 1.0);
        let tilted_law = law.tilt(sigma)?;

        let (s, t) = (s as usize, t as usize);
        let mut early_cum = Vec::with_capacity(t - s);
        let mut acc = 0.0;
        for j in (s + 1)..=t {
            acc += tau.prob(j) / w;
            early_cum.push(acc);
        }
        if let Some(last) = early_cum.last_mut() {
            *last = 1.0;
        }
        let mut late_cum = Vec::new();
        let mut late_epochs = Vec::new();
        let rest = 1.0 - w;
        if rest > 0.0 {
            let mut acc = 0.0;
            for j in (1..=tau.grid_len()).filter(|&j| j <= s || j > t) {
                acc += tau.prob(j) / rest;
                late_cum.push(acc);
                late_epochs.push(j);
            }
        }
        Ok(WindowTilt {
            s,
            t,
            sigma,
            w_tilted,
            lam_c,
            early_cum,
            late_cum,
            late_epochs,
            tilted_law,
        })
    }

    /// Raw loss path under the tilted measure plus the window contribution
    /// L(t) − L(s) that enters the likelihood ratio.
    fn sample(
        &self,
        law: &Arc<dyn LossLaw>,
        grid: usize,
        n: u64,
        rng: &mut dyn RngCore,
    ) -> (Vec<f64>, f64) {
        let mut inc = vec![0.0; grid];
        let mut window_loss = 0.0;
        for _ in 0..n {
            let pick: f64 = rng.gen();
            if pick < self.w_tilted {
                let u: f64 = rng.gen();
                let j = self.s + self.early_cum.partition_point(|&c| c < u) + 1;
                let amount = self.tilted_law.sample(rng);
                inc[j.min(self.t) - 1] += amount;
                window_loss += amount;
            } else if !self.late_cum.is_empty() {
                let u: f64 = rng.gen();
                let idx = self.late_cum.partition_point(|&c| c < u);
                if idx < self.late_epochs.len() {
                    inc[self.late_epochs[idx] - 1] += law.sample(rng);
                }
            }
        }
        let mut acc = 0.0;
        for v in inc.iter_mut() {
            acc += *v;
            *v = acc;
        }
        (inc, window_loss)
    }

    fn weight(&self, n: u64, window_loss: f64) -> f64 {
        (-self.sigma * window_loss + n as f64 * self.lam_c).exp()
    }
}

/// Tilted-estimator driver: average of indicator × likelihood ratio,
/// standard error from the sample standard deviation.
fn tilted_event(
    law: &Arc<dyn LossLaw>,
    tau: &DefaultTimeModel,
    params: &McParams,
    tilt: &WindowTilt,
    hit: impl Fn(&[f64]) -> bool,
) -> McEstimate {
    let grid = tau.grid_len();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut count = 0u64;
    for rep in params.first_replication..params.first_replication + params.replications {
        let mut rng = rep_rng(params.seed, rep);
        let (path, window_loss) = tilt.sample(law, grid, params.n, &mut rng);
        let x = if hit(&path) {
            tilt.weight(params.n, window_loss)
        } else {
            0.0
        };
        count += 1;
        let d = x - mean;
        mean += d / count as f64;
        m2 += d * (x - mean);
    }
    let r = count as f64;
    let std_error = if count > 1 {
        (m2 / (r - 1.0)).sqrt() / r.sqrt()
    } else {
        f64::INFINITY
    };
    McEstimate {
        estimate: mean,
        std_error,
        replications: params.replications,
        seed: params.seed,
        method: McMethodKind::Tilted,
    }
}

/// Estimate P(∃ t ≤ horizon: L(t) ≥ n·ζ(t)).
pub fn mc_barrier(
    law: &Arc<dyn LossLaw>,
    tau: &DefaultTimeModel,
    barrier: &Barrier,
    params: &McParams,
    method: McMethod,
) -> Result<McEstimate> {
    validate_params(params)?;
    if barrier.horizon() != tau.grid_len() {
        return Err(Error::Argument(format!(
            "barrier tabulates {} epochs but the default grid has {}",
            barrier.horizon(),
            tau.grid_len()
        )));
    }
    let nf = params.n as f64;
    match method {
        McMethod::Plain => Ok(plain_event(law, tau, params, |p| {
            barrier_hit(p, nf, barrier)
        })),
        McMethod::Tilted { at, sigma } => {
            let Optimum::Epoch { t } = at else {
                return Err(Error::argument(
                    "tilted barrier sampling needs the dominating epoch from the barrier \
                     analysis, not an increment window",
                ));
            };
            let tilt = WindowTilt::new(law, tau, 0, t, sigma)?;
            Ok(tilted_event(law, tau, params, &tilt, |p| {
                barrier_hit(p, nf, barrier)
            }))
        }
    }
}

/// Estimate P(∃ tabulated (s,t): L(t) − L(s) ≥ n·ξ(s,t)).
pub fn mc_increment(
    law: &Arc<dyn LossLaw>,
    tau: &DefaultTimeModel,
    table: &IncrementBarrier,
    params: &McParams,
    method: McMethod,
) -> Result<McEstimate> {
    validate_params(params)?;
    if table.horizon() as usize > tau.grid_len() {
        return Err(Error::Argument(format!(
            "increment table reaches t = {} but the grid ends at {}",
            table.horizon(),
            tau.grid_len()
        )));
    }
    let nf = params.n as f64;
    match method {
        McMethod::Plain => Ok(plain_event(law, tau, params, |p| {
            increment_hit(p, nf, table)
        })),
        McMethod::Tilted { at, sigma } => {
            let Optimum::Window { s, t } = at else {
                return Err(Error::argument(
                    "tilted increment sampling needs the dominating window from the \
                     increment analysis, not a single epoch",
                ));
            };
            let tilt = WindowTilt::new(law, tau, s, t, sigma)?;
            Ok(tilted_event(law, tau, params, &tilt, |p| {
                increment_hit(p, nf, table)
            }))
        }
    }
}
