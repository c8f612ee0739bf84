//! Barrier tables: per-epoch levels defining crossing events, plus declared
//! growth floors for the region beyond the tabulated horizon.
//!
//! Tables only require finite entries; rarity (level above the mean loss)
//! is enforced where it matters, in the asymptotics layer, so that exact
//! oracles can still evaluate trivially-crossed barriers.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthKind {
    Log,
    LogLog,
}

/// A caller-asserted floor: level(t) ≥ c0·log t (or c0·log log t) beyond
/// the horizon. The asymptotics layer checks what the floor implies; it
/// cannot verify the assertion itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthDecl {
    pub c0: f64,
    pub kind: GrowthKind,
}

impl GrowthDecl {
    pub fn new(c0: f64, kind: GrowthKind) -> Result<Self> {
        if !c0.is_finite() || c0 <= 0.0 {
            return Err(Error::Argument(format!(
                "growth coefficient c0 = {c0} must be finite and positive"
            )));
        }
        Ok(GrowthDecl { c0, kind })
    }

    pub fn floor(&self, t: f64) -> f64 {
        match self.kind {
            GrowthKind::Log => self.c0 * t.ln(),
            GrowthKind::LogLog => self.c0 * t.ln().ln(),
        }
    }
}

/// Per-epoch barrier levels for t = 1..=horizon.
#[derive(Debug, Clone, Serialize)]
pub struct Barrier {
    levels: Vec<f64>,
    pub growth: Option<GrowthDecl>,
}

impl Barrier {
    pub fn new(levels: Vec<f64>, growth: Option<GrowthDecl>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::argument("barrier has no tabulated levels"));
        }
        for (i, &v) in levels.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Argument(format!(
                    "barrier level at t = {} is {v}, not finite",
                    i + 1
                )));
            }
        }
        Ok(Barrier { levels, growth })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    /// Level at the 1-based epoch t.
    pub fn level(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.levels.len(), "epoch {t} off the table");
        self.levels[t - 1]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// One tabulated increment level: loss inside (s, t] compared against it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncrementLevel {
    pub s: u32,
    pub t: u32,
    pub level: f64,
}

/// Sparse table of increment levels on pairs 0 ≤ s < t, with optional
/// growth floors per start epoch.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementBarrier {
    entries: Vec<IncrementLevel>,
    growth: Vec<(u32, GrowthDecl)>,
}

impl IncrementBarrier {
    pub fn new(entries: Vec<IncrementLevel>, growth: Vec<(u32, GrowthDecl)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::argument("increment barrier has no tabulated pairs"));
        }
        let mut entries = entries;
        entries.sort_by_key(|e| (e.s, e.t));
        for e in &entries {
            if e.s >= e.t {
                return Err(Error::Argument(format!(
                    "increment pair needs s < t, got ({}, {})",
                    e.s, e.t
                )));
            }
            if !e.level.is_finite() {
                return Err(Error::Argument(format!(
                    "increment level at ({}, {}) is {}, not finite",
                    e.s, e.t, e.level
                )));
            }
        }
        for w in entries.windows(2) {
            if w[0].s == w[1].s && w[0].t == w[1].t {
                return Err(Error::Argument(format!(
                    "duplicate increment pair ({}, {})",
                    w[0].s, w[0].t
                )));
            }
        }
        let mut growth = growth;
        growth.sort_by_key(|g| g.0);
        for w in growth.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Argument(format!(
                    "duplicate growth declaration for start epoch {}",
                    w[0].0
                )));
            }
        }
        Ok(IncrementBarrier { entries, growth })
    }

    pub fn entries(&self) -> &[IncrementLevel] {
        &self.entries
    }

    /// Largest tabulated end epoch.
    pub fn horizon(&self) -> u32 {
        self.entries.iter().map(|e| e.t).max().unwrap_or(0)
    }

    pub fn growth_for(&self, s: u32) -> Option<GrowthDecl> {
        self.growth
            .iter()
            .find(|(gs, _)| *gs == s)
            .map(|(_, g)| *g)
    }

    /// Distinct start epochs appearing in the table, ascending.
    pub fn starts(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.entries.iter().map(|e| e.s).collect();
        out.dedup();
        out
    }
}
