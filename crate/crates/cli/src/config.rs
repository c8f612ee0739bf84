//! Experiment configuration: one JSON document carrying every input a
//! command may need. Commands pick the fields they use and reject runs
//! with the relevant ones missing, so a single config can drive several
//! commands over the same model.

use lossldp::barrier::{Barrier, GrowthDecl, GrowthKind, IncrementBarrier, IncrementLevel};
use lossldp::default_times::DefaultTimeModel;
use lossldp::law::{build_law, LossLaw};
use lossldp::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Loss-amount family and its parameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_amount: Option<LossAmountSpec>,
    /// Default probabilities per epoch; may sum to less than 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_times: Option<Vec<f64>>,
    /// Per-epoch crossing levels (per obligor), with an optional declared
    /// growth floor beyond the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierSpec>,
    /// Tabulated window crossing levels, with optional per-start growth
    /// declarations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub increment_barrier: Option<IncrementSpec>,
    /// Per-capita loss path for rate evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<f64>>,
    /// Obligor classes for the heterogeneous rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<ClassConfig>>,
    /// Evaluation points for the convex conjugate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    /// Portfolio sizes, strictly increasing where more than one is used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Horizon up to which tail growth is probed; defaults to the
    /// tabulated horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_check: Option<u32>,
    /// Sampling method: "plain" or "tilted".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Absorb a defective default law into a virtual final epoch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub augment_defective: Option<bool>,
}

/// `deny_unknown_fields` cannot be combined with `flatten`; unknown
/// family parameters are instead rejected by the family builders.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct LossAmountSpec {
    pub family: String,
    #[serde(flatten)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub levels: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub c0: f64,
    /// "log" or "loglog"
    pub kind: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementSpec {
    pub entries: Vec<IncrementEntrySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<Vec<StartGrowthSpec>>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementEntrySpec {
    pub s: u32,
    pub t: u32,
    pub level: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StartGrowthSpec {
    pub s: u32,
    pub c0: f64,
    pub kind: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub fraction: f64,
    pub loss_amount: LossAmountSpec,
    pub default_times: Vec<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Argument(format!("config {}: {e}", path.display())))
    }

    pub fn law(&self) -> Result<Arc<dyn LossLaw>> {
        let spec = self
            .loss_amount
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'loss_amount' for this command"))?;
        build_law(&spec.family, &serde_json::Value::Object(spec.params.clone()))
    }

    pub fn tau(&self) -> Result<DefaultTimeModel> {
        let probs = self
            .default_times
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'default_times' for this command"))?;
        DefaultTimeModel::new(probs.clone())
    }

    pub fn barrier(&self) -> Result<Barrier> {
        let spec = self
            .barrier
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'barrier' for this command"))?;
        let growth = spec.growth.as_ref().map(|g| growth_decl(g.c0, &g.kind)).transpose()?;
        Barrier::new(spec.levels.clone(), growth)
    }

    pub fn increment_barrier(&self) -> Result<IncrementBarrier> {
        let spec = self
            .increment_barrier
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'increment_barrier' for this command"))?;
        let entries = spec
            .entries
            .iter()
            .map(|e| IncrementLevel {
                s: e.s,
                t: e.t,
                level: e.level,
            })
            .collect();
        let mut growth = Vec::new();
        for g in spec.growth.iter().flatten() {
            growth.push((g.s, growth_decl(g.c0, &g.kind)?));
        }
        IncrementBarrier::new(entries, growth)
    }

    pub fn path(&self) -> Result<lossldp::path_rate::LossPath> {
        let levels = self
            .path
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'path' for this command"))?;
        lossldp::path_rate::LossPath::new(levels.clone())
    }

    pub fn points(&self) -> Result<&[f64]> {
        let pts = self
            .points
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'points' for this command"))?;
        if pts.is_empty() {
            return Err(Error::argument("'points' must not be empty"));
        }
        Ok(pts)
    }

    pub fn n_list(&self) -> Result<&[u64]> {
        let n = self
            .n
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'n' (a list of portfolio sizes)"))?;
        if n.is_empty() {
            return Err(Error::argument("'n' must not be empty"));
        }
        Ok(n)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }
}

fn growth_decl(c0: f64, kind: &str) -> Result<GrowthDecl> {
    let kind = match kind {
        "log" => GrowthKind::Log,
        "loglog" => GrowthKind::LogLog,
        other => {
            return Err(Error::Argument(format!(
                "growth kind '{other}' is not recognized; use \"log\" or \"loglog\""
            )))
        }
    };
    GrowthDecl::new(c0, kind)
}
