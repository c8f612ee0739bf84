//! Name-keyed registry of loss-amount families — the run-time extension
//! point. Configurations pick a family by name and pass family-specific
//! parameters as JSON; adding a family means adding one entry here.

use super::{AtomLaw, ExponentialLaw, LossLaw, PoissonTypeLaw};
use crate::error::{Error, Result};
use serde::Deserialize;
use serde_json::Value;
use std::sync::Arc;

pub struct FamilyEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn(&Value) -> Result<Arc<dyn LossLaw>>,
}

const FAMILIES: &[FamilyEntry] = &[
    FamilyEntry {
        name: "discrete-atoms",
        summary: "finite list of (value, prob) atoms",
        build: build_discrete,
    },
    FamilyEntry {
        name: "bounded-empirical",
        summary: "finite (value, prob) atoms from empirical data",
        build: build_bounded,
    },
    FamilyEntry {
        name: "poisson-type",
        summary: "u·(1 + Poisson(lambda)) on {u, 2u, ...}",
        build: build_poisson,
    },
    FamilyEntry {
        name: "exponential",
        summary: "exponential with the given rate (mean 1/rate)",
        build: build_exponential,
    },
];

pub fn families() -> &'static [FamilyEntry] {
    FAMILIES
}

pub fn build_law(family: &str, params: &Value) -> Result<Arc<dyn LossLaw>> {
    match FAMILIES.iter().find(|e| e.name == family) {
        Some(entry) => (entry.build)(params),
        None => Err(Error::Argument(format!(
            "unknown loss-amount family '{family}'; known families: {}",
            FAMILIES
                .iter()
                .map(|e| e.name)
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomParams {
    atoms: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoissonParams {
    u: f64,
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpParams {
    rate: f64,
}

fn parse<T: serde::de::DeserializeOwned>(family: &str, params: &Value) -> Result<T> {
    serde_json::from_value(params.clone())
        .map_err(|e| Error::Argument(format!("parameters of family '{family}': {e}")))
}

fn build_discrete(params: &Value) -> Result<Arc<dyn LossLaw>> {
    let p: AtomParams = parse("discrete-atoms", params)?;
    Ok(Arc::new(AtomLaw::discrete(&p.atoms)?))
}

fn build_bounded(params: &Value) -> Result<Arc<dyn LossLaw>> {
    let p: AtomParams = parse("bounded-empirical", params)?;
    Ok(Arc::new(AtomLaw::bounded_empirical(&p.atoms)?))
}

fn build_poisson(params: &Value) -> Result<Arc<dyn LossLaw>> {
    let p: PoissonParams = parse("poisson-type", params)?;
    Ok(Arc::new(PoissonTypeLaw::new(p.u, p.lambda)?))
}

fn build_exponential(params: &Value) -> Result<Arc<dyn LossLaw>> {
    let p: ExpParams = parse("exponential", params)?;
    Ok(Arc::new(ExponentialLaw::new(p.rate)?))
}
