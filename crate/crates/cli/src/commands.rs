//! Command registry: each analysis is a strategy behind a common trait,
//! registered by name and selected at run time, so adding an analysis
//! means adding one entry here.

use crate::config::ExperimentConfig;
use crate::report::TableRow;
use lossldp::asymptotics::{barrier_asymptotics, hypothesis_report, increment_asymptotics};
use lossldp::law::Cgf;
use lossldp::legendre::legendre_transform;
use lossldp::mc::{mc_barrier, mc_increment, McMethod, McParams};
use lossldp::multiclass::{multiclass_rate, ClassSpec, MultiClassSpec};
use lossldp::oracle::{exact_barrier, exact_increment, LatticePortfolio};
use lossldp::path_rate::{path_rate, path_rate_augmented};
use lossldp::{Error, Result};
use serde_json::json;

pub struct CommandOutput {
    pub results: serde_json::Value,
    /// Size table for CSV output; None for commands without one.
    pub table: Option<Vec<TableRow>>,
    /// Non-zero process exit despite a successful computation (failed
    /// certification).
    pub exit_override: Option<i32>,
}

impl CommandOutput {
    fn plain(results: serde_json::Value) -> Self {
        CommandOutput {
            results,
            table: None,
            exit_override: None,
        }
    }
}

pub trait Command: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput>;
}

pub fn registry() -> &'static [&'static dyn Command] {
    static REGISTRY: &[&dyn Command] = &[
        &LegendreCmd,
        &RatePathCmd,
        &RateMulticlassCmd,
        &BarrierCmd,
        &IncrementCmd,
        &OracleBarrierCmd,
        &OracleIncrementCmd,
        &SimulateCmd,
        &HypothesisCmd,
    ];
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static dyn Command> {
    registry().iter().copied().find(|c| c.name() == name)
}

/// Exit code classes: 2 — the request itself is unusable (bad config,
/// invalid model, event not rare); 3 — the analysis ran but refused to
/// certify (tied optima, failed hypothesis checks); 4 — the exact method
/// exceeds its state budget.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonUniqueOptimum { .. } => 3,
        Error::Capacity { .. } => 4,
        _ => 2,
    }
}

struct LegendreCmd;

impl Command for LegendreCmd {
    fn name(&self) -> &'static str {
        "legendre"
    }
    fn summary(&self) -> &'static str {
        "convex conjugate of the loss-amount CGF at the given points"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let points = cfg.points()?;
        let tol = cfg.tol();
        let cgf: &dyn Cgf = law.as_ref();
        let mut rows = Vec::with_capacity(points.len());
        for &x in points {
            let r = legendre_transform(cgf, x, tol)?;
            rows.push(json!({
                "x": x,
                "rate": r.value,
                "tilt": r.argmax,
            }));
        }
        Ok(CommandOutput::plain(json!({
            "mean": cgf.mean(),
            "points": rows,
        })))
    }
}

struct RatePathCmd;

impl Command for RatePathCmd {
    fn name(&self) -> &'static str {
        "rate-path"
    }
    fn summary(&self) -> &'static str {
        "decay rate of a per-capita loss path for one obligor class"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let x = cfg.path()?;
        let tol = cfg.tol();
        let result = if cfg.augment_defective.unwrap_or(false) {
            path_rate_augmented(&x, law.as_ref(), &tau, tol)?
        } else {
            path_rate(&x, law.as_ref(), &tau, tol)?
        };
        Ok(CommandOutput::plain(serde_json::to_value(&result).expect("serializable")))
    }
}

struct RateMulticlassCmd;

impl Command for RateMulticlassCmd {
    fn name(&self) -> &'static str {
        "rate-multiclass"
    }
    fn summary(&self) -> &'static str {
        "decay rate of an aggregated loss path over heterogeneous classes"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let classes = cfg
            .classes
            .as_ref()
            .ok_or_else(|| Error::argument("config needs 'classes' for this command"))?;
        let mut specs = Vec::with_capacity(classes.len());
        for c in classes {
            let law = lossldp::law::build_law(
                &c.loss_amount.family,
                &serde_json::Value::Object(c.loss_amount.params.clone()),
            )?;
            specs.push(ClassSpec {
                fraction: c.fraction,
                law,
                tau: lossldp::default_times::DefaultTimeModel::new(c.default_times.clone())?,
            });
        }
        let spec = MultiClassSpec::new(specs)?;
        let x = cfg.path()?;
        let result = multiclass_rate(&x, &spec, cfg.tol().max(1e-9))?;
        Ok(CommandOutput::plain(serde_json::to_value(&result).expect("serializable")))
    }
}

struct BarrierCmd;

impl Command for BarrierCmd {
    fn name(&self) -> &'static str {
        "barrier"
    }
    fn summary(&self) -> &'static str {
        "dominating epoch and refined crossing estimates for a level staircase"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let barrier = cfg.barrier()?;
        let n_list = cfg.n_list()?;
        let t_check = cfg.t_check.unwrap_or(barrier.horizon() as u32);
        let est = barrier_asymptotics(&law, &tau, &barrier, n_list, t_check, cfg.tol())?;
        let table = est
            .estimates
            .iter()
            .map(|&(n, e)| TableRow {
                n,
                estimate: e,
                stderr: None,
                method: "refined",
            })
            .collect();
        Ok(CommandOutput {
            results: serde_json::to_value(&est).expect("serializable"),
            table: Some(table),
            exit_override: None,
        })
    }
}

struct IncrementCmd;

impl Command for IncrementCmd {
    fn name(&self) -> &'static str {
        "increment"
    }
    fn summary(&self) -> &'static str {
        "dominating window and refined crossing estimates for increment levels"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let table = cfg.increment_barrier()?;
        let n_list = cfg.n_list()?;
        let t_check = cfg.t_check.unwrap_or(table.horizon());
        let est = increment_asymptotics(&law, &tau, &table, n_list, t_check, cfg.tol())?;
        let rows = est
            .estimates
            .iter()
            .map(|&(n, e)| TableRow {
                n,
                estimate: e,
                stderr: None,
                method: "refined",
            })
            .collect();
        Ok(CommandOutput {
            results: serde_json::to_value(&est).expect("serializable"),
            table: Some(rows),
            exit_override: None,
        })
    }
}

struct OracleBarrierCmd;

impl Command for OracleBarrierCmd {
    fn name(&self) -> &'static str {
        "oracle-barrier"
    }
    fn summary(&self) -> &'static str {
        "exact staircase crossing probability on commensurable lattices"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let barrier = cfg.barrier()?;
        let n_list = cfg.n_list()?;
        let mut rows = Vec::with_capacity(n_list.len());
        let mut results = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let pf = LatticePortfolio::new(n, &law, tau.clone())?;
            let p = exact_barrier(&pf, &barrier)?;
            results.push(json!({"n": n, "probability": p}));
            rows.push(TableRow {
                n,
                estimate: p,
                stderr: None,
                method: "exact",
            });
        }
        Ok(CommandOutput {
            results: json!({ "results": results }),
            table: Some(rows),
            exit_override: None,
        })
    }
}

struct OracleIncrementCmd;

impl Command for OracleIncrementCmd {
    fn name(&self) -> &'static str {
        "oracle-increment"
    }
    fn summary(&self) -> &'static str {
        "exact window crossing probability on commensurable lattices"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let table = cfg.increment_barrier()?;
        let n_list = cfg.n_list()?;
        let mut rows = Vec::with_capacity(n_list.len());
        let mut results = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let pf = LatticePortfolio::new(n, &law, tau.clone())?;
            let p = exact_increment(&pf, &table)?;
            results.push(json!({"n": n, "probability": p}));
            rows.push(TableRow {
                n,
                estimate: p,
                stderr: None,
                method: "exact",
            });
        }
        Ok(CommandOutput {
            results: json!({ "results": results }),
            table: Some(rows),
            exit_override: None,
        })
    }
}

struct SimulateCmd;

impl Command for SimulateCmd {
    fn name(&self) -> &'static str {
        "simulate"
    }
    fn summary(&self) -> &'static str {
        "Monte Carlo crossing estimate, plain or tilted at the dominating tilt"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let n_list = cfg.n_list()?;
        let replications = cfg.replications.unwrap_or(100_000);
        let seed = cfg.seed.unwrap_or(0);
        let method_name = cfg.method.as_deref().unwrap_or("plain");

        let use_barrier = match (cfg.barrier.is_some(), cfg.increment_barrier.is_some()) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                return Err(Error::argument(
                    "config has both 'barrier' and 'increment_barrier'; simulate needs exactly one",
                ))
            }
            (false, false) => {
                return Err(Error::argument(
                    "config needs 'barrier' or 'increment_barrier' for this command",
                ))
            }
        };

        let mut tilt_info = serde_json::Value::Null;
        let method = match method_name {
            "plain" => McMethod::Plain,
            "tilted" => {
                // the dominating optimum and its tilt come from the
                // large-portfolio analysis of the same event
                let (at, sigma) = if use_barrier {
                    let barrier = cfg.barrier()?;
                    let t_check = cfg.t_check.unwrap_or(barrier.horizon() as u32);
                    let est =
                        barrier_asymptotics(&law, &tau, &barrier, n_list, t_check, cfg.tol())?;
                    (est.optimum, est.tilt)
                } else {
                    let table = cfg.increment_barrier()?;
                    let t_check = cfg.t_check.unwrap_or(table.horizon());
                    let est =
                        increment_asymptotics(&law, &tau, &table, n_list, t_check, cfg.tol())?;
                    (est.optimum, est.tilt)
                };
                tilt_info = json!({"at": at, "sigma": sigma});
                McMethod::Tilted { at, sigma }
            }
            other => {
                return Err(Error::Argument(format!(
                    "method '{other}' is not recognized; use \"plain\" or \"tilted\""
                )))
            }
        };

        let method_label: &'static str = if matches!(method, McMethod::Plain) {
            "plain"
        } else {
            "tilted"
        };
        let mut rows = Vec::with_capacity(n_list.len());
        let mut runs = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let params = McParams::new(n, replications, seed);
            let est = if use_barrier {
                mc_barrier(&law, &tau, &cfg.barrier()?, &params, method)?
            } else {
                mc_increment(&law, &tau, &cfg.increment_barrier()?, &params, method)?
            };
            rows.push(TableRow {
                n,
                estimate: est.estimate,
                stderr: Some(est.std_error),
                method: method_label,
            });
            runs.push(serde_json::to_value(&est).expect("serializable"));
        }
        Ok(CommandOutput {
            results: json!({"runs": runs, "tilt": tilt_info}),
            table: Some(rows),
            exit_override: None,
        })
    }
}

struct HypothesisCmd;

impl Command for HypothesisCmd {
    fn name(&self) -> &'static str {
        "hypothesis"
    }
    fn summary(&self) -> &'static str {
        "certification report: per-epoch rates, optimum uniqueness, tail growth"
    }
    fn run(&self, cfg: &ExperimentConfig) -> Result<CommandOutput> {
        let law = cfg.law()?;
        let tau = cfg.tau()?;
        let default_n = [100u64];
        let n_list: &[u64] = match cfg.n.as_deref() {
            Some(n) if !n.is_empty() => n,
            _ => &default_n,
        };
        let est = match (cfg.barrier.is_some(), cfg.increment_barrier.is_some()) {
            (true, false) => {
                let barrier = cfg.barrier()?;
                let t_check = cfg.t_check.unwrap_or(barrier.horizon() as u32);
                barrier_asymptotics(&law, &tau, &barrier, n_list, t_check, cfg.tol())?
            }
            (false, true) => {
                let table = cfg.increment_barrier()?;
                let t_check = cfg.t_check.unwrap_or(table.horizon());
                increment_asymptotics(&law, &tau, &table, n_list, t_check, cfg.tol())?
            }
            (true, true) => {
                return Err(Error::argument(
                    "config has both 'barrier' and 'increment_barrier'; hypothesis needs exactly one",
                ))
            }
            (false, false) => {
                return Err(Error::argument(
                    "config needs 'barrier' or 'increment_barrier' for this command",
                ))
            }
        };
        let pass = est.diagnostics.hypotheses_pass();
        let report = hypothesis_report(&est);
        Ok(CommandOutput {
            results: json!({
                "pass": pass,
                "report": report,
                "optimum": est.optimum,
                "decay": est.decay,
                "diagnostics": serde_json::to_value(&est.diagnostics).expect("serializable"),
            }),
            table: None,
            exit_override: if pass { None } else { Some(3) },
        })
    }
}
