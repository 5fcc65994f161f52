//! Scenario files: strict JSON descriptions of a game, an objective, solver
//! overrides, and command options.
//!
//! Unknown keys are rejected everywhere. A typo in a field like `delta`
//! would otherwise silently fall back to a default and corrupt results, so
//! strictness is part of the file contract. Parse failures surface
//! serde_json's line and column.

use crate::design::DesignProblem;
use crate::model::{AgentSpec, Fun, FunctionSpec, GameSpec, ModelError, ObjectiveSpec};
use crate::solver::{RootSelection, SolverConfig};
use serde::Deserialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario is missing {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum FunJson {
    Linear { eta: f64 },
    Power { a: f64, r: f64 },
    Kinked { inner: Box<FunJson>, threshold: f64, gamma: f64 },
}

impl FunJson {
    fn to_fun(&self) -> Fun {
        match self {
            FunJson::Linear { eta } => Fun::Linear { eta: *eta },
            FunJson::Power { a, r } => Fun::Power { a: *a, r: *r },
            FunJson::Kinked { inner, threshold, gamma } => Fun::Kinked {
                inner: Box::new(inner.to_fun()),
                threshold: *threshold,
                gamma: *gamma,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentJson {
    impact: FunJson,
    cost: FunJson,
    delta: f64,
    #[serde(default = "one")]
    alpha: f64,
    #[serde(default)]
    beta: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveJson {
    TotalEffort,
    FairnessPenalized { lambda: f64, target: Option<Vec<f64>> },
    ExpectedWinnerEffort,
    WeightedEffort { weights: Vec<f64>, lambda: f64, target: Option<Vec<f64>> },
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverJson {
    bisect_tol: Option<f64>,
    grid_points: Option<usize>,
    inner_grid_points: Option<usize>,
    bracket_growth: Option<f64>,
    partition_tol: Option<f64>,
    max_iter: Option<usize>,
    roots: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DesignJson {
    k_candidates: Option<Vec<usize>>,
    /// "free" optimizes the mechanism per rule; "fixed" keeps the agents'
    /// alpha and beta as given.
    mechanism: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateJson {
    rounds: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    agents: Vec<AgentJson>,
    k: Option<usize>,
    objective: Option<ObjectiveJson>,
    #[serde(default)]
    solver: SolverJson,
    #[serde(default)]
    design: DesignJson,
    #[serde(default)]
    simulate: SimulateJson,
}

/// Whether the design command optimizes the mechanism or keeps it fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismMode {
    Free,
    Fixed,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub agents: Vec<AgentSpec>,
    pub k: Option<usize>,
    pub objective: Option<ObjectiveSpec>,
    pub solver: SolverConfig,
    pub k_candidates: Option<Vec<usize>>,
    pub mechanism: MechanismMode,
    pub sim_rounds: u64,
    pub sim_seed: u64,
}

impl Scenario {
    /// The game described by the scenario; requires `k`.
    pub fn game(&self) -> Result<GameSpec, ScenarioError> {
        let k = self.k.ok_or(ScenarioError::Missing("the voting threshold k"))?;
        Ok(GameSpec::new(self.agents.clone(), k)?)
    }

    pub fn objective_or_default(&self) -> ObjectiveSpec {
        self.objective.clone().unwrap_or(ObjectiveSpec::TotalEffort)
    }

    pub fn design_problem(&self) -> Result<DesignProblem, ScenarioError> {
        let n = self.agents.len();
        let k_candidates = self.k_candidates.clone().unwrap_or_else(|| (1..=n).collect());
        let objective = self.objective_or_default();
        objective.validate(n)?;
        Ok(DesignProblem { base_agents: self.agents.clone(), objective, k_candidates })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: ScenarioJson = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = raw.agents.len();
    let mut agents = Vec::with_capacity(n);
    for a in &raw.agents {
        let impact = FunctionSpec::impact(a.impact.to_fun())?;
        let cost = FunctionSpec::cost(a.cost.to_fun())?;
        agents.push(AgentSpec::new(impact, cost, a.delta, a.alpha, a.beta)?);
    }
    let objective = match &raw.objective {
        None => None,
        Some(ObjectiveJson::TotalEffort) => Some(ObjectiveSpec::TotalEffort),
        Some(ObjectiveJson::ExpectedWinnerEffort) => Some(ObjectiveSpec::ExpectedWinnerEffort),
        Some(ObjectiveJson::FairnessPenalized { lambda, target }) => {
            Some(ObjectiveSpec::FairnessPenalized {
                lambda: *lambda,
                target: target.clone().unwrap_or_else(|| ObjectiveSpec::uniform_target(n)),
            })
        }
        Some(ObjectiveJson::WeightedEffort { weights, lambda, target }) => {
            Some(ObjectiveSpec::WeightedEffort {
                weights: weights.clone(),
                lambda: *lambda,
                target: target.clone().unwrap_or_else(|| ObjectiveSpec::uniform_target(n)),
            })
        }
    };
    if let Some(obj) = &objective {
        obj.validate(n)?;
    }

    let mut solver = SolverConfig::default();
    if let Some(v) = raw.solver.bisect_tol {
        solver.bisect_tol = v;
    }
    if let Some(v) = raw.solver.grid_points {
        solver.grid_points = v.max(16);
    }
    if let Some(v) = raw.solver.inner_grid_points {
        solver.inner_grid_points = v.max(4);
    }
    if let Some(v) = raw.solver.bracket_growth {
        solver.bracket_growth = v;
    }
    if let Some(v) = raw.solver.partition_tol {
        solver.partition_tol = v;
    }
    if let Some(v) = raw.solver.max_iter {
        solver.max_iter = v;
    }
    if let Some(v) = &raw.solver.roots {
        solver.root_selection = match v.as_str() {
            "largest" => RootSelection::Largest,
            "all" => RootSelection::All,
            other => {
                return Err(ScenarioError::Parse {
                    line: 0,
                    column: 0,
                    message: format!("roots must be \"largest\" or \"all\", got {other:?}"),
                })
            }
        };
    }

    let mechanism = match raw.design.mechanism.as_deref() {
        None | Some("free") => MechanismMode::Free,
        Some("fixed") => MechanismMode::Fixed,
        Some(other) => {
            return Err(ScenarioError::Parse {
                line: 0,
                column: 0,
                message: format!("mechanism must be \"free\" or \"fixed\", got {other:?}"),
            })
        }
    };

    Ok(Scenario {
        agents,
        k: raw.k,
        objective,
        solver,
        k_candidates: raw.design.k_candidates,
        mechanism,
        sim_rounds: raw.simulate.rounds.unwrap_or(1_000_000),
        sim_seed: raw.simulate.seed.unwrap_or(1),
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "agents": [
            {"impact": {"family": "linear", "eta": 1.0},
             "cost": {"family": "power", "a": 1.0, "r": 2.0},
             "delta": 0.5},
            {"impact": {"family": "power", "a": 1.0, "r": 0.5},
             "cost": {"family": "linear", "eta": 1.0},
             "delta": 0.4, "alpha": 2.0, "beta": 0.1}
        ],
        "k": 2
    }"#;

    #[test]
    fn parses_minimal_scenario() {
        let sc = parse_scenario(MINIMAL).unwrap();
        assert_eq!(sc.agents.len(), 2);
        assert_eq!(sc.k, Some(2));
        assert_eq!(sc.agents[0].alpha, 1.0);
        assert_eq!(sc.agents[1].beta, 0.1);
        sc.game().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = MINIMAL.replace("\"k\": 2", "\"k\": 2, \"votes\": 3");
        let err = parse_scenario(&bad).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }), "{err}");
    }

    #[test]
    fn rejects_typo_inside_agent() {
        let bad = MINIMAL.replace("\"delta\": 0.5", "\"delta\": 0.5, \"detla\": 0.4");
        assert!(parse_scenario(&bad).is_err());
    }

    #[test]
    fn parse_error_carries_location() {
        let err = parse_scenario("{\n  \"agents\": [,]\n}").unwrap_err();
        match err {
            ScenarioError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn objective_target_defaults_to_uniform() {
        let text = MINIMAL.replace(
            "\"k\": 2",
            "\"k\": 2, \"objective\": {\"form\": \"fairness_penalized\", \"lambda\": 3.0}",
        );
        let sc = parse_scenario(&text).unwrap();
        match sc.objective.unwrap() {
            ObjectiveSpec::FairnessPenalized { lambda, target } => {
                assert_eq!(lambda, 3.0);
                assert_eq!(target, vec![0.5, 0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_power_impact_rejected() {
        let bad = MINIMAL.replace("\"r\": 0.5", "\"r\": 1.5");
        assert!(matches!(parse_scenario(&bad), Err(ScenarioError::Model(_))));
    }
}
