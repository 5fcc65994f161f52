//! Domain types: parametric impact and cost functions, agents, games,
//! design objectives, and solved equilibria.
//!
//! Impact functions must be increasing and weakly concave with f(0) = 0;
//! cost functions increasing with c(0) = 0 and ideally weakly convex.
//! The three supported families (linear, power, kinked) cover every scenario
//! we ship while keeping closed-form inverses. A kinked cost whose outer
//! slope undercuts the inner slope breaks global convexity; we record that
//! in a flag instead of rejecting, and downstream verification is expected
//! to lean on the best-response oracle for such games.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for closed-form inversions.
pub const INV_TOL_CLOSED: f64 = 1e-12;
/// Tolerance for bisection inversions (kinked composites).
pub const INV_TOL_BISECT: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("negative argument {0} outside function domain")]
    NegativeArgument(f64),
    #[error("non-finite result while evaluating function at {0}")]
    NonFinite(f64),
    #[error("invalid function parameter: {0}")]
    InvalidParameter(String),
    #[error("impact function must be weakly concave: {0}")]
    NotConcave(String),
    #[error("cost function must be strictly increasing: {0}")]
    NotIncreasing(String),
    #[error("inversion target {target} is infeasible: {reason}")]
    InfeasibleInverse { target: f64, reason: String },
    #[error("invalid agent: {0}")]
    InvalidAgent(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
}

/// Parametric one-dimensional function family with h(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fun {
    /// h(x) = eta * x
    Linear { eta: f64 },
    /// h(x) = a * x^r
    Power { a: f64, r: f64 },
    /// Inner family up to `threshold`, then continued linearly with slope
    /// `gamma`: h(x) = inner(threshold) + gamma * (x - threshold).
    Kinked { inner: Box<Fun>, threshold: f64, gamma: f64 },
}

impl Fun {
    pub fn value(&self, x: f64) -> Result<f64, ModelError> {
        if x < 0.0 {
            return Err(ModelError::NegativeArgument(x));
        }
        let v = self.value_unchecked(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::NonFinite(x))
        }
    }

    fn value_unchecked(&self, x: f64) -> f64 {
        match self {
            Fun::Linear { eta } => eta * x,
            Fun::Power { a, r } => {
                if x == 0.0 {
                    0.0
                } else {
                    a * x.powf(*r)
                }
            }
            Fun::Kinked { inner, threshold, gamma } => {
                if x <= *threshold {
                    inner.value_unchecked(x)
                } else {
                    inner.value_unchecked(*threshold) + gamma * (x - threshold)
                }
            }
        }
    }

    /// First derivative. At a kink the right derivative is returned; callers
    /// that need the left limit use [`Fun::left_derivative`].
    pub fn derivative(&self, x: f64) -> Result<f64, ModelError> {
        if x < 0.0 {
            return Err(ModelError::NegativeArgument(x));
        }
        Ok(self.derivative_unchecked(x))
    }

    fn derivative_unchecked(&self, x: f64) -> f64 {
        match self {
            Fun::Linear { eta } => *eta,
            Fun::Power { a, r } => {
                if x == 0.0 {
                    match r.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => *a,
                        _ => 0.0,
                    }
                } else {
                    a * r * x.powf(r - 1.0)
                }
            }
            Fun::Kinked { inner, threshold, gamma } => {
                if x < *threshold {
                    inner.derivative_unchecked(x)
                } else {
                    *gamma
                }
            }
        }
    }

    /// Left-limit derivative, needed to test first-order conditions that
    /// bind inside a kink.
    pub fn left_derivative(&self, x: f64) -> Result<f64, ModelError> {
        if x < 0.0 {
            return Err(ModelError::NegativeArgument(x));
        }
        Ok(match self {
            Fun::Linear { .. } | Fun::Power { .. } => self.derivative_unchecked(x),
            Fun::Kinked { inner, threshold, gamma } => {
                if x <= *threshold {
                    inner.left_derivative(x)?
                } else {
                    *gamma
                }
            }
        })
    }

    /// Inverse on [0, inf). Closed form for linear and power pieces,
    /// piecewise dispatch for kinked composites.
    pub fn inverse(&self, y: f64) -> Result<f64, ModelError> {
        if y < 0.0 {
            return Err(ModelError::InfeasibleInverse {
                target: y,
                reason: "below the function range".into(),
            });
        }
        Ok(match self {
            Fun::Linear { eta } => y / eta,
            Fun::Power { a, r } => {
                if y == 0.0 {
                    0.0
                } else {
                    (y / a).powf(1.0 / r)
                }
            }
            Fun::Kinked { inner, threshold, gamma } => {
                let at_kink = inner.value_unchecked(*threshold);
                if y <= at_kink {
                    inner.inverse(y)?
                } else {
                    threshold + (y - at_kink) / gamma
                }
            }
        })
    }

    /// Sorted interior points where the derivative may jump.
    pub fn kink_points(&self) -> Vec<f64> {
        match self {
            Fun::Linear { .. } | Fun::Power { .. } => Vec::new(),
            Fun::Kinked { inner, threshold, .. } => {
                let mut pts = inner.kink_points();
                pts.push(*threshold);
                pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pts
            }
        }
    }

    fn validate_common(&self) -> Result<(), ModelError> {
        match self {
            Fun::Linear { eta } => {
                if !(eta.is_finite() && *eta > 0.0) {
                    return Err(ModelError::InvalidParameter(format!("linear eta = {eta}")));
                }
            }
            Fun::Power { a, r } => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(ModelError::InvalidParameter(format!("power a = {a}")));
                }
                if !(r.is_finite() && *r > 0.0) {
                    return Err(ModelError::InvalidParameter(format!("power r = {r}")));
                }
            }
            Fun::Kinked { inner, threshold, gamma } => {
                inner.validate_common()?;
                if !(threshold.is_finite() && *threshold > 0.0) {
                    return Err(ModelError::InvalidParameter(format!(
                        "kink threshold = {threshold}"
                    )));
                }
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(ModelError::InvalidParameter(format!("kink gamma = {gamma}")));
                }
            }
        }
        Ok(())
    }

    /// Weak concavity of the whole composite (piecewise check).
    fn is_concave(&self) -> bool {
        match self {
            Fun::Linear { .. } => true,
            Fun::Power { r, .. } => *r <= 1.0,
            Fun::Kinked { inner, threshold, gamma } => {
                inner.is_concave() && *gamma <= inner.left_derivative(*threshold).unwrap_or(0.0)
            }
        }
    }

    /// Weak convexity of the whole composite (piecewise check).
    fn is_convex(&self) -> bool {
        match self {
            Fun::Linear { .. } => true,
            Fun::Power { r, .. } => *r >= 1.0,
            Fun::Kinked { inner, threshold, gamma } => {
                inner.is_convex()
                    && *gamma >= inner.left_derivative(*threshold).unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// Which contract a function has to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunRole {
    Impact,
    Cost,
}

/// A validated parametric function together with its role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    fun: Fun,
    role: FunRole,
    /// False only for cost composites whose kink breaks weak convexity.
    /// Such games are accepted, but first-order conditions are no longer
    /// sufficient and callers should cross-check with the deviation oracle.
    globally_convex: bool,
}

impl FunctionSpec {
    pub fn impact(fun: Fun) -> Result<Self, ModelError> {
        fun.validate_common()?;
        if !fun.is_concave() {
            return Err(ModelError::NotConcave(format!("{fun:?}")));
        }
        Ok(Self { fun, role: FunRole::Impact, globally_convex: true })
    }

    pub fn cost(fun: Fun) -> Result<Self, ModelError> {
        fun.validate_common()?;
        // strict increase holds for every validated family (all slopes > 0);
        // convexity may fail for kinks and is only recorded
        let convex = fun.is_convex();
        Ok(Self { fun, role: FunRole::Cost, globally_convex: convex })
    }

    pub fn fun(&self) -> &Fun {
        &self.fun
    }

    pub fn role(&self) -> FunRole {
        self.role
    }

    pub fn is_globally_convex(&self) -> bool {
        self.globally_convex
    }

    pub fn value(&self, x: f64) -> Result<f64, ModelError> {
        self.fun.value(x)
    }

    pub fn derivative(&self, x: f64) -> Result<f64, ModelError> {
        self.fun.derivative(x)
    }

    pub fn left_derivative(&self, x: f64) -> Result<f64, ModelError> {
        self.fun.left_derivative(x)
    }

    pub fn inverse(&self, y: f64) -> Result<f64, ModelError> {
        self.fun.inverse(y)
    }

    pub fn kink_points(&self) -> Vec<f64> {
        self.fun.kink_points()
    }
}

/// Evaluation order for [`eval_function`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOrder {
    Value,
    Derivative,
}

/// Single entry point used by the scenario layer: closed-form evaluation of
/// a function spec at `x`.
pub fn eval_function(spec: &FunctionSpec, x: f64, order: EvalOrder) -> Result<f64, ModelError> {
    match order {
        EvalOrder::Value => spec.value(x),
        EvalOrder::Derivative => spec.derivative(x),
    }
}

/// One agent's primitives: production technology f, effort cost c, patience
/// delta, and the mechanism weights (multiplicative bias alpha, additive
/// headstart beta) assigned by the designer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub impact: FunctionSpec,
    pub cost: FunctionSpec,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl AgentSpec {
    pub fn new(
        impact: FunctionSpec,
        cost: FunctionSpec,
        delta: f64,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, ModelError> {
        if impact.role() != FunRole::Impact {
            return Err(ModelError::InvalidAgent("impact slot holds a cost function".into()));
        }
        if cost.role() != FunRole::Cost {
            return Err(ModelError::InvalidAgent("cost slot holds an impact function".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ModelError::InvalidAgent(format!("delta = {delta} outside (0,1)")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidAgent(format!("alpha = {alpha}")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(ModelError::InvalidAgent(format!("beta = {beta}")));
        }
        Ok(Self { impact, cost, delta, alpha, beta })
    }

    /// Effective output entering the recognition contest:
    /// alpha * f(x) + beta.
    pub fn effective_impact(&self, x: f64) -> Result<f64, ModelError> {
        Ok(self.alpha * self.impact.value(x)? + self.beta)
    }

    /// Derivative of the effective output (right derivative at kinks).
    pub fn effective_impact_derivative(&self, x: f64) -> Result<f64, ModelError> {
        Ok(self.alpha * self.impact.derivative(x)?)
    }

    /// Effective output at zero effort. This is the floor of the agent's
    /// contest presence: a pure headstart.
    pub fn effective_impact_at_zero(&self) -> f64 {
        self.beta
    }

    /// Solves alpha * f(x) + beta = target for x >= 0.
    pub fn invert_effective_impact(&self, target: f64) -> Result<f64, ModelError> {
        let floor = self.beta;
        let scale = 1.0f64.max(target.abs());
        if target < floor - INV_TOL_CLOSED * scale {
            return Err(ModelError::InfeasibleInverse {
                target,
                reason: format!("below the headstart floor {floor}"),
            });
        }
        if self.alpha == 0.0 {
            if (target - floor).abs() <= INV_TOL_CLOSED * scale {
                return Ok(0.0);
            }
            return Err(ModelError::InfeasibleInverse {
                target,
                reason: "agent has zero multiplicative bias".into(),
            });
        }
        let y = ((target - floor) / self.alpha).max(0.0);
        self.impact.inverse(y)
    }

    /// Effort cost at x.
    pub fn cost_at(&self, x: f64) -> Result<f64, ModelError> {
        self.cost.value(x)
    }
}

/// The full game: agents plus the voting threshold k. A proposal passes
/// with at least k favorable votes, the proposer's included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub agents: Vec<AgentSpec>,
    pub k: usize,
}

impl GameSpec {
    pub fn new(agents: Vec<AgentSpec>, k: usize) -> Result<Self, ModelError> {
        let n = agents.len();
        if n < 2 {
            return Err(ModelError::InvalidGame(format!("need at least 2 agents, got {n}")));
        }
        if k < 1 || k > n {
            return Err(ModelError::InvalidGame(format!("k = {k} outside 1..={n}")));
        }
        if agents.iter().all(|a| a.alpha == 0.0 && a.beta == 0.0) {
            return Err(ModelError::InvalidGame(
                "all agents have (alpha, beta) = (0, 0); the contest is undefined".into(),
            ));
        }
        Ok(Self { agents, k })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// True when any cost composite lost global convexity, in which case
    /// equilibrium candidates should additionally pass the deviation oracle.
    pub fn needs_oracle_check(&self) -> bool {
        self.agents.iter().any(|a| !a.cost.is_globally_convex())
    }

    /// Same primitives under a different mechanism (alpha, beta) and rule k.
    pub fn with_mechanism(&self, alpha: &[f64], beta: &[f64], k: usize) -> Result<Self, ModelError> {
        let agents = self
            .agents
            .iter()
            .zip(alpha.iter().zip(beta))
            .map(|(a, (&al, &be))| {
                AgentSpec::new(a.impact.clone(), a.cost.clone(), a.delta, al, be)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(agents, k)
    }
}

/// Recognition probabilities for an effort profile. The zero-output branch
/// assigns 1/n to everyone.
pub fn recognition_probabilities(
    xs: &[f64],
    agents: &[AgentSpec],
) -> Result<Vec<f64>, ModelError> {
    assert_eq!(xs.len(), agents.len());
    let outputs = xs
        .iter()
        .zip(agents)
        .map(|(&x, a)| a.effective_impact(x))
        .collect::<Result<Vec<_>, _>>()?;
    let total: f64 = outputs.iter().sum();
    let n = agents.len() as f64;
    if total > 0.0 {
        Ok(outputs.into_iter().map(|o| o / total).collect())
    } else {
        Ok(vec![1.0 / n; agents.len()])
    }
}

/// Designer objectives. Each form weakly increases in every effort at fixed
/// recognition probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveSpec {
    TotalEffort,
    /// Total effort minus lambda times the mean absolute deviation of p from
    /// a target profile on the simplex.
    FairnessPenalized { lambda: f64, target: Vec<f64> },
    ExpectedWinnerEffort,
    WeightedEffort { weights: Vec<f64>, lambda: f64, target: Vec<f64> },
}

impl ObjectiveSpec {
    pub fn validate(&self, n: usize) -> Result<(), ModelError> {
        let check_target = |target: &Vec<f64>| -> Result<(), ModelError> {
            if target.len() != n {
                return Err(ModelError::InvalidObjective(format!(
                    "target profile has {} entries for {} agents",
                    target.len(),
                    n
                )));
            }
            if target.iter().any(|&t| t < 0.0) {
                return Err(ModelError::InvalidObjective("negative target weight".into()));
            }
            let s: f64 = target.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(ModelError::InvalidObjective(format!("target sums to {s}, not 1")));
            }
            Ok(())
        };
        match self {
            ObjectiveSpec::TotalEffort | ObjectiveSpec::ExpectedWinnerEffort => Ok(()),
            ObjectiveSpec::FairnessPenalized { lambda, target } => {
                if *lambda < 0.0 {
                    return Err(ModelError::InvalidObjective("lambda < 0".into()));
                }
                check_target(target)
            }
            ObjectiveSpec::WeightedEffort { weights, lambda, target } => {
                if *lambda < 0.0 {
                    return Err(ModelError::InvalidObjective("lambda < 0".into()));
                }
                if weights.len() != n {
                    return Err(ModelError::InvalidObjective(format!(
                        "{} weights for {} agents",
                        weights.len(),
                        n
                    )));
                }
                if weights.iter().any(|&w| w < 0.0) {
                    return Err(ModelError::InvalidObjective("negative effort weight".into()));
                }
                check_target(target)
            }
        }
    }

    pub fn uniform_target(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }
}

/// Position of an agent relative to the marginal vote price: the k-th lowest
/// discounted continuation value. Agents below the price are always bought,
/// agents above it never are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PricePosition {
    Below,
    At,
    Above,
}

impl std::fmt::Display for PricePosition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PricePosition::Below => write!(f, "below"),
            PricePosition::At => write!(f, "at"),
            PricePosition::Above => write!(f, "above"),
        }
    }
}

impl std::str::FromStr for PricePosition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "below" => Ok(PricePosition::Below),
            "at" => Ok(PricePosition::At),
            "above" => Ok(PricePosition::Above),
            other => Err(format!("unknown price position {other:?}")),
        }
    }
}

/// A solved stationary equilibrium.
///
/// `v_delta` is the marginal vote price (k-th lowest discounted continuation
/// value) and `v_l` the residual surplus a proposer keeps after paying the
/// cheapest winning coalition. `psi[i][j]` is the probability proposer i
/// includes agent j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub y: f64,
    pub v_delta: f64,
    pub v_l: f64,
    pub partition: Vec<PricePosition>,
    /// Per-condition residual magnitudes attached by the verifier.
    pub residuals: Vec<(String, f64)>,
}

impl Equilibrium {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Effective prize spread for agent i:
    /// v_l + (1 - p_i - mu_i) / (1 - p_i) * v_delta.
    /// Collapses to v_l below the vote price and v_l + v_delta above it.
    pub fn prize_spread(&self, i: usize) -> f64 {
        let pi = self.p[i];
        if 1.0 - pi <= 0.0 {
            return self.v_l;
        }
        self.v_l + (1.0 - pi - self.mu[i]) / (1.0 - pi) * self.v_delta
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max)
    }

    /// Expected vote-buying cost for proposer i.
    pub fn vote_cost(&self, deltas: &[f64], i: usize) -> f64 {
        self.psi[i]
            .iter()
            .enumerate()
            .map(|(j, &pij)| pij * deltas[j] * self.v[j])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(eta: f64) -> Fun {
        Fun::Linear { eta }
    }

    #[test]
    fn linear_value_matches_dictator_benchmark() {
        // eta = 0.2 at x = 15/16 gives 3/16
        let f = FunctionSpec::impact(linear(0.2)).unwrap();
        let v = f.value(0.9375).unwrap();
        assert!((v - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn power_cost_is_zero_at_zero() {
        let c = FunctionSpec::cost(Fun::Power { a: 1.0, r: 2.0 }).unwrap();
        assert_eq!(c.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn kinked_value_and_slopes() {
        // constants rebuilt from the large-n scenario: r = 839.9 * 0.685 * 0.315,
        // threshold chosen so that threshold^r = 1e-4
        let r = 839.9 * 0.685 * 0.315;
        let threshold = 1e-4f64.powf(1.0 / r);
        assert!((r - 181.23).abs() < 5e-3);
        assert!((threshold - 0.9504).abs() < 5e-4);
        let gamma = 1e6;
        let c = FunctionSpec::cost(Fun::Kinked {
            inner: Box::new(Fun::Power { a: 1.0, r }),
            threshold,
            gamma,
        })
        .unwrap();
        let expected = threshold.powf(r) + gamma * (1.0 - threshold);
        let got = c.value(1.0).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected);
        // right derivative at the kink is the outer slope
        assert_eq!(c.derivative(threshold).unwrap(), gamma);
        let left = c.left_derivative(threshold).unwrap();
        assert!((left - r * threshold.powf(r - 1.0)).abs() < 1e-9);
        // the steep outer slope breaks convexity only if gamma dips below the
        // inner slope; here gamma is far above it, so the composite is convex
        assert!(c.is_globally_convex());
    }

    #[test]
    fn nonconvex_kink_is_flagged_not_rejected() {
        let c = FunctionSpec::cost(Fun::Kinked {
            inner: Box::new(Fun::Power { a: 1.0, r: 2.0 }),
            threshold: 1.0,
            gamma: 0.5,
        })
        .unwrap();
        assert!(!c.is_globally_convex());
    }

    #[test]
    fn impact_rejects_convex_power() {
        assert!(FunctionSpec::impact(Fun::Power { a: 1.0, r: 2.0 }).is_err());
    }

    #[test]
    fn negative_argument_is_domain_error() {
        let f = FunctionSpec::impact(linear(1.0)).unwrap();
        assert!(matches!(f.value(-0.1), Err(ModelError::NegativeArgument(_))));
    }

    fn plain_agent(alpha: f64, beta: f64, eta: f64) -> AgentSpec {
        AgentSpec::new(
            FunctionSpec::impact(linear(eta)).unwrap(),
            FunctionSpec::cost(linear(1.0)).unwrap(),
            0.5,
            alpha,
            beta,
        )
        .unwrap()
    }

    #[test]
    fn invert_linear_impact() {
        let a = plain_agent(1.0, 0.0, 0.2);
        let x = a.invert_effective_impact(0.1875).unwrap();
        assert!((x - 0.9375).abs() < 1e-12);
    }

    #[test]
    fn invert_with_scaled_bias() {
        // alpha = 62/35, target 1/3 inverts to 35/186
        let a = plain_agent(62.0 / 35.0, 0.0, 1.0);
        let x = a.invert_effective_impact(1.0 / 3.0).unwrap();
        assert!((x - 35.0 / 186.0).abs() < 1e-14);
    }

    #[test]
    fn invert_headstart_only_agent() {
        let a = plain_agent(0.0, 0.25, 1.0);
        assert_eq!(a.invert_effective_impact(0.25).unwrap(), 0.0);
        assert!(a.invert_effective_impact(0.5).is_err());
        assert!(a.invert_effective_impact(0.1).is_err());
    }

    #[test]
    fn recognition_zero_efforts_split_evenly() {
        let agents = vec![plain_agent(1.0, 0.0, 1.0); 3];
        let p = recognition_probabilities(&[0.0, 0.0, 0.0], &agents).unwrap();
        for pi in p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn recognition_dictator_benchmark_profile() {
        let etas = [1.0, 0.2, 0.2, 0.2];
        let agents: Vec<_> = etas.iter().map(|&e| plain_agent(1.0, 0.0, e)).collect();
        let xs = [3.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0];
        let p = recognition_probabilities(&xs, &agents).unwrap();
        for pi in p {
            assert!((pi - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn recognition_biased_three_agent_profile() {
        // alpha = (62/35, 62/37, 62c/39) with c = 0.01, beta = (0, 17/222, 0)
        let c = 0.01;
        let mk = |alpha: f64, beta: f64| {
            AgentSpec::new(
                FunctionSpec::impact(linear(1.0)).unwrap(),
                FunctionSpec::cost(linear(1.0)).unwrap(),
                0.5,
                alpha,
                beta,
            )
            .unwrap()
        };
        let agents = vec![
            mk(62.0 / 35.0, 0.0),
            mk(62.0 / 37.0, 17.0 / 222.0),
            mk(62.0 * c / 39.0, 0.0),
        ];
        let xs = [70.0 / 372.0, 57.0 / 372.0, 78.0 / (372.0 * c)];
        let p = recognition_probabilities(&xs, &agents).unwrap();
        for pi in &p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-12, "p = {p:?}");
        }
    }

    #[test]
    fn game_rejects_fully_unweighted_mechanism() {
        let agents = vec![plain_agent(0.0, 0.0, 1.0), plain_agent(0.0, 0.0, 1.0)];
        assert!(GameSpec::new(agents, 1).is_err());
    }

    #[test]
    fn objective_validation() {
        assert!(ObjectiveSpec::TotalEffort.validate(3).is_ok());
        let bad = ObjectiveSpec::FairnessPenalized { lambda: 1.0, target: vec![0.5, 0.4] };
        assert!(bad.validate(2).is_err());
        let ok = ObjectiveSpec::FairnessPenalized {
            lambda: 1.0,
            target: ObjectiveSpec::uniform_target(4),
        };
        assert!(ok.validate(4).is_ok());
    }
}
