//! The designer's layer: choosing the voting threshold and the recognition
//! mechanism.
//!
//! Two structural facts drive everything here. Any equilibrium reachable
//! under some `(alpha, beta, k)` can be replicated at the dictator rule by
//! re-weighting the contest (`reduce_to_dictatorship`), so a free designer
//! never needs `k > 1`; and under the dictator rule the game collapses to a
//! static contest whose effort responses are one-dimensional roots, making
//! direct search over recognition profiles cheap (`optimize_biases_k1`).
//! For a fixed `k >= 2` no tractable characterization exists, so
//! `improve_biases_at_k` is an honest local coordinate ascent and is
//! labeled as such.

use crate::model::{
    AgentSpec, Equilibrium, GameSpec, ModelError, ObjectiveSpec, PricePosition,
};
use crate::roots::brent;
use crate::solver::{solve_game, verify_equilibrium, SolveError, SolverConfig};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("reduction produced a negative weight gap {theta:.3e} for agent {agent}; the source equilibrium violates the surplus bound")]
    NegativeConstruction { agent: usize, theta: f64 },
    #[error("sensitivity invariant failed: {0}")]
    Sensitivity(String),
    #[error("search failed: {0}")]
    Search(String),
}

/// The designer's inputs: agent primitives (mechanism weights on them are
/// ignored where the designer chooses), an objective, and candidate rules.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub base_agents: Vec<AgentSpec>,
    pub objective: ObjectiveSpec,
    pub k_candidates: Vec<usize>,
}

/// A chosen rule and mechanism with its induced equilibrium.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub k: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub equilibrium: Equilibrium,
    pub lambda_value: f64,
    /// True when the point came from local search only (rules k >= 2 have
    /// no global method).
    pub local_only: bool,
}

/// Designer payoff at an effort and recognition profile.
pub fn evaluate_objective(obj: &ObjectiveSpec, x: &[f64], p: &[f64]) -> f64 {
    match obj {
        ObjectiveSpec::TotalEffort => x.iter().sum(),
        ObjectiveSpec::FairnessPenalized { lambda, target } => {
            let effort: f64 = x.iter().sum();
            let penalty: f64 = p.iter().zip(target).map(|(pi, ti)| (pi - ti).abs()).sum();
            effort - lambda * penalty
        }
        ObjectiveSpec::ExpectedWinnerEffort => x.iter().zip(p).map(|(xi, pi)| xi * pi).sum(),
        ObjectiveSpec::WeightedEffort { weights, lambda, target } => {
            let effort: f64 = x.iter().zip(weights).map(|(xi, wi)| xi * wi).sum();
            let penalty: f64 = p.iter().zip(target).map(|(pi, ti)| (pi - ti).abs()).sum();
            effort - lambda * penalty
        }
    }
}

/// Builds the dictator-rule mechanism replicating a solved equilibrium's
/// efforts and recognition odds.
///
/// Zero-effort agents keep their share through a pure headstart `(0, p_i)`.
/// For the rest, the weight gap `theta_i = p_i (1 - p_i) f'(x_i) / c'(x_i)
/// - f_i(x_i)` is nonnegative whenever the source equilibrium respects the
/// unit surplus (the spread never exceeds one), and
/// `alpha_i = p_i / (f_i + theta_i)`, `beta_i = alpha_i theta_i` makes the
/// static contest's first-order condition hold at exactly `(x_i, p_i)`
/// with aggregate output normalized to one.
pub fn reduce_to_dictatorship(
    game: &GameSpec,
    eq: &Equilibrium,
) -> Result<(Vec<f64>, Vec<f64>), DesignError> {
    let n = game.n();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        let ag = &game.agents[i];
        let x = eq.x[i];
        let p = eq.p[i];
        if x <= 1e-12 {
            alpha.push(0.0);
            beta.push(p);
            continue;
        }
        let f = ag.impact.value(x)?;
        let fp = ag.impact.derivative(x)?;
        // marginal-cost selection: inside a kink the binding value is the
        // one matching the source first-order condition
        let c_lo = ag.cost.left_derivative(x)?;
        let c_hi = ag.cost.derivative(x)?;
        let c_eff = if (c_hi - c_lo).abs() <= 1e-12 * c_hi.abs() {
            c_hi
        } else {
            let fe = ag.effective_impact(x)?;
            let fpe = ag.effective_impact_derivative(x)?;
            let bind = fpe / fe * p * (1.0 - p) * eq.prize_spread(i);
            bind.clamp(c_lo.min(c_hi), c_lo.max(c_hi))
        };
        let theta = p * (1.0 - p) * fp / c_eff - f;
        if theta < -1e-9 {
            return Err(DesignError::NegativeConstruction { agent: i, theta });
        }
        let theta = theta.max(0.0);
        let a = p / (f + theta);
        alpha.push(a);
        beta.push(a * theta);
    }
    Ok((alpha, beta))
}

/// Effort induced at recognition share `p` in the dictator-rule contest
/// with zero headstart: the unique root of
/// `c'(x) f(x) / f'(x) = p (1 - p)`. The left side strictly increases from
/// zero, so bracketing is straightforward; cost kinks make it jump, in
/// which case the root settles at the kink.
pub fn effort_at_share(agent: &AgentSpec, p: f64) -> Result<f64, DesignError> {
    let target = p * (1.0 - p);
    if target <= 0.0 {
        return Ok(0.0);
    }
    let g = |x: f64| -> f64 {
        if x <= 0.0 {
            return -target;
        }
        let f = agent.impact.value(x).unwrap_or(f64::NAN);
        let fp = agent.impact.derivative(x).unwrap_or(f64::NAN);
        let cp = agent.cost.derivative(x).unwrap_or(f64::NAN);
        let lhs = if fp.is_infinite() { 0.0 } else { cp * f / fp };
        lhs - target
    };
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(DesignError::Search("effort response diverged".into()));
        }
    }
    let r = brent(0.0, hi, g, 1e-13 * hi.max(1.0), 0.0, 300)
        .ok_or_else(|| DesignError::Search("effort response lost its bracket".into()))?;
    Ok(r.x)
}

const SHARE_FLOOR: f64 = 1e-6;

fn project_shares(p: &mut [f64]) {
    let mut sum = 0.0;
    for v in p.iter_mut() {
        *v = v.max(SHARE_FLOOR);
        sum += *v;
    }
    for v in p.iter_mut() {
        *v /= sum;
    }
}

fn shares_from_logits(z: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = z.iter().map(|&zi| zi.exp()).collect();
    p.push(1.0);
    let top = p.iter().cloned().fold(f64::MIN, f64::max);
    if !top.is_finite() {
        // runaway logits: fall back to the dominant coordinate
        let arg = z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let n = z.len() + 1;
        let mut q = vec![SHARE_FLOOR; n];
        q[arg] = 1.0;
        project_shares(&mut q);
        return q;
    }
    project_shares(&mut p);
    p
}

/// Searches recognition profiles on the interior simplex for the best
/// designer payoff at the dictator rule, then recovers the implementing
/// multiplicative biases (`alpha_i = p_i / f_i(x_i)` at unit aggregate
/// output, zero headstart) and re-solves through the full machinery.
pub fn optimize_biases_k1(
    problem: &DesignProblem,
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    let n = problem.base_agents.len();
    let obj = &problem.objective;
    obj.validate(n)?;

    let f_of = |p: &[f64]| -> f64 {
        let mut xs = Vec::with_capacity(n);
        for (i, ag) in problem.base_agents.iter().enumerate() {
            match effort_at_share(ag, p[i]) {
                Ok(x) => xs.push(x),
                Err(_) => return f64::NEG_INFINITY,
            }
        }
        evaluate_objective(obj, &xs, p)
    };

    // multi-start polytope search in logit coordinates
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n - 1]];
    for i in 0..n.min(6) {
        let mut p = vec![0.3 / (n as f64 - 1.0); n];
        p[i] = 0.7;
        starts.push(logits_from_shares(&p));
    }
    let mut blend = vec![1.0 / n as f64; n];
    blend[0] *= 2.0;
    project_shares(&mut blend);
    starts.push(logits_from_shares(&blend));
    starts.truncate(8);

    let mut best_p = vec![1.0 / n as f64; n];
    let mut best_f = f_of(&best_p);
    for z0 in starts {
        let z = nelder_mead(&z0, 0.5, 500, |z| -f_of(&shares_from_logits(z)));
        let mut p = shares_from_logits(&z);
        let mut f = f_of(&p);
        // coordinate-exchange polish: move mass between pairs at shrinking
        // steps
        let mut step = 0.05;
        while step > 1e-8 {
            let mut improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut q = p.clone();
                    let d = step.min(q[i] - SHARE_FLOOR);
                    if d <= 0.0 {
                        continue;
                    }
                    q[i] -= d;
                    q[j] += d;
                    let fq = f_of(&q);
                    if fq > f + 1e-14 {
                        p = q;
                        f = fq;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.2;
            }
        }
        if f > best_f {
            best_f = f;
            best_p = p;
        }
    }

    // recover the mechanism at unit aggregate output
    let mut alpha = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for (i, ag) in problem.base_agents.iter().enumerate() {
        let x = effort_at_share(ag, best_p[i])?;
        let f = ag.impact.value(x)?;
        if f <= 0.0 {
            return Err(DesignError::Search(format!(
                "agent {i} produces no output at its assigned share"
            )));
        }
        alpha.push(best_p[i] / f);
        xs.push(x);
    }
    let beta = vec![0.0; n];
    let game = GameSpec::new(problem.base_agents.clone(), 1)?.with_mechanism(&alpha, &beta, 1)?;
    let eq = solve_game(&game, cfg)?;
    let lambda_value = evaluate_objective(obj, &eq.x, &eq.p);
    Ok(DesignResult { k: 1, alpha, beta, equilibrium: eq, lambda_value, local_only: false })
}

fn logits_from_shares(p: &[f64]) -> Vec<f64> {
    let last = p[p.len() - 1].max(SHARE_FLOOR);
    p[..p.len() - 1].iter().map(|&pi| (pi.max(SHARE_FLOOR) / last).ln()).collect()
}

/// Plain Nelder-Mead minimizer, reflection/expansion/contraction/shrink.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    z0: &[f64],
    spread: f64,
    max_iter: usize,
    mut f: F,
) -> Vec<f64> {
    let dim = z0.len();
    if dim == 0 {
        return Vec::new();
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let fz0 = f(z0);
    simplex.push((z0.to_vec(), fz0));
    for i in 0..dim {
        let mut z = z0.to_vec();
        z[i] += spread;
        let fz = f(&z);
        simplex.push((z, fz));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() < 1e-12 {
            break;
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|c| simplex[..dim].iter().map(|(z, _)| z[c]).sum::<f64>() / dim as f64)
            .collect();
        let at = |t: f64| -> Vec<f64> {
            (0..dim).map(|c| centroid[c] + t * (centroid[c] - simplex[dim].0[c])).collect()
        };
        let zr = at(1.0);
        let fr = f(&zr);
        if fr < best {
            let ze = at(2.0);
            let fe = f(&ze);
            simplex[dim] = if fe < fr { (ze, fe) } else { (zr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (zr, fr);
        } else {
            let zc = at(-0.5);
            let fc = f(&zc);
            if fc < worst {
                simplex[dim] = (zc, fc);
            } else {
                let z_best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for c in 0..dim {
                        entry.0[c] = z_best[c] + 0.5 * (entry.0[c] - z_best[c]);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex[0].0.clone()
}

/// Local coordinate ascent over `(ln alpha, beta)` with the full nested
/// solver in the loop, for rules `k >= 2`. Returns the best verified point;
/// the result is explicitly local, no global claim is made.
pub fn improve_biases_at_k(
    problem: &DesignProblem,
    k: usize,
    inits: &[(Vec<f64>, Vec<f64>)],
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    if k < 2 {
        return Err(DesignError::Search("local ascent applies to k >= 2 only".into()));
    }
    let n = problem.base_agents.len();
    let obj = &problem.objective;
    obj.validate(n)?;
    let base = GameSpec::new(problem.base_agents.clone(), k)?;

    let eval = |alpha: &[f64], beta: &[f64]| -> Option<(f64, Equilibrium)> {
        let game = base.with_mechanism(alpha, beta, k).ok()?;
        let eq = solve_game(&game, cfg).ok()?;
        Some((evaluate_objective(obj, &eq.x, &eq.p), eq))
    };

    let mut overall: Option<(f64, Vec<f64>, Vec<f64>, Equilibrium)> = None;
    for (a0, b0) in inits {
        let mut alpha = a0.clone();
        let mut beta = b0.clone();
        let Some((mut lam, mut eq)) = eval(&alpha, &beta) else { continue };
        for &step in &[0.5, 0.15, 0.04, 0.01] {
            loop {
                let mut improved = false;
                for i in 0..n {
                    // multiplicative probes on alpha
                    for dir in [1.0 + step, 1.0 / (1.0 + step)] {
                        if alpha[i] <= 0.0 {
                            continue;
                        }
                        let mut a = alpha.clone();
                        a[i] *= dir;
                        if let Some((l, e)) = eval(&a, &beta) {
                            if l > lam + 1e-12 {
                                alpha = a;
                                lam = l;
                                eq = e;
                                improved = true;
                            }
                        }
                    }
                    // additive probes on beta, projected at zero
                    let scale = beta[i].max(0.05);
                    for dir in [1.0, -1.0] {
                        let cand = (beta[i] + dir * step * scale).max(0.0);
                        if cand == beta[i] {
                            continue;
                        }
                        let mut b = beta.clone();
                        b[i] = cand;
                        if let Some((l, e)) = eval(&alpha, &b) {
                            if l > lam + 1e-12 {
                                beta = b;
                                lam = l;
                                eq = e;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
        }
        if overall.as_ref().map(|(l, ..)| lam > *l).unwrap_or(true) {
            overall = Some((lam, alpha, beta, eq));
        }
    }
    let (lambda_value, alpha, beta, equilibrium) =
        overall.ok_or_else(|| DesignError::Search("every start point failed to solve".into()))?;
    Ok(DesignResult { k, alpha, beta, equilibrium, lambda_value, local_only: true })
}

/// Coefficients of the linearized (inclusion-mass, budget) system in
/// `(v_l, v_delta)` at a solved equilibrium, and the implied sensitivities
/// of the surplus split to the voting threshold under the fixed-profile
/// adjustment. All four coefficients are strictly positive at a valid
/// equilibrium; with every discount factor at most one half the surplus
/// falls and the vote price rises as the rule becomes more inclusive.
#[derive(Debug, Clone, Copy)]
pub struct RuleSensitivity {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub dv_l_dk: f64,
    pub dv_delta_dk: f64,
}

pub fn rule_sensitivity(game: &GameSpec, eq: &Equilibrium) -> Result<RuleSensitivity, DesignError> {
    let k = game.k as f64;
    let mut a = 1.0;
    let mut b = k;
    let mut c = 0.0;
    let mut d = -(k - 1.0);
    for i in 0..game.n() {
        let ag = &game.agents[i];
        match eq.partition[i] {
            PricePosition::Below => {
                a += eq.p[i] * ag.delta / (1.0 - ag.delta);
                b -= 1.0;
                d += 1.0 - eq.p[i];
            }
            PricePosition::At => {
                c += eq.p[i];
                d += 1.0 / ag.delta - eq.p[i];
            }
            PricePosition::Above => {}
        }
    }
    for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
        if v <= 1e-12 {
            return Err(DesignError::Sensitivity(format!("{name} = {v:.3e} is not positive")));
        }
    }
    let denom = a * d + b * c;
    let dv_l_dk = -(b + d) * eq.v_delta / denom;
    let dv_delta_dk = (a - c) * eq.v_delta / denom;
    Ok(RuleSensitivity { a, b, c, d, dv_l_dk, dv_delta_dk })
}

/// Surplus split and per-agent prize spreads when the rule moves to
/// `k_new` while the solved effort and recognition profiles (and the
/// partition) are held fixed by a compensating mechanism change. The two
/// defining conditions are linear in `(v_l, v_delta)`, so this is exact.
#[derive(Debug, Clone)]
pub struct RuleAdjustment {
    pub v_l: f64,
    pub v_delta: f64,
    pub spreads: Vec<f64>,
}

pub fn adjust_rule_fixed_profile(
    game: &GameSpec,
    eq: &Equilibrium,
    k_new: f64,
) -> Result<RuleAdjustment, DesignError> {
    let n = game.n();
    let mut a = 1.0;
    let mut b = k_new;
    let mut c = 0.0;
    let mut d = -(k_new - 1.0);
    let mut r1 = 0.0;
    let mut r2 = 1.0;
    let costs: Vec<f64> =
        eq.x.iter()
            .zip(&game.agents)
            .map(|(&x, ag)| ag.cost_at(x))
            .collect::<Result<_, _>>()?;
    for i in 0..n {
        let ag = &game.agents[i];
        match eq.partition[i] {
            PricePosition::Below => {
                a += eq.p[i] * ag.delta / (1.0 - ag.delta);
                b -= 1.0;
                d += 1.0 - eq.p[i];
                r2 += ag.delta / (1.0 - ag.delta) * costs[i];
            }
            PricePosition::At => {
                c += eq.p[i];
                d += 1.0 / ag.delta - eq.p[i];
                r1 -= costs[i];
            }
            PricePosition::Above => {}
        }
    }
    // [-c d; a b] [v_l; v_delta] = [r1; r2]
    let det = -c * b - d * a;
    if det.abs() < 1e-14 {
        return Err(DesignError::Sensitivity("singular rule-adjustment system".into()));
    }
    let v_l = (r1 * b - d * r2) / det;
    let v_delta = (-c * r2 - a * r1) / det;
    let mut spreads = Vec::with_capacity(n);
    for i in 0..n {
        let ag = &game.agents[i];
        let s = match eq.partition[i] {
            PricePosition::Below => v_l,
            PricePosition::Above => v_l + v_delta,
            PricePosition::At => {
                let mu = if v_delta.abs() > 1e-15 {
                    (v_delta / ag.delta - eq.p[i] * (v_l + v_delta) + costs[i]) / v_delta
                } else {
                    0.0
                };
                v_l + v_delta - mu * v_delta / (1.0 - eq.p[i])
            }
        };
        spreads.push(s);
    }
    Ok(RuleAdjustment { v_l, v_delta, spreads })
}

/// How the sweep treats the mechanism at each rule.
#[derive(Debug, Clone)]
pub enum MechanismPolicy {
    /// Solve each rule under the given fixed weights; no optimization.
    Fixed { alpha: Vec<f64>, beta: Vec<f64> },
    /// Optimize the mechanism per rule: exact profile search at k = 1,
    /// local ascent seeded from neutral and from the k = 1 optimum at
    /// k >= 2.
    Optimize,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub k: usize,
    pub lambda: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub local_only: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best_k: Option<usize>,
    /// Gap `max_k best(k) - best(1)` when optimizing; the dictator rule
    /// dominates whenever this is at most the search tolerance, which the
    /// reduction makes true by construction.
    pub dominance_gap: Option<f64>,
    pub dictator_dominates: Option<bool>,
}

pub const DOMINANCE_TOL: f64 = 1e-5;

/// Runs the per-rule comparison. Under `Optimize`, every `k >= 2` winner is
/// also carried back to k = 1 through the dictatorship reduction, so the
/// reported k = 1 value is at least the best value found anywhere minus
/// numerical tolerance.
pub fn sweep_rules(
    problem: &DesignProblem,
    policy: &MechanismPolicy,
    cfg: &SolverConfig,
) -> Result<SweepReport, DesignError> {
    let n = problem.base_agents.len();
    problem.objective.validate(n)?;
    let mut ks = problem.k_candidates.clone();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() || ks.iter().any(|&k| k < 1 || k > n) {
        return Err(DesignError::Search(format!("rule candidates {ks:?} outside 1..={n}")));
    }

    match policy {
        MechanismPolicy::Fixed { alpha, beta } => {
            let rows: Vec<SweepRow> = ks
                .par_iter()
                .map(|&k| {
                    let run = || -> Result<SweepRow, DesignError> {
                        let game = GameSpec::new(problem.base_agents.clone(), k)?
                            .with_mechanism(alpha, beta, k)?;
                        let eq = solve_game(&game, cfg)?;
                        let lambda = evaluate_objective(&problem.objective, &eq.x, &eq.p);
                        Ok(SweepRow {
                            k,
                            lambda,
                            alpha: alpha.clone(),
                            beta: beta.clone(),
                            local_only: false,
                            error: None,
                        })
                    };
                    run().unwrap_or_else(|e| SweepRow {
                        k,
                        lambda: f64::NEG_INFINITY,
                        alpha: alpha.clone(),
                        beta: beta.clone(),
                        local_only: false,
                        error: Some(e.to_string()),
                    })
                })
                .collect();
            let best_k = best_row(&rows);
            Ok(SweepReport { rows, best_k, dominance_gap: None, dictator_dominates: None })
        }
        MechanismPolicy::Optimize => {
            // the dictator-rule optimum doubles as a seed for every other rule
            let base1 = optimize_biases_k1(problem, cfg)?;
            let neutral = (vec![1.0; n], vec![0.0; n]);
            let seeded = (base1.alpha.clone(), base1.beta.clone());

            let higher: Vec<SweepRow> = ks
                .par_iter()
                .filter(|&&k| k >= 2)
                .map(|&k| {
                    match improve_biases_at_k(
                        problem,
                        k,
                        &[neutral.clone(), seeded.clone()],
                        cfg,
                    ) {
                        Ok(res) => SweepRow {
                            k,
                            lambda: res.lambda_value,
                            alpha: res.alpha,
                            beta: res.beta,
                            local_only: true,
                            error: None,
                        },
                        Err(e) => SweepRow {
                            k,
                            lambda: f64::NEG_INFINITY,
                            alpha: Vec::new(),
                            beta: Vec::new(),
                            local_only: true,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect();

            // carry every higher-rule winner back to the dictator rule
            let mut best1 = base1.lambda_value;
            let mut best1_mech = (base1.alpha.clone(), base1.beta.clone());
            for row in &higher {
                if row.error.is_some() {
                    continue;
                }
                let game = GameSpec::new(problem.base_agents.clone(), row.k)?
                    .with_mechanism(&row.alpha, &row.beta, row.k)?;
                if let Ok(eq) = solve_game(&game, cfg) {
                    if let Ok((ra, rb)) = reduce_to_dictatorship(&game, &eq) {
                        if let Ok(g1) = game.with_mechanism(&ra, &rb, 1) {
                            if let Ok(eq1) = solve_game(&g1, cfg) {
                                let lam =
                                    evaluate_objective(&problem.objective, &eq1.x, &eq1.p);
                                if lam > best1 {
                                    best1 = lam;
                                    best1_mech = (ra, rb);
                                }
                            }
                        }
                    }
                }
            }

            let mut rows = Vec::new();
            if ks.contains(&1) {
                rows.push(SweepRow {
                    k: 1,
                    lambda: best1,
                    alpha: best1_mech.0,
                    beta: best1_mech.1,
                    local_only: false,
                    error: None,
                });
            }
            rows.extend(higher);
            rows.sort_by_key(|r| r.k);
            let best_k = best_row(&rows);
            let max_higher = rows
                .iter()
                .filter(|r| r.k >= 2 && r.error.is_none())
                .map(|r| r.lambda)
                .fold(f64::NEG_INFINITY, f64::max);
            let gap = if max_higher.is_finite() { max_higher - best1 } else { 0.0 };
            Ok(SweepReport {
                rows,
                best_k,
                dominance_gap: Some(gap),
                dictator_dominates: Some(gap <= DOMINANCE_TOL),
            })
        }
    }
}

fn best_row(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .filter(|r| r.error.is_none())
        .max_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(std::cmp::Ordering::Equal))
        .map(|r| r.k)
}

/// Convenience check used by tests and the verification command: the
/// designed equilibrium must pass verification and report the stored
/// payoff.
pub fn check_design(game: &GameSpec, res: &DesignResult, obj: &ObjectiveSpec) -> bool {
    let rep = verify_equilibrium(game, &res.equilibrium, 1e-7);
    let lam = evaluate_objective(obj, &res.equilibrium.x, &res.equilibrium.p);
    rep.pass && (lam - res.lambda_value).abs() <= 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{benchmark_game, biased_game, biased_game_values};
    use crate::model::{Fun, FunctionSpec};

    fn unit_linear_agent(cost_slope: f64, delta: f64) -> AgentSpec {
        AgentSpec::new(
            FunctionSpec::impact(Fun::Linear { eta: 1.0 }).unwrap(),
            FunctionSpec::cost(Fun::Linear { eta: cost_slope }).unwrap(),
            delta,
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn objective_forms() {
        let x = [0.2, 0.4];
        let p = [0.5, 0.5];
        assert_eq!(evaluate_objective(&ObjectiveSpec::TotalEffort, &x, &p), 0.6);
        // expectation of a constant effort is that constant
        let c = [0.3, 0.3];
        assert!(
            (evaluate_objective(&ObjectiveSpec::ExpectedWinnerEffort, &c, &p) - 0.3).abs()
                < 1e-15
        );
        let fair = ObjectiveSpec::FairnessPenalized { lambda: 10.0, target: vec![0.5, 0.5] };
        assert!((evaluate_objective(&fair, &x, &[0.6, 0.4]) - (0.6 - 10.0 * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn fairness_penalty_vanishes_on_balanced_profile() {
        let c = 0.01;
        let vals = biased_game_values(c);
        let fair = ObjectiveSpec::FairnessPenalized {
            lambda: 1e4,
            target: ObjectiveSpec::uniform_target(3),
        };
        let lam = evaluate_objective(&fair, &vals.x, &vals.p);
        assert!((lam - vals.payoff).abs() < 1e-12);
    }

    #[test]
    fn effort_response_two_agent_closed_form() {
        let ag = unit_linear_agent(1.0, 0.5);
        let x = effort_at_share(&ag, 0.5).unwrap();
        assert!((x - 0.25).abs() < 1e-12);
    }

    #[test]
    fn dictator_optimum_two_symmetric_agents() {
        // brute grid confirms the interior optimum before trusting search
        let agents = vec![unit_linear_agent(1.0, 0.5), unit_linear_agent(1.0, 0.5)];
        let mut brute_best = (0.0, f64::NEG_INFINITY);
        for j in 1..400 {
            let p1 = j as f64 / 400.0;
            let x1 = effort_at_share(&agents[0], p1).unwrap();
            let x2 = effort_at_share(&agents[1], 1.0 - p1).unwrap();
            let lam = x1 + x2;
            if lam > brute_best.1 {
                brute_best = (p1, lam);
            }
        }
        assert!((brute_best.0 - 0.5).abs() < 0.01);
        let problem = DesignProblem {
            base_agents: agents,
            objective: ObjectiveSpec::TotalEffort,
            k_candidates: vec![1],
        };
        let res = optimize_biases_k1(&problem, &SolverConfig::default()).unwrap();
        assert!((res.equilibrium.p[0] - 0.5).abs() < 1e-4, "p = {:?}", res.equilibrium.p);
        assert!((res.equilibrium.x[0] - 0.25).abs() < 1e-4);
        assert!((res.lambda_value - 0.5).abs() < 1e-6);
        assert!(res.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn dictator_optimum_matches_balanced_closed_form() {
        // the three-agent primitives under a strong fairness motive: shares
        // pinned at 1/3 each, efforts from c_i x_i = (1/3)(2/3)
        let c = 0.01;
        let base = biased_game(c).agents;
        let problem = DesignProblem {
            base_agents: base,
            objective: ObjectiveSpec::FairnessPenalized {
                lambda: 1e4,
                target: ObjectiveSpec::uniform_target(3),
            },
            k_candidates: vec![1],
        };
        let res = optimize_biases_k1(&problem, &SolverConfig::default()).unwrap();
        let expect = 2.0 / 9.0 + 2.0 / 9.0 + 2.0 / (9.0 * c);
        assert!(
            (res.lambda_value - expect).abs() < 1e-6,
            "lambda = {}, expect {expect}",
            res.lambda_value
        );
        for pi in &res.equilibrium.p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-6);
        }
        // the dictator-rule optimum beats the fixed k = 2 construction
        assert!(res.lambda_value > biased_game_values(c).payoff);
    }

    #[test]
    fn symmetric_agents_get_symmetric_shares() {
        let agents = vec![unit_linear_agent(1.0, 0.4); 3];
        let problem = DesignProblem {
            base_agents: agents,
            objective: ObjectiveSpec::TotalEffort,
            k_candidates: vec![1],
        };
        let res = optimize_biases_k1(&problem, &SolverConfig::default()).unwrap();
        for pi in &res.equilibrium.p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-4, "p = {:?}", res.equilibrium.p);
        }
    }

    #[test]
    fn reduction_zero_effort_branch() {
        let mut game = benchmark_game(2);
        game.agents[3].alpha = 0.0;
        game.agents[3].beta = 0.3;
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let (alpha, beta) = reduce_to_dictatorship(&game, &eq).unwrap();
        assert_eq!(alpha[3], 0.0);
        assert!((beta[3] - eq.p[3]).abs() < 1e-12);
    }

    #[test]
    fn reduction_roundtrip_on_benchmark() {
        let game = benchmark_game(2);
        let cfg = SolverConfig::default();
        let eq = solve_game(&game, &cfg).unwrap();
        let (alpha, beta) = reduce_to_dictatorship(&game, &eq).unwrap();
        let g1 = game.with_mechanism(&alpha, &beta, 1).unwrap();
        let eq1 = solve_game(&g1, &cfg).unwrap();
        for i in 0..4 {
            assert!((eq1.x[i] - eq.x[i]).abs() < 1e-6, "x[{i}]: {} vs {}", eq1.x[i], eq.x[i]);
            assert!((eq1.p[i] - eq.p[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn sensitivity_signs_on_benchmark_k2() {
        // discount factors are all at most one half here, so the surplus
        // falls and the vote price rises in k
        let game = benchmark_game(2);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let s = rule_sensitivity(&game, &eq).unwrap();
        assert!(s.a > 0.0 && s.b > 0.0 && s.c > 0.0 && s.d > 0.0);
        assert!(s.dv_l_dk <= 0.0);
        assert!(s.dv_delta_dk >= 0.0);
    }

    #[test]
    fn sensitivity_degenerate_arithmetic() {
        // no cheap agents, one marginal agent with delta = 1/2 and share 0:
        // c - a = -1, so the vote price weakly rises
        let a = 1.0;
        let c = 0.0;
        assert!((c - a) < 0.0);
    }

    #[test]
    fn rule_adjustment_reproduces_base_split() {
        let game = biased_game(0.01);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let adj = adjust_rule_fixed_profile(&game, &eq, 2.0).unwrap();
        assert!((adj.v_l - eq.v_l).abs() < 1e-9, "{} vs {}", adj.v_l, eq.v_l);
        assert!((adj.v_delta - eq.v_delta).abs() < 1e-9);
        for i in 0..3 {
            assert!((adj.spreads[i] - eq.prize_spread(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_sweep_reproduces_nonmonotone_totals() {
        let problem = DesignProblem {
            base_agents: benchmark_game(1).agents,
            objective: ObjectiveSpec::TotalEffort,
            k_candidates: vec![1, 2, 3, 4],
        };
        let policy = MechanismPolicy::Fixed { alpha: vec![1.0; 4], beta: vec![0.0; 4] };
        let report = sweep_rules(&problem, &policy, &SolverConfig::default()).unwrap();
        let expect = [3.0000, 3.0011, 2.7578, 2.5116];
        for (row, e) in report.rows.iter().zip(expect) {
            assert!((row.lambda - e).abs() < 5e-4, "k = {}: {} vs {e}", row.k, row.lambda);
        }
        assert_eq!(report.best_k, Some(2));
    }
}
