//! Independent checks of solver output.
//!
//! None of this shares code with the nested solver: deviations are scored
//! straight from the value recursion's maximand, the dictator-rule fixed
//! point iterates best responses directly, and the Monte Carlo simulator
//! replays the bargaining protocol move by move. Agreement between these
//! and the solver is the main correctness evidence.

use crate::model::{Equilibrium, GameSpec, ModelError};
use crate::roots::brent;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("seed 0 is reserved; pick any other seed for reproducible runs")]
    ReservedSeed,
    #[error("fixed-point iteration did not converge after {iterations} sweeps (step {step:.3e})")]
    NonConvergence { iterations: usize, step: f64 },
    #[error("oracle requires k = 1, game has k = {0}")]
    NotDictatorRule(usize),
}

/// Result of a one-agent deviation scan.
#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub agent: usize,
    pub best_deviation: f64,
    /// Payoff improvement over the equilibrium action; nonnegative up to
    /// rounding because the grid includes the equilibrium point.
    pub gain: f64,
    pub grid: (f64, f64, usize),
}

/// Deviation payoff for agent `i` at effort `x`, holding everyone else at
/// the equilibrium: the proposer's net share when recognized, the
/// discounted continuation when bought into a coalition, minus cost. The
/// conditional inclusion odds are held at their equilibrium ratio, which is
/// exactly how opponents' stationary coalition behavior treats a deviator.
fn deviation_payoff(
    game: &GameSpec,
    eq: &Equilibrium,
    i: usize,
    x: f64,
    others_output: f64,
    win_value: f64,
    lose_ratio: f64,
) -> Result<f64, ModelError> {
    let ag = &game.agents[i];
    let own = ag.effective_impact(x)?;
    let total = others_output + own;
    let p = if total > 0.0 { own / total } else { 1.0 / game.n() as f64 };
    Ok(p * win_value + (1.0 - p) * lose_ratio * ag.delta * eq.v[i] - ag.cost_at(x)?)
}

/// Scans the value-recursion maximand for agent `i` over `grid`
/// (lo, hi, points), adding the equilibrium action and the agent's cost
/// kinks to the grid. A gain below the caller's tolerance certifies an
/// approximate best response.
pub fn best_response_scan(
    game: &GameSpec,
    eq: &Equilibrium,
    agent: usize,
    grid: (f64, f64, usize),
) -> Result<DeviationReport, OracleError> {
    let (lo, hi, points) = grid;
    let deltas: Vec<f64> = game.agents.iter().map(|a| a.delta).collect();
    let w = eq.vote_cost(&deltas, agent);
    let win_value = 1.0 - w;
    let lose_ratio =
        if 1.0 - eq.p[agent] > 1e-12 { eq.mu[agent] / (1.0 - eq.p[agent]) } else { 0.0 };
    let others_output: f64 = (0..game.n())
        .filter(|&j| j != agent)
        .map(|j| game.agents[j].effective_impact(eq.x[j]))
        .sum::<Result<f64, _>>()?;

    let x_eq = eq.x[agent];
    let base = deviation_payoff(game, eq, agent, x_eq, others_output, win_value, lose_ratio)?;

    let mut candidates: Vec<f64> = (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points.max(2) - 1) as f64)
        .collect();
    candidates.push(x_eq);
    candidates.extend(
        game.agents[agent].cost.kink_points().into_iter().filter(|&t| t >= lo && t <= hi),
    );

    let mut best_x = x_eq;
    let mut best_u = base;
    for x in candidates {
        if x < 0.0 {
            continue;
        }
        let u = deviation_payoff(game, eq, agent, x, others_output, win_value, lose_ratio)?;
        if u > best_u {
            best_u = u;
            best_x = x;
        }
    }
    Ok(DeviationReport { agent, best_deviation: best_x, gain: best_u - base, grid })
}

/// Best response of one agent in the dictator-rule contest (prize spread 1),
/// given the other agents' combined effective output. Solved from the
/// first-order condition, whose marginal-benefit side strictly decreases in
/// effort; kink points are checked directly.
fn static_best_response(game: &GameSpec, i: usize, others_output: f64) -> Result<f64, OracleError> {
    let ag = &game.agents[i];
    if ag.alpha == 0.0 || others_output <= 0.0 {
        return Ok(0.0);
    }
    let margin = |x: f64| -> f64 {
        let own = ag.effective_impact(x).unwrap_or(f64::NAN);
        let d = ag.effective_impact_derivative(x).unwrap_or(f64::NAN);
        let total = own + others_output;
        let mb = if d.is_infinite() { f64::INFINITY } else { d * others_output / (total * total) };
        let mc = ag.cost.derivative(x).unwrap_or(f64::NAN);
        if mb.is_infinite() {
            f64::INFINITY
        } else {
            mb - mc
        }
    };
    if margin(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while margin(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(OracleError::NonConvergence { iterations: 0, step: hi });
        }
    }
    let r = brent(0.0, hi, margin, 1e-13 * hi.max(1.0), 0.0, 300)
        .ok_or(OracleError::NonConvergence { iterations: 0, step: hi })?;
    Ok(r.x)
}

/// Damped best-response iteration for dictator-rule games. Converges to the
/// unique equilibrium effort profile and serves as an independent
/// cross-check of the nested solver at k = 1. Undamped iteration can cycle,
/// so keep `damping` strictly inside (0, 1]; 0.5 is a good default.
pub fn static_contest_fixed_point(
    game: &GameSpec,
    damping: f64,
    max_iter: usize,
) -> Result<Vec<f64>, OracleError> {
    if game.k != 1 {
        return Err(OracleError::NotDictatorRule(game.k));
    }
    let n = game.n();
    let mut x: Vec<f64> = vec![0.1; n];
    for i in 0..n {
        if game.agents[i].alpha == 0.0 {
            x[i] = 0.0;
        }
    }
    let mut step = f64::INFINITY;
    for it in 0..max_iter {
        step = 0.0;
        for i in 0..n {
            let others: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| game.agents[j].effective_impact(x[j]))
                .sum::<Result<f64, _>>()?;
            let br = static_best_response(game, i, others)?;
            let next = (1.0 - damping) * x[i] + damping * br;
            step = step.max((next - x[i]).abs());
            x[i] = next;
        }
        if step < 1e-12 {
            return Ok(x);
        }
        let _ = it;
    }
    Err(OracleError::NonConvergence { iterations: max_iter, step })
}

/// Empirical protocol statistics from seeded simulation.
#[derive(Debug, Clone)]
pub struct SimulationStats {
    pub rounds: u64,
    /// (agreement period, count); verified equilibria settle in period 0.
    pub agreement_histogram: Vec<(usize, u64)>,
    pub p_hat: Vec<f64>,
    pub p_se: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub mu_se: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub v_se: Vec<f64>,
}

/// Draws a subset with prescribed inclusion probabilities summing to an
/// integer, by systematic sampling: one uniform draw, then unit strides
/// through the cumulative weights. Low variance and exactly the requested
/// marginals.
fn systematic_sample(weights: &[f64], want: usize, u: f64, out: &mut Vec<usize>) {
    out.clear();
    if want == 0 {
        return;
    }
    let mut cum = 0.0;
    let mut next = u;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        while next < cum - 1e-15 && out.len() < want {
            out.push(j);
            next += 1.0;
        }
        if out.len() == want {
            break;
        }
    }
    // guard against cumulative rounding at the tail
    let mut j = weights.len();
    while out.len() < want && j > 0 {
        j -= 1;
        if weights[j] > 0.0 && !out.contains(&j) {
            out.push(j);
        }
    }
}

/// Replays the bargaining protocol: each period agents pay their stationary
/// efforts, a proposer is drawn from the recognition odds, buys a coalition
/// sampled from its inclusion row, and the proposal passes if it collects k
/// favorable votes. Per-round randomness comes from a dedicated substream of
/// (seed, round), so runs are reproducible and order-independent.
pub fn simulate_bargaining(
    game: &GameSpec,
    eq: &Equilibrium,
    rounds: u64,
    seed: u64,
) -> Result<SimulationStats, OracleError> {
    if seed == 0 {
        return Err(OracleError::ReservedSeed);
    }
    let n = game.n();
    let k = game.k;
    let deltas: Vec<f64> = game.agents.iter().map(|a| a.delta).collect();
    let costs: Vec<f64> =
        eq.x.iter()
            .zip(&game.agents)
            .map(|(&x, a)| a.cost_at(x))
            .collect::<Result<_, _>>()?;
    let demand: Vec<f64> = (0..n).map(|j| deltas[j] * eq.v[j]).collect();

    let mut p_cnt = vec![0u64; n];
    let mut mu_cnt = vec![0u64; n];
    let mut pay_sum = vec![0.0f64; n];
    let mut pay_sq = vec![0.0f64; n];
    let mut agreement: std::collections::BTreeMap<usize, u64> = std::collections::BTreeMap::new();
    let mut coalition: Vec<usize> = Vec::with_capacity(k);
    const MAX_PERIODS: usize = 10_000;

    for round in 0..rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round);
        let mut pay = vec![0.0f64; n];
        let mut discount = vec![1.0f64; n];
        let mut period = MAX_PERIODS;
        for t in 0..MAX_PERIODS {
            for i in 0..n {
                pay[i] -= discount[i] * costs[i];
            }
            // recognition draw
            let u: f64 = rng.random();
            let mut proposer = n - 1;
            let mut cum = 0.0;
            for (i, &pi) in eq.p.iter().enumerate() {
                cum += pi;
                if u < cum {
                    proposer = i;
                    break;
                }
            }
            if t == 0 {
                p_cnt[proposer] += 1;
            }
            // coalition draw with the proposer's inclusion row
            let u2: f64 = rng.random();
            systematic_sample(&eq.psi[proposer], k - 1, u2, &mut coalition);
            if t == 0 {
                for &j in &coalition {
                    mu_cnt[j] += 1;
                }
            }
            // stage-undominated voting: a member accepts iff the offered
            // share meets the discounted continuation value; the proposer
            // offers exactly that reservation, so each coalition member
            // votes in favor
            let offered: f64 = coalition.iter().map(|&j| demand[j]).sum();
            let favorable = 1 + coalition.len();
            if favorable >= k {
                for &j in &coalition {
                    pay[j] += discount[j] * demand[j];
                }
                pay[proposer] += discount[proposer] * (1.0 - offered);
                period = t;
                break;
            }
            for i in 0..n {
                discount[i] *= deltas[i];
            }
        }
        *agreement.entry(period).or_insert(0) += 1;
        for i in 0..n {
            pay_sum[i] += pay[i];
            pay_sq[i] += pay[i] * pay[i];
        }
    }

    let r = rounds as f64;
    let mut stats = SimulationStats {
        rounds,
        agreement_histogram: agreement.into_iter().collect(),
        p_hat: Vec::with_capacity(n),
        p_se: Vec::with_capacity(n),
        mu_hat: Vec::with_capacity(n),
        mu_se: Vec::with_capacity(n),
        v_hat: Vec::with_capacity(n),
        v_se: Vec::with_capacity(n),
    };
    for i in 0..n {
        let ph = p_cnt[i] as f64 / r;
        let mh = mu_cnt[i] as f64 / r;
        stats.p_hat.push(ph);
        stats.p_se.push((ph * (1.0 - ph) / r).sqrt());
        stats.mu_hat.push(mh);
        stats.mu_se.push((mh * (1.0 - mh) / r).sqrt());
        let mean = pay_sum[i] / r;
        let var = (pay_sq[i] / r - mean * mean).max(0.0);
        stats.v_hat.push(mean);
        stats.v_se.push((var / r).sqrt());
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{benchmark_game, biased_game, biased_game_values};
    use crate::solver::{solve_game, SolverConfig};

    #[test]
    fn deviation_gains_vanish_at_benchmark_k2() {
        let game = benchmark_game(2);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        for agent in 0..4 {
            let rep = best_response_scan(&game, &eq, agent, (0.0, 2.0, 4001)).unwrap();
            assert!(rep.gain <= 1e-5, "agent {agent} gains {:.2e}", rep.gain);
            assert!(rep.gain >= -1e-12);
        }
    }

    #[test]
    fn zero_bias_agent_best_response_is_zero() {
        let mut game = benchmark_game(2);
        game.agents[3].alpha = 0.0;
        game.agents[3].beta = 0.3;
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        assert!(eq.x[3].abs() < 1e-12);
        let rep = best_response_scan(&game, &eq, 3, (0.0, 1.0, 2001)).unwrap();
        assert!(rep.gain <= 1e-9);
        assert_eq!(rep.best_deviation, 0.0);
    }

    #[test]
    fn fixed_point_matches_dictator_benchmark() {
        let game = benchmark_game(1);
        let x = static_contest_fixed_point(&game, 0.5, 20_000).unwrap();
        let expect = [3.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0];
        for i in 0..4 {
            assert!((x[i] - expect[i]).abs() < 1e-8, "x[{i}] = {}", x[i]);
        }
    }

    #[test]
    fn fixed_point_two_symmetric_agents() {
        // textbook symmetric lottery contest: efforts 1/4 each
        let game = {
            use crate::model::{AgentSpec, Fun, FunctionSpec, GameSpec};
            let a = AgentSpec::new(
                FunctionSpec::impact(Fun::Linear { eta: 1.0 }).unwrap(),
                FunctionSpec::cost(Fun::Linear { eta: 1.0 }).unwrap(),
                0.5,
                1.0,
                0.0,
            )
            .unwrap();
            GameSpec::new(vec![a.clone(), a], 1).unwrap()
        };
        let x = static_contest_fixed_point(&game, 0.5, 20_000).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-9);
        assert!((x[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn simulation_rejects_reserved_seed() {
        let game = benchmark_game(2);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        assert!(matches!(
            simulate_bargaining(&game, &eq, 10, 0),
            Err(OracleError::ReservedSeed)
        ));
    }

    #[test]
    fn simulation_is_seed_reproducible() {
        let game = benchmark_game(2);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let a = simulate_bargaining(&game, &eq, 2000, 7).unwrap();
        let b = simulate_bargaining(&game, &eq, 2000, 7).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.v_hat, b.v_hat);
        let c = simulate_bargaining(&game, &eq, 2000, 8).unwrap();
        assert!(a.p_hat != c.p_hat || a.v_hat != c.v_hat);
    }

    #[test]
    fn simulation_settles_immediately_and_matches_values() {
        let game = biased_game(0.01);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let stats = simulate_bargaining(&game, &eq, 200_000, 42).unwrap();
        assert_eq!(stats.agreement_histogram, vec![(0, 200_000)]);
        let vals = biased_game_values(0.01);
        for i in 0..3 {
            let err = (stats.v_hat[i] - vals.v[i]).abs();
            assert!(
                err <= 3.0 * stats.v_se[i] + 1e-12,
                "agent {i}: err {err:.2e} vs 3se {:.2e}",
                3.0 * stats.v_se[i]
            );
        }
    }

    #[test]
    fn dictator_simulation_gives_winner_everything() {
        let game = benchmark_game(1);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let stats = simulate_bargaining(&game, &eq, 5000, 3).unwrap();
        assert_eq!(stats.agreement_histogram, vec![(0, 5000)]);
        // every non-proposer nets exactly minus their effort cost, so the
        // payoff mean decomposes as p * 1 - cost
        for i in 0..4 {
            let cost = game.agents[i].cost_at(eq.x[i]).unwrap();
            let expect = stats.p_hat[i] - cost;
            assert!((stats.v_hat[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn systematic_sampling_hits_marginals() {
        let weights = [0.6, 0.9, 0.5, 0.0];
        let mut counts = [0u64; 4];
        let rounds = 200_000u64;
        let mut out = Vec::new();
        for round in 0..rounds {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            rng.set_stream(round);
            let u: f64 = rng.random();
            systematic_sample(&weights, 2, u, &mut out);
            assert_eq!(out.len(), 2);
            for &j in &out {
                counts[j] += 1;
            }
        }
        for j in 0..4 {
            let freq = counts[j] as f64 / rounds as f64;
            assert!(
                (freq - weights[j]).abs() < 5e-3,
                "marginal {j}: {freq} vs {}",
                weights[j]
            );
        }
    }
}
