//! Stationary equilibrium solver.
//!
//! The equilibrium of a game is pinned down by a small system of conditions
//! on `(p, mu, Y, v_delta, v_l)`:
//!
//! * every agent's first-order condition, as an equality whenever the agent
//!   is away from its zero-effort corner,
//! * recognition probabilities summing to one,
//! * inclusion probabilities summing to `k - 1`,
//! * the budget identity `v_l + sum_{below} delta_i v_i + (k - |below|)
//!   v_delta = 1`.
//!
//! We solve it as four nested one-dimensional root problems. Innermost,
//! given `(Y, v_delta, v_l)` each agent's share `p_i` is the unique root of
//! a strictly increasing function `phi`, with a closed corner test at
//! `p_i = beta_i / Y`; its inclusion probability `mu_i` follows from a
//! median formula. Given `(v_delta, v_l)` the aggregate output `Y` makes the
//! shares sum to one (the share sum is strictly decreasing in `Y`, so plain
//! bracketing suffices and the root is the largest one). Given `v_l` the
//! vote price `v_delta` makes inclusion probabilities sum to `k - 1`; this
//! level can have plateaus at the extreme rules (k = 1 and k = n), which we
//! resolve by locating the relevant plateau edge. Outermost, `v_l` scans
//! [0, 1] on a grid for roots of the budget residual; equilibria need not be
//! unique, so all bracketed roots are reported and the largest is canonical.

use crate::model::{AgentSpec, Equilibrium, GameSpec, ModelError, PricePosition};
use crate::roots::{bisect_predicate, brent};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower floor substituted for the aggregate-output bracket when every
/// headstart is zero.
const EPS_Y: f64 = 1e-30;
/// Hard cap for geometric bracket growth.
const GROWTH_CAP: f64 = 1e30;
/// Tolerance distinguishing "on the inclusion-mass plateau" from "off it".
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("share sum falls below 1 at the lower output bound (v_delta = {v_delta}, v_l = {v_l}); no equilibrium candidate")]
    NoOutputRoot { v_delta: f64, v_l: f64 },
    #[error("bracket growth diverged while solving for {what}")]
    Divergence { what: &'static str },
    #[error("no vote-price root located for v_l = {v_l}")]
    NoVotePriceRoot { v_l: f64 },
    #[error("no surplus root found on [0, 1] after a refined rescan")]
    NoSurplusRoot,
    #[error("partition inconsistent: {0}")]
    Classification(String),
    #[error("coalition fill did not reach the marginals (residual {residual:.3e})")]
    CoalitionFill { residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Which surplus root the solver reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootSelection {
    /// The root with the largest residual surplus is canonical.
    Largest,
    /// Assemble every bracketed root.
    All,
}

/// Numerical knobs. Defaults resolve every bundled scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Interval tolerance for all inner bisections.
    pub bisect_tol: f64,
    /// Grid density of the outer surplus scan (multi-root search).
    pub grid_points: usize,
    /// Grid density of the downward vote-price scan.
    pub inner_grid_points: usize,
    /// Geometric growth factor used to establish upper brackets.
    pub bracket_growth: f64,
    /// Band (in discounted-value units) classifying agents as sitting at the
    /// marginal vote price.
    pub partition_tol: f64,
    /// Iteration cap per bracketed search and per coalition-fill sweep.
    pub max_iter: usize,
    pub root_selection: RootSelection,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-11,
            grid_points: 512,
            inner_grid_points: 64,
            bracket_growth: 2.0,
            partition_tol: 1e-8,
            max_iter: 200,
            root_selection: RootSelection::Largest,
        }
    }
}

/// Intermediate state produced by the innermost level for one agent.
#[derive(Debug, Clone, Copy)]
pub struct AgentState {
    pub p: f64,
    pub mu: f64,
    pub x: f64,
    pub cost: f64,
    pub tier: PricePosition,
}

/// Warm-start hints threaded through the outer scan. Nested roots move
/// continuously in `v_l`, so the previous node's roots make excellent
/// starting brackets.
#[derive(Debug, Clone, Copy, Default)]
pub struct Hints {
    pub vote_price: Option<f64>,
    pub output: Option<f64>,
}

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

pub struct Solver<'a> {
    game: &'a GameSpec,
    cfg: &'a SolverConfig,
    floors: Vec<f64>,
    floor_sum: f64,
}

impl<'a> Solver<'a> {
    pub fn new(game: &'a GameSpec, cfg: &'a SolverConfig) -> Self {
        let floors: Vec<f64> = game.agents.iter().map(|a| a.effective_impact_at_zero()).collect();
        let floor_sum = floors.iter().sum();
        Self { game, cfg, floors, floor_sum }
    }

    pub fn game(&self) -> &GameSpec {
        self.game
    }

    /// First-order-condition residual for agent `i` at share `p`, holding
    /// `(y, v_delta, v_l)` fixed. Strictly increasing in `p`.
    fn phi(&self, i: usize, y: f64, v_delta: f64, v_l: f64, p: f64) -> Result<f64, SolveError> {
        let ag = &self.game.agents[i];
        let x = ag.invert_effective_impact(y * p)?;
        let cx = ag.cost_at(x)?;
        let marg_cost = ag.cost.derivative(x)?;
        let marg_impact = ag.effective_impact_derivative(x)?;
        let lhs = if marg_impact.is_infinite() { 0.0 } else { y * marg_cost / marg_impact };
        let top = (1.0 - p) * (v_l + v_delta);
        let bottom = (1.0 - p) * v_l;
        let mid = v_l + v_delta - v_delta / ag.delta - cx;
        Ok(lhs - median3(top, bottom, mid))
    }

    /// Inclusion probability and tier from the median formula, given the
    /// solved share. At `v_delta = 0` the median collapses and the limit is
    /// `mu = 0`.
    fn mu_and_tier(
        &self,
        i: usize,
        v_delta: f64,
        v_l: f64,
        p: f64,
        cost: f64,
    ) -> (f64, PricePosition) {
        let ag = &self.game.agents[i];
        let tol = self.cfg.partition_tol;
        if v_delta <= 0.0 {
            let t = cost - p * v_l;
            let tier = if t > tol {
                PricePosition::Below
            } else if t < -tol {
                PricePosition::Above
            } else {
                PricePosition::At
            };
            return (0.0, tier);
        }
        let upper = v_delta * (1.0 - p);
        let t = v_delta / ag.delta - p * (v_l + v_delta) + cost;
        let mu = median3(0.0, upper, t) / v_delta;
        // classify against the marginal vote price in discounted-value units
        let dv_cheap = ag.delta * (p * v_l - cost) / (1.0 - ag.delta);
        let dv_dear = ag.delta * (p * (v_l + v_delta) - cost);
        let tier = if dv_cheap < v_delta - tol && t >= upper {
            PricePosition::Below
        } else if dv_dear > v_delta + tol && t <= 0.0 {
            PricePosition::Above
        } else {
            PricePosition::At
        };
        (mu, tier)
    }

    /// Innermost level: unique `(p_i, mu_i)` for one agent at a fixed outer
    /// state. Returns the zero-effort corner `p = beta_i / y` whenever the
    /// corner residual is already nonnegative.
    pub fn agent_state(
        &self,
        i: usize,
        y: f64,
        v_delta: f64,
        v_l: f64,
    ) -> Result<AgentState, SolveError> {
        let ag = &self.game.agents[i];
        let corner_p = (self.floors[i] / y).min(1.0);
        let corner = if ag.alpha == 0.0 {
            true
        } else {
            self.phi(i, y, v_delta, v_l, corner_p)? >= 0.0
        };
        let p = if corner {
            corner_p
        } else {
            let f = |p: f64| self.phi(i, y, v_delta, v_l, p).unwrap_or(f64::INFINITY);
            let root = brent(corner_p, 1.0, f, self.cfg.bisect_tol, 1e-14, self.cfg.max_iter)
                .ok_or_else(|| {
                    SolveError::Numerical(format!(
                        "share bracket failed for agent {i} at y = {y}"
                    ))
                })?;
            root.x
        };
        let x = if corner { 0.0 } else { ag.invert_effective_impact(y * p)? };
        let cost = ag.cost_at(x)?;
        let (mu, tier) = self.mu_and_tier(i, v_delta, v_l, p, cost);
        Ok(AgentState { p, mu, x, cost, tier })
    }

    fn share_sum(&self, y: f64, v_delta: f64, v_l: f64) -> Result<f64, SolveError> {
        let mut s = 0.0;
        for i in 0..self.game.n() {
            s += self.agent_state(i, y, v_delta, v_l)?.p;
        }
        Ok(s)
    }

    /// Second level: the aggregate effective output `y` at which shares sum
    /// to one. The sum is strictly decreasing in `y` wherever it exceeds the
    /// corner total, so the bracketed root is unique and equals the largest
    /// one.
    pub fn total_output(
        &self,
        v_delta: f64,
        v_l: f64,
        hint: Option<f64>,
    ) -> Result<f64, SolveError> {
        let lo = if self.floor_sum > 0.0 { self.floor_sum } else { EPS_Y };
        let h = |y: f64| -> Result<f64, SolveError> { Ok(self.share_sum(y, v_delta, v_l)? - 1.0) };

        // warm bracket from the hint when it still straddles the root
        if let Some(y0) = hint {
            let mut a = (y0 / self.cfg.bracket_growth).max(lo);
            let mut b = y0 * self.cfg.bracket_growth;
            let mut ha = h(a)?;
            let mut hb = h(b)?;
            let mut tries = 0;
            while ha < 0.0 && a > lo && tries < 4 {
                a = (a / self.cfg.bracket_growth).max(lo);
                ha = h(a)?;
                tries += 1;
            }
            tries = 0;
            while hb > 0.0 && b < GROWTH_CAP && tries < 8 {
                b *= self.cfg.bracket_growth;
                hb = h(b)?;
                tries += 1;
            }
            if ha >= 0.0 && hb <= 0.0 {
                let f = |y: f64| h(y).unwrap_or(f64::NAN);
                if let Some(r) =
                    brent(a, b, f, self.cfg.bisect_tol * b.max(1.0), 1e-13, self.cfg.max_iter)
                {
                    if r.fx.is_finite() {
                        return Ok(r.x);
                    }
                }
            }
        }

        let h_lo = h(lo)?;
        if h_lo < -1e-9 {
            return Err(SolveError::NoOutputRoot { v_delta, v_l });
        }
        if h_lo <= 0.0 {
            return Ok(lo);
        }
        let mut hi = lo.max(1e-6);
        let mut h_hi = h(hi)?;
        while h_hi > 0.0 {
            hi *= self.cfg.bracket_growth;
            if hi > GROWTH_CAP {
                return Err(SolveError::Divergence { what: "aggregate output" });
            }
            h_hi = h(hi)?;
        }
        let f = |y: f64| h(y).unwrap_or(f64::NAN);
        let root = brent(lo, hi, f, self.cfg.bisect_tol * hi.max(1.0), 1e-13, self.cfg.max_iter)
            .ok_or_else(|| SolveError::Numerical("output bracket lost its sign change".into()))?;
        if !root.fx.is_finite() {
            return Err(SolveError::Numerical("share sum became non-finite".into()));
        }
        Ok(root.x)
    }

    /// Inclusion mass at a given vote price, together with the output root
    /// it was evaluated at.
    fn inclusion_mass(
        &self,
        v_delta: f64,
        v_l: f64,
        y_hint: Option<f64>,
    ) -> Result<(f64, f64), SolveError> {
        let y = self.total_output(v_delta, v_l, y_hint)?;
        let mut s = 0.0;
        for i in 0..self.game.n() {
            s += self.agent_state(i, y, v_delta, v_l)?.mu;
        }
        Ok((s, y))
    }

    /// Third level: the vote price `v_delta` at which inclusion
    /// probabilities sum to `k - 1`.
    ///
    /// For 1 < k < n this is the largest crossing of the inclusion mass with
    /// `k - 1`, located by a downward grid scan from a grown upper bracket.
    /// The extreme rules are plateau cases: at k = 1 the mass is identically
    /// zero up to some price and the largest zero is the plateau's right
    /// edge; at k = n the mass reaches `n - 1` exactly at some price and
    /// stays there, and the equilibrium price is the plateau's left edge
    /// (beyond it the cheap set would swallow more than k - 1 agents).
    pub fn vote_price(&self, v_l: f64, hints: Hints) -> Result<(f64, f64), SolveError> {
        let k1 = (self.game.k - 1) as f64;
        let n = self.game.n();
        let y_cell = std::cell::Cell::new(hints.output);
        let g = |v: f64| -> Result<f64, SolveError> {
            if v <= 0.0 {
                // zero vote price means nobody is bought in expectation
                return Ok(-k1);
            }
            let (mass, y) = self.inclusion_mass(v, v_l, y_cell.get())?;
            y_cell.set(Some(y));
            Ok(mass - k1)
        };

        let v = if self.game.k == 1 {
            self.zero_plateau_edge(&g, hints.vote_price)?
        } else if self.game.k == n {
            self.full_plateau_edge(&g, hints.vote_price)?
        } else {
            self.largest_crossing(&g, hints.vote_price, v_l)?
        };
        let y = self.total_output(v, v_l, y_cell.get())?;
        Ok((v, y))
    }

    /// k = 1: largest price with zero inclusion mass.
    fn zero_plateau_edge(
        &self,
        g: &dyn Fn(f64) -> Result<f64, SolveError>,
        hint: Option<f64>,
    ) -> Result<f64, SolveError> {
        let mut lo = 0.0;
        let mut hi = hint.map(|h| h.max(1e-9) * 2.0).unwrap_or(1e-6);
        let mut ghi = g(hi)?;
        while ghi <= EDGE_TOL {
            lo = hi;
            hi *= 4.0;
            if hi > GROWTH_CAP {
                return Err(SolveError::Divergence { what: "vote price (k = 1)" });
            }
            ghi = g(hi)?;
        }
        // refine downward so the bracket hugs the last point still on the plateau
        let m = self.cfg.inner_grid_points.max(4);
        for j in (0..m).rev() {
            let v = lo + (hi - lo) * j as f64 / m as f64;
            if v <= lo {
                break;
            }
            if g(v)? <= EDGE_TOL {
                lo = v;
                break;
            }
            hi = v;
        }
        let pred = |v: f64| g(v).map(|gv| gv > EDGE_TOL).unwrap_or(true);
        Ok(bisect_predicate(lo, hi, pred, self.cfg.bisect_tol, self.cfg.max_iter))
    }

    /// k = n: smallest price at which the inclusion mass reaches `n - 1`.
    fn full_plateau_edge(
        &self,
        g: &dyn Fn(f64) -> Result<f64, SolveError>,
        hint: Option<f64>,
    ) -> Result<f64, SolveError> {
        let mut lo = 0.0;
        let mut hi = hint.map(|h| h.max(1e-9) * 2.0).unwrap_or(1e-6);
        let mut ghi = g(hi)?;
        while ghi < -EDGE_TOL {
            lo = hi;
            hi *= 4.0;
            if hi > GROWTH_CAP {
                return Err(SolveError::Divergence { what: "vote price (k = n)" });
            }
            ghi = g(hi)?;
        }
        let m = self.cfg.inner_grid_points.max(4);
        for j in (0..m).rev() {
            let v = lo + (hi - lo) * j as f64 / m as f64;
            if v <= lo {
                break;
            }
            if g(v)? < -EDGE_TOL {
                lo = v;
                break;
            }
            hi = v;
        }
        let pred = |v: f64| g(v).map(|gv| gv >= -EDGE_TOL).unwrap_or(false);
        Ok(bisect_predicate(lo, hi, pred, self.cfg.bisect_tol, self.cfg.max_iter))
    }

    /// 1 < k < n: last sign change of the inclusion-mass residual, scanning
    /// down from an upper bracket where the residual is strictly positive.
    fn largest_crossing(
        &self,
        g: &dyn Fn(f64) -> Result<f64, SolveError>,
        hint: Option<f64>,
        v_l: f64,
    ) -> Result<f64, SolveError> {
        // fast path: the previous root usually still brackets the new one
        if let Some(h) = hint {
            let mut a = h / 1.6;
            let mut b = h * 1.6;
            let mut ga = g(a)?;
            let mut gb = g(b)?;
            for _ in 0..3 {
                if ga < -EDGE_TOL {
                    break;
                }
                a /= 2.0;
                ga = g(a)?;
            }
            for _ in 0..3 {
                if gb > EDGE_TOL {
                    break;
                }
                b *= 2.0;
                gb = g(b)?;
            }
            if ga < -EDGE_TOL && gb > EDGE_TOL {
                let f = |v: f64| g(v).unwrap_or(f64::NAN);
                if let Some(r) =
                    brent(a, b, f, self.cfg.bisect_tol * b.max(1.0), 1e-13, self.cfg.max_iter)
                {
                    if r.fx.is_finite() && r.fx.abs() <= 1e-7 {
                        return Ok(r.x);
                    }
                }
            }
        }

        let mut hi = 1e-6;
        let mut ghi = g(hi)?;
        while ghi <= EDGE_TOL {
            hi *= self.cfg.bracket_growth;
            if hi > GROWTH_CAP {
                return Err(SolveError::Divergence { what: "vote price" });
            }
            ghi = g(hi)?;
        }
        let m = self.cfg.inner_grid_points.max(4);
        let mut upper = hi;
        let mut g_upper = ghi;
        let mut found: Option<(f64, f64)> = None;
        for j in (0..m).rev() {
            let v = hi * j as f64 / m as f64;
            let gv = g(v)?;
            if gv < -EDGE_TOL {
                found = Some((v, gv));
                break;
            }
            upper = v;
            g_upper = gv;
        }
        let (lower, _g_lower) = found.ok_or(SolveError::NoVotePriceRoot { v_l })?;
        if g_upper > EDGE_TOL {
            let f = |v: f64| g(v).unwrap_or(f64::NAN);
            let r = brent(
                lower,
                upper,
                f,
                self.cfg.bisect_tol * upper.max(1.0),
                1e-13,
                self.cfg.max_iter,
            )
            .ok_or(SolveError::NoVotePriceRoot { v_l })?;
            Ok(r.x)
        } else {
            // the upper node already sits inside the residual band; treat it
            // as a plateau edge
            let pred = |v: f64| g(v).map(|gv| gv >= -EDGE_TOL).unwrap_or(false);
            Ok(bisect_predicate(lower, upper, pred, self.cfg.bisect_tol, self.cfg.max_iter))
        }
    }

    /// Budget residual at a surplus candidate, with the two inner levels
    /// solved beneath it.
    pub fn surplus_residual(&self, v_l: f64, hints: Hints) -> Result<(f64, Hints), SolveError> {
        let (v_delta, y) = self.vote_price(v_l, hints)?;
        let mut lhs = v_l;
        let mut below = 0usize;
        for i in 0..self.game.n() {
            let st = self.agent_state(i, y, v_delta, v_l)?;
            if st.tier == PricePosition::Below {
                let ag = &self.game.agents[i];
                lhs += ag.delta / (1.0 - ag.delta) * (st.p * v_l - st.cost);
                below += 1;
            }
        }
        lhs += (self.game.k as f64 - below as f64) * v_delta;
        Ok((lhs - 1.0, Hints { vote_price: Some(v_delta), output: Some(y) }))
    }

    /// Outermost level: all bracketed roots of the budget residual on
    /// [0, 1], ascending. Grid nodes where the inner levels fail (typical
    /// near `v_l = 0`) are skipped; a single automatic rescan at four times
    /// the density runs before giving up.
    pub fn surplus_roots(&self) -> Result<Vec<f64>, SolveError> {
        for attempt in 0..2 {
            let m = self.cfg.grid_points * if attempt == 0 { 1 } else { 4 };
            let roots = self.scan_surplus(m)?;
            if !roots.is_empty() {
                return Ok(roots);
            }
        }
        Err(SolveError::NoSurplusRoot)
    }

    fn scan_surplus(&self, m: usize) -> Result<Vec<f64>, SolveError> {
        let mut hints = Hints::default();
        let mut prev: Option<(f64, f64)> = None;
        let mut roots = Vec::new();
        for j in 0..=m {
            let v_l = j as f64 / m as f64;
            match self.surplus_residual(v_l, hints) {
                Ok((r, h)) => {
                    hints = h;
                    if r == 0.0 {
                        roots.push(v_l);
                    } else if let Some((pv, pr)) = prev {
                        if pr.signum() != r.signum() {
                            if let Some(root) = self.bisect_surplus(pv, v_l, pr, hints)? {
                                roots.push(root);
                            }
                        }
                    }
                    prev = Some((v_l, r));
                }
                Err(_) => {
                    // infeasible node: restart the sign chain
                    prev = None;
                }
            }
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        Ok(roots)
    }

    fn bisect_surplus(
        &self,
        mut lo: f64,
        mut hi: f64,
        mut r_lo: f64,
        mut hints: Hints,
    ) -> Result<Option<f64>, SolveError> {
        for _ in 0..self.cfg.max_iter {
            if hi - lo <= self.cfg.bisect_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (r_mid, h) = match self.surplus_residual(mid, hints) {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
            hints = h;
            if r_mid == 0.0 {
                return Ok(Some(mid));
            }
            if r_mid.signum() == r_lo.signum() {
                lo = mid;
                r_lo = r_mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }

    /// Recomputes the full equilibrium object beneath a surplus root.
    pub fn assemble(&self, v_l: f64) -> Result<Equilibrium, SolveError> {
        let (v_delta, y) = self.vote_price(v_l, Hints::default())?;
        let n = self.game.n();
        let mut states = Vec::with_capacity(n);
        for i in 0..n {
            states.push(self.agent_state(i, y, v_delta, v_l)?);
        }
        let partition: Vec<PricePosition> = states.iter().map(|s| s.tier).collect();
        let below: Vec<usize> =
            (0..n).filter(|&i| partition[i] == PricePosition::Below).collect();
        if below.len() > self.game.k - 1 {
            return Err(SolveError::Classification(format!(
                "{} agents priced strictly below the marginal vote with k = {}",
                below.len(),
                self.game.k
            )));
        }
        let mut x = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for (i, st) in states.iter().enumerate() {
            let ag = &self.game.agents[i];
            x.push(st.x);
            p.push(st.p);
            let (mi, vi) = match st.tier {
                PricePosition::Below => {
                    (1.0 - st.p, (st.p * v_l - st.cost) / (1.0 - ag.delta))
                }
                PricePosition::At => (st.mu.clamp(0.0, 1.0 - st.p), v_delta / ag.delta),
                PricePosition::Above => (0.0, st.p * (v_l + v_delta) - st.cost),
            };
            mu.push(mi);
            v.push(vi);
        }
        let psi = coalition_fill(&p, &mu, &partition, self.game.k, self.cfg)?;
        Ok(Equilibrium {
            x,
            p,
            mu,
            psi,
            v,
            y,
            v_delta,
            v_l,
            partition,
            residuals: Vec::new(),
        })
    }
}

/// Solves a game and attaches the verifier's residual breakdown. The
/// canonical equilibrium sits at the largest surplus root.
pub fn solve_game(game: &GameSpec, cfg: &SolverConfig) -> Result<Equilibrium, SolveError> {
    let solver = Solver::new(game, cfg);
    let roots = solver.surplus_roots()?;
    let v_l = *roots.last().expect("surplus_roots never returns empty");
    let mut eq = solver.assemble(v_l)?;
    eq.residuals = verify_equilibrium(game, &eq, 1e-7).entries;
    Ok(eq)
}

/// Assembles every bracketed surplus root, ascending.
pub fn solve_game_all(game: &GameSpec, cfg: &SolverConfig) -> Result<Vec<Equilibrium>, SolveError> {
    let solver = Solver::new(game, cfg);
    let roots = solver.surplus_roots()?;
    roots
        .into_iter()
        .map(|v_l| {
            let mut eq = solver.assemble(v_l)?;
            eq.residuals = verify_equilibrium(game, &eq, 1e-7).entries;
            Ok(eq)
        })
        .collect()
}

/// Fills the coalition matrix. Agents below the vote price are always
/// included, agents above never; columns at the price are fitted by
/// capacity-capped proportional water-filling so that every proposer buys
/// exactly `k - 1` votes and column masses hit the inclusion probabilities.
pub fn coalition_fill(
    p: &[f64],
    mu: &[f64],
    partition: &[PricePosition],
    k: usize,
    cfg: &SolverConfig,
) -> Result<Vec<Vec<f64>>, SolveError> {
    let n = p.len();
    let mut psi = vec![vec![0.0; n]; n];
    if k == 1 {
        return Ok(psi);
    }
    let at: Vec<usize> = (0..n).filter(|&j| partition[j] == PricePosition::At).collect();
    let below: Vec<usize> = (0..n).filter(|&j| partition[j] == PricePosition::Below).collect();

    // deterministic part: everyone buys the strictly cheap agents
    for i in 0..n {
        for &j in &below {
            if j != i {
                psi[i][j] = 1.0;
            }
        }
    }
    // remaining row demand, to be met from the at-price pool
    let mut need = vec![0.0; n];
    for i in 0..n {
        let fixed: f64 = psi[i].iter().sum();
        let r = (k - 1) as f64 - fixed;
        if r < -1e-9 {
            return Err(SolveError::Classification(format!(
                "proposer {i} owes {fixed} deterministic inclusions with k = {k}"
            )));
        }
        let avail = at.iter().filter(|&&j| j != i).count();
        if r > avail as f64 + 1e-9 {
            return Err(SolveError::CoalitionFill { residual: r - avail as f64 });
        }
        need[i] = r.max(0.0);
    }
    if at.is_empty() {
        return Ok(psi);
    }

    // water-filling: alternate exact row fits and exact column fits, both
    // with entries capped at 1
    let mut w = vec![vec![0.0f64; at.len()]; n];
    for i in 0..n {
        let avail = at.iter().filter(|&&j| j != i).count();
        if avail > 0 && need[i] > 0.0 {
            for (jj, &j) in at.iter().enumerate() {
                if j != i {
                    w[i][jj] = need[i] / avail as f64;
                }
            }
        }
    }
    let col_target: Vec<f64> = at.iter().map(|&j| mu[j]).collect();
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        // rows: scale-with-cap to meet each proposer's remaining demand
        for i in 0..n {
            fit_capped(&mut w[i], None, need[i], |jj| at[jj] != i);
        }
        // columns: scale-with-cap against recognition-weighted mass
        for (jj, &j) in at.iter().enumerate() {
            let mut col: Vec<f64> = (0..n).map(|i| w[i][jj]).collect();
            fit_capped(&mut col, Some(p), col_target[jj], |i| i != j);
            for i in 0..n {
                w[i][jj] = col[i];
            }
        }
        // measure row deviation (columns are exact right after their fit)
        residual = 0.0;
        for i in 0..n {
            let s: f64 = w[i].iter().sum();
            residual = residual.max((s - need[i]).abs());
        }
        if residual <= 1e-10 {
            break;
        }
    }
    if residual > 1e-8 {
        return Err(SolveError::CoalitionFill { residual });
    }
    for i in 0..n {
        for (jj, &j) in at.iter().enumerate() {
            psi[i][j] = w[i][jj].clamp(0.0, 1.0);
        }
    }
    Ok(psi)
}

/// Scales the admissible entries of `w` (optionally weighted) so that their
/// weighted sum hits `target`, capping every entry at 1. Binary search over
/// the scale factor.
fn fit_capped<F: Fn(usize) -> bool>(w: &mut [f64], weight: Option<&[f64]>, target: f64, ok: F) {
    let wsum = |scale: f64, w: &[f64]| -> f64 {
        w.iter()
            .enumerate()
            .map(|(i, &v)| {
                if !ok(i) {
                    return 0.0;
                }
                let cap = (v * scale).min(1.0);
                cap * weight.map(|q| q[i]).unwrap_or(1.0)
            })
            .sum()
    };
    if target <= 0.0 {
        for (i, v) in w.iter_mut().enumerate() {
            if ok(i) {
                *v = 0.0;
            }
        }
        return;
    }
    let base = wsum(1.0, w);
    if base <= 0.0 {
        // dead row or column; reseed uniformly before scaling
        let cnt = (0..w.len()).filter(|&i| ok(i)).count();
        if cnt == 0 {
            return;
        }
        for (i, v) in w.iter_mut().enumerate() {
            if ok(i) {
                *v = 1.0 / cnt as f64;
            }
        }
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while wsum(hi, w) < target && hi < 1e12 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if wsum(mid, w) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    for (i, v) in w.iter_mut().enumerate() {
        if ok(i) {
            *v = (*v * s).min(1.0);
        }
    }
}

/// Residual breakdown produced by the verifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub entries: Vec<(String, f64)>,
    pub max_residual: f64,
    pub pass: bool,
}

/// Checks every equilibrium condition as a residual: share and inclusion
/// sums, first-order slack (one-sided at corners, bracketed at kinks),
/// median consistency, the budget identity, coalition marginals, the value
/// recursion, and partition coherence.
pub fn verify_equilibrium(game: &GameSpec, eq: &Equilibrium, tol: f64) -> ResidualReport {
    let n = game.n();
    let k = game.k;
    let mut entries: Vec<(String, f64)> = Vec::new();
    let mut push = |name: &str, r: f64| entries.push((name.to_string(), r));

    let p_sum: f64 = eq.p.iter().sum();
    push("share_sum", (p_sum - 1.0).abs());
    let mu_sum: f64 = eq.mu.iter().sum();
    push("inclusion_sum", (mu_sum - (k as f64 - 1.0)).abs());

    // effective outputs must be consistent with shares
    let mut out_res = 0.0f64;
    for i in 0..n {
        let f = game.agents[i].effective_impact(eq.x[i]).unwrap_or(f64::NAN);
        out_res = out_res.max((f - eq.y * eq.p[i]).abs() / eq.y.max(1.0));
    }
    push("output_consistency", out_res);

    // first-order conditions: marginal cost over marginal impact, scaled by
    // output, against the share-weighted prize spread. At a kink the
    // condition binds anywhere inside the one-sided derivative bracket.
    let mut foc_res = 0.0f64;
    for i in 0..n {
        let ag = &game.agents[i];
        let x = eq.x[i];
        let rhs = (1.0 - eq.p[i]) * (eq.v_l + eq.v_delta) - eq.mu[i] * eq.v_delta;
        let right = eq.y * ag.cost.derivative(x).unwrap_or(f64::NAN)
            / ag.effective_impact_derivative(x).unwrap_or(f64::NAN);
        let left = eq.y * ag.cost.left_derivative(x).unwrap_or(f64::NAN)
            / (ag.alpha * ag.impact.left_derivative(x).unwrap_or(f64::NAN));
        let corner = ag.alpha == 0.0 || eq.p[i] <= ag.effective_impact_at_zero() / eq.y + 1e-9;
        if corner {
            // marginal cost may strictly exceed marginal benefit at zero
            let slack = if right.is_finite() { right - rhs } else { 0.0 };
            foc_res = foc_res.max((-slack).max(0.0));
        } else {
            let lo = if left.is_finite() { left.min(right) } else { right };
            let hi = if right.is_finite() { left.max(right) } else { left };
            let below = if lo.is_finite() { (lo - rhs).max(0.0) } else { 0.0 };
            let above = if hi.is_finite() { (rhs - hi).max(0.0) } else { 0.0 };
            foc_res = foc_res.max(below).max(above);
        }
    }
    push("foc", foc_res);

    // median consistency of inclusion probabilities
    let mut mu_res = 0.0f64;
    for i in 0..n {
        let ag = &game.agents[i];
        let cx = ag.cost_at(eq.x[i]).unwrap_or(f64::NAN);
        let m = if eq.v_delta <= 0.0 {
            0.0
        } else {
            let upper = eq.v_delta * (1.0 - eq.p[i]);
            let t = eq.v_delta / ag.delta - eq.p[i] * (eq.v_l + eq.v_delta) + cx;
            median3(0.0, upper, t) / eq.v_delta
        };
        mu_res = mu_res.max((m - eq.mu[i]).abs());
    }
    push("inclusion_median", mu_res);

    // budget identity
    let below: Vec<usize> = (0..n).filter(|&i| eq.partition[i] == PricePosition::Below).collect();
    let budget: f64 = eq.v_l
        + below.iter().map(|&i| game.agents[i].delta * eq.v[i]).sum::<f64>()
        + (k as f64 - below.len() as f64) * eq.v_delta;
    push("budget", (budget - 1.0).abs());

    // coalition marginals
    let mut row_res = 0.0f64;
    let mut col_res = 0.0f64;
    let mut range_res = 0.0f64;
    for i in 0..n {
        let s: f64 = eq.psi[i].iter().sum();
        row_res = row_res.max((s - (k as f64 - 1.0)).abs());
        for j in 0..n {
            let v = eq.psi[i][j];
            range_res = range_res.max((-v).max(0.0)).max((v - 1.0).max(0.0));
            if i == j {
                range_res = range_res.max(v.abs());
            }
            if i != j {
                match eq.partition[j] {
                    PricePosition::Below => range_res = range_res.max((v - 1.0).abs()),
                    PricePosition::Above => range_res = range_res.max(v.abs()),
                    PricePosition::At => {}
                }
            }
        }
    }
    for j in 0..n {
        let m: f64 = (0..n).filter(|&i| i != j).map(|i| eq.psi[i][j] * eq.p[i]).sum();
        col_res = col_res.max((m - eq.mu[j]).abs());
    }
    push("coalition_rows", row_res);
    push("coalition_columns", col_res);
    push("coalition_range", range_res);

    // value recursion
    let deltas: Vec<f64> = game.agents.iter().map(|a| a.delta).collect();
    let mut bellman = 0.0f64;
    for i in 0..n {
        let w = eq.vote_cost(&deltas, i);
        let cx = game.agents[i].cost_at(eq.x[i]).unwrap_or(f64::NAN);
        let rhs = eq.p[i] * (1.0 - w) + eq.mu[i] * deltas[i] * eq.v[i] - cx;
        bellman = bellman.max((eq.v[i] - rhs).abs());
    }
    push("value_recursion", bellman);

    // partition coherence and bounds
    let mut part_res = 0.0f64;
    for i in 0..n {
        let dv = deltas[i] * eq.v[i];
        match eq.partition[i] {
            PricePosition::Below => part_res = part_res.max((dv - eq.v_delta).max(0.0)),
            PricePosition::At => part_res = part_res.max((dv - eq.v_delta).abs()),
            PricePosition::Above => part_res = part_res.max((eq.v_delta - dv).max(0.0)),
        }
        part_res = part_res.max((-eq.v[i]).max(0.0));
        part_res = part_res.max((-eq.mu[i]).max(0.0));
        part_res = part_res.max((eq.mu[i] - (1.0 - eq.p[i])).max(0.0));
    }
    if below.len() > k - 1 {
        part_res = part_res.max((below.len() - (k - 1)) as f64);
    }
    push("partition", part_res);

    let max_residual = entries.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    ResidualReport { entries, max_residual, pass: max_residual <= tol }
}

/// Outcome of the fixed-profile analysis: the surplus split supported by a
/// frozen pair of recognition and effort profiles.
#[derive(Debug, Clone)]
pub struct FixedProfileOutcome {
    pub v_l: f64,
    pub v_delta: f64,
    pub mu: Vec<f64>,
    pub partition: Vec<PricePosition>,
}

/// Solves the inclusion-mass and budget conditions for `(v_l, v_delta)`
/// while holding `(p, x)` fixed, the designer's viewpoint when a target
/// profile is to be implemented under rule `k`. Same plateau-aware root
/// structure as the nested solver, two levels instead of four.
pub fn solve_fixed_profile(
    agents: &[AgentSpec],
    p: &[f64],
    x: &[f64],
    k: usize,
    cfg: &SolverConfig,
) -> Result<FixedProfileOutcome, SolveError> {
    let n = agents.len();
    let costs: Vec<f64> =
        x.iter().zip(agents).map(|(&xi, a)| a.cost_at(xi)).collect::<Result<_, _>>()?;
    let k1 = (k - 1) as f64;

    let mu_at = |v_l: f64, vd: f64, i: usize| -> f64 {
        if vd <= 0.0 {
            return 0.0;
        }
        let upper = vd * (1.0 - p[i]);
        let t = vd / agents[i].delta - p[i] * (v_l + vd) + costs[i];
        median3(0.0, upper, t) / vd
    };
    let tier_at = |v_l: f64, vd: f64, i: usize| -> PricePosition {
        let tol = cfg.partition_tol;
        let dv_cheap = agents[i].delta * (p[i] * v_l - costs[i]) / (1.0 - agents[i].delta);
        let dv_dear = agents[i].delta * (p[i] * (v_l + vd) - costs[i]);
        if dv_cheap < vd - tol && dv_dear < vd {
            PricePosition::Below
        } else if dv_dear > vd + tol && dv_cheap > vd {
            PricePosition::Above
        } else {
            PricePosition::At
        }
    };

    let price_for = |v_l: f64| -> Result<f64, SolveError> {
        let g = |vd: f64| -> Result<f64, SolveError> {
            if vd <= 0.0 {
                return Ok(-k1);
            }
            Ok((0..n).map(|i| mu_at(v_l, vd, i)).sum::<f64>() - k1)
        };
        // target mass k-1 is reached from below; find the last crossing
        let mut hi = 1e-6;
        let mut ghi = g(hi)?;
        let full = k == n;
        while (!full && ghi <= EDGE_TOL) || (full && ghi < -EDGE_TOL) {
            hi *= 2.0;
            if hi > GROWTH_CAP {
                return Err(SolveError::Divergence { what: "fixed-profile vote price" });
            }
            ghi = g(hi)?;
        }
        let m = cfg.inner_grid_points.max(4);
        let mut upper = hi;
        let mut lower = None;
        for j in (0..m).rev() {
            let v = hi * j as f64 / m as f64;
            let gv = g(v)?;
            if gv < -EDGE_TOL {
                lower = Some(v);
                break;
            }
            upper = v;
        }
        let lower = lower.ok_or(SolveError::NoVotePriceRoot { v_l })?;
        if g(upper)? > EDGE_TOL {
            let f = |v: f64| g(v).unwrap_or(f64::NAN);
            Ok(brent(lower, upper, f, cfg.bisect_tol, 1e-13, cfg.max_iter)
                .ok_or(SolveError::NoVotePriceRoot { v_l })?
                .x)
        } else {
            let pred = |v: f64| g(v).map(|gv| gv >= -EDGE_TOL).unwrap_or(false);
            Ok(bisect_predicate(lower, upper, pred, cfg.bisect_tol, cfg.max_iter))
        }
    };

    let residual = |v_l: f64| -> Result<(f64, f64), SolveError> {
        let vd = price_for(v_l)?;
        let mut lhs = v_l + k as f64 * vd;
        for i in 0..n {
            if tier_at(v_l, vd, i) == PricePosition::Below {
                let ag = &agents[i];
                lhs += ag.delta / (1.0 - ag.delta) * (p[i] * v_l - costs[i]) - vd;
            }
        }
        Ok((lhs - 1.0, vd))
    };

    // outer scan over the surplus, largest root canonical
    let m = cfg.grid_points;
    let mut prev: Option<(f64, f64)> = None;
    let mut best: Option<f64> = None;
    for j in 0..=m {
        let v_l = j as f64 / m as f64;
        match residual(v_l) {
            Ok((r, _)) => {
                if let Some((pv, pr)) = prev {
                    if pr.signum() != r.signum() || r == 0.0 {
                        let mut lo = pv;
                        let mut hi = v_l;
                        let mut r_lo = pr;
                        for _ in 0..cfg.max_iter {
                            if hi - lo <= cfg.bisect_tol {
                                break;
                            }
                            let mid = 0.5 * (lo + hi);
                            let (rm, _) = residual(mid)?;
                            if rm == 0.0 {
                                lo = mid;
                                hi = mid;
                                break;
                            }
                            if rm.signum() == r_lo.signum() {
                                lo = mid;
                                r_lo = rm;
                            } else {
                                hi = mid;
                            }
                        }
                        best = Some(0.5 * (lo + hi));
                    }
                }
                prev = Some((v_l, r));
            }
            Err(_) => {
                prev = None;
            }
        }
    }
    let v_l = best.ok_or(SolveError::NoSurplusRoot)?;
    let v_delta = price_for(v_l)?;
    let mu: Vec<f64> = (0..n).map(|i| mu_at(v_l, v_delta, i)).collect();
    let partition: Vec<PricePosition> = (0..n).map(|i| tier_at(v_l, v_delta, i)).collect();
    Ok(FixedProfileOutcome { v_l, v_delta, mu, partition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{benchmark_game, biased_game};
    use crate::model::{AgentSpec, Fun, FunctionSpec, GameSpec};

    fn linear_agent(eta: f64, delta: f64, alpha: f64, beta: f64) -> AgentSpec {
        AgentSpec::new(
            FunctionSpec::impact(Fun::Linear { eta }).unwrap(),
            FunctionSpec::cost(Fun::Linear { eta }).unwrap(),
            delta,
            alpha,
            beta,
        )
        .unwrap()
    }

    #[test]
    fn dictator_rule_symmetric_linear_shares() {
        // identical linear agents with spread 1: output root satisfies y = 1 - p
        let game = benchmark_game(1);
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let y = solver.total_output(0.00625, 0.99375, None).unwrap();
        assert!((y - 0.75).abs() < 1e-9, "y = {y}");
        let st = solver.agent_state(0, y, 0.00625, 0.99375).unwrap();
        assert!((st.p - 0.25).abs() < 1e-9);
        assert!((st.x - 3.0 / 16.0).abs() < 1e-8);
    }

    #[test]
    fn output_root_matches_brute_scan() {
        // one headstart-only agent next to a linear producer: trust the
        // bisection only after a blunt scan agrees
        let mk = |alpha: f64, beta: f64| {
            AgentSpec::new(
                FunctionSpec::impact(Fun::Linear { eta: 1.0 }).unwrap(),
                FunctionSpec::cost(Fun::Linear { eta: 1.0 }).unwrap(),
                0.5,
                alpha,
                beta,
            )
            .unwrap()
        };
        let game = GameSpec::new(vec![mk(0.0, 1.0), mk(1.0, 0.0)], 1).unwrap();
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let (v_delta, v_l) = (0.0, 1.0);
        let y = solver.total_output(v_delta, v_l, None).unwrap();
        let sum_at = |yy: f64| solver.share_sum(yy, v_delta, v_l).unwrap();
        // independent fine scan for the sign change of share_sum - 1
        let mut brute = None;
        let mut prev = sum_at(1.0) - 1.0;
        let mut grid = 1.0;
        while grid < 8.0 {
            let next = grid + 1e-4;
            let r = sum_at(next) - 1.0;
            if prev.signum() != r.signum() {
                brute = Some(next);
                break;
            }
            prev = r;
            grid = next;
        }
        let brute = brute.expect("scan must bracket the root");
        assert!((y - brute).abs() < 2e-4, "bisection {y} vs scan {brute}");
        assert!((sum_at(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_vote_price_forces_zero_inclusion() {
        let game = benchmark_game(2);
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let st = solver.agent_state(0, 0.75, 0.0, 0.9).unwrap();
        assert_eq!(st.mu, 0.0);
    }

    #[test]
    fn benchmark_k2_vote_price_near_published_value() {
        let game = benchmark_game(2);
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let (vd, y) = solver.vote_price(0.9600, Hints::default()).unwrap();
        assert!((vd - 0.0342).abs() < 1e-3, "vote price {vd}");
        let st = solver.agent_state(0, y, vd, 0.9600).unwrap();
        assert!((st.p - 0.2322).abs() < 1e-3, "p1 = {}", st.p);
    }

    #[test]
    fn biased_game_vote_price_is_exact_at_published_surplus() {
        let game = biased_game(0.01);
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let (vd, _) = solver.vote_price(105.0 / 124.0, Hints::default()).unwrap();
        assert!((vd - 3.0 / 31.0).abs() < 1e-9, "vote price {vd}");
    }

    #[test]
    fn unanimity_vote_price_sits_at_plateau_edge() {
        // symmetric agents, k = n: inclusion mass must reach n - 1 exactly
        let agents = vec![linear_agent(1.0, 0.5, 1.0, 0.0); 3];
        let game = GameSpec::new(agents, 3).unwrap();
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let roots = solver.surplus_roots().unwrap();
        let v_l = *roots.last().unwrap();
        let (vd, y) = solver.vote_price(v_l, Hints::default()).unwrap();
        let mut mass = 0.0;
        for i in 0..3 {
            let st = solver.agent_state(i, y, vd, v_l).unwrap();
            mass += st.mu;
            // every agent is pinned at its inclusion cap under unanimity
            assert!((st.mu - (1.0 - st.p)).abs() < 1e-6);
        }
        assert!((mass - 2.0).abs() < 1e-7);
        // direct check of the median condition at the returned point: the
        // interior branch must sit at its upper edge for the marginal agent
        let st = solver.agent_state(0, y, vd, v_l).unwrap();
        let t = vd / 0.5 - st.p * (v_l + vd) + st.cost;
        assert!(t >= vd * (1.0 - st.p) - 1e-6);
    }

    #[test]
    fn dictator_rule_budget_closes_to_one() {
        let game = benchmark_game(1);
        let cfg = SolverConfig::default();
        let solver = Solver::new(&game, &cfg);
        let roots = solver.surplus_roots().unwrap();
        assert_eq!(roots.len(), 1, "dictator equilibria are unique");
        let eq = solver.assemble(roots[0]).unwrap();
        assert!((eq.v_l + eq.v_delta - 1.0).abs() < 1e-8);
        assert!(eq.mu.iter().all(|&m| m.abs() < 1e-9));
        assert!(eq.psi.iter().flatten().all(|&v| v == 0.0));
        for (i, &xi) in eq.x.iter().enumerate() {
            let expect = [3.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0, 15.0 / 16.0][i];
            assert!((xi - expect).abs() < 1e-8, "x[{i}] = {xi}");
        }
    }

    #[test]
    fn benchmark_k2_equilibrium_matches_published_table() {
        let game = benchmark_game(2);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        assert!((eq.v_l - 0.9600).abs() < 5e-4, "v_l = {}", eq.v_l);
        assert!((eq.v_delta - 0.0342).abs() < 5e-4);
        assert!((eq.p[0] - 0.2322).abs() < 5e-4);
        assert!((eq.p[1] - 0.2559).abs() < 5e-4);
        assert!((eq.x[0] - 0.1711).abs() < 5e-4);
        assert!((eq.x[1] - 0.9433).abs() < 5e-4);
        assert!((eq.mu[0] - 0.7678).abs() < 5e-4);
        let total: f64 = eq.x.iter().sum();
        assert!((total - 3.0011).abs() < 5e-4);
        let report = verify_equilibrium(&game, &eq, 1e-7);
        assert!(report.pass, "residuals {:?}", report.entries);
    }

    #[test]
    fn biased_game_reproduces_exact_rationals() {
        let c = 0.01;
        let game = biased_game(c);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let x_expect = [70.0 / 372.0, 57.0 / 372.0, 78.0 / (372.0 * c)];
        let v_expect = [56.0 / 372.0, 72.0 / 372.0, 39.0 / 372.0];
        for i in 0..3 {
            assert!((eq.p[i] - 1.0 / 3.0).abs() < 1e-8, "p[{i}] = {}", eq.p[i]);
            assert!((eq.x[i] - x_expect[i]).abs() < 1e-8, "x[{i}] = {}", eq.x[i]);
            assert!((eq.v[i] - v_expect[i]).abs() < 1e-8, "v[{i}] = {}", eq.v[i]);
        }
        assert!((eq.v_l - 105.0 / 124.0).abs() < 1e-8);
        assert!((eq.v_delta - 3.0 / 31.0).abs() < 1e-8);
        let mu_expect = [2.0 / 3.0, 1.0 / 3.0, 0.0];
        for i in 0..3 {
            assert!((eq.mu[i] - mu_expect[i]).abs() < 1e-8);
        }
        // winning coalitions: proposer 1 buys 2, proposers 2 and 3 buy 1
        assert!((eq.psi[0][1] - 1.0).abs() < 1e-8);
        assert!(eq.psi[0][2].abs() < 1e-8);
        assert!((eq.psi[1][0] - 1.0).abs() < 1e-8);
        assert!((eq.psi[2][0] - 1.0).abs() < 1e-8);
        assert!(eq.psi[2][1].abs() < 1e-8);
    }

    #[test]
    fn perturbed_effort_fails_verification() {
        let game = benchmark_game(2);
        let mut eq = solve_game(&game, &SolverConfig::default()).unwrap();
        eq.x[0] += 1e-3;
        let report = verify_equilibrium(&game, &eq, 1e-7);
        assert!(!report.pass);
        let foc = report.entries.iter().find(|(n, _)| n == "foc").unwrap().1;
        assert!(foc > 1e-4, "foc residual {foc}");
    }

    #[test]
    fn published_rounded_table_verifies_at_coarse_tolerance() {
        // the benchmark table rounds to four digits; residuals must stay
        // within 1e-3 when those numbers are re-entered verbatim
        let game = benchmark_game(2);
        let p = vec![0.2322, 0.2559, 0.2559, 0.2559];
        let x = vec![0.1711, 0.9433, 0.9433, 0.9433];
        let mu = vec![0.7678, 0.0774, 0.0774, 0.0774];
        let (v_l, v_delta) = (0.9600, 0.0342);
        let y: f64 = x
            .iter()
            .zip(&game.agents)
            .map(|(&xi, a)| a.effective_impact(xi).unwrap())
            .sum();
        let partition = vec![
            PricePosition::Below,
            PricePosition::At,
            PricePosition::At,
            PricePosition::At,
        ];
        let v = vec![
            (p[0] * v_l - game.agents[0].cost_at(x[0]).unwrap()) / (1.0 - 0.1),
            v_delta / 0.5,
            v_delta / 0.5,
            v_delta / 0.5,
        ];
        let cfg = SolverConfig::default();
        let psi = coalition_fill(&p, &mu, &partition, 2, &cfg).unwrap();
        let eq = Equilibrium {
            x,
            p,
            mu,
            psi,
            v,
            y,
            v_delta,
            v_l,
            partition,
            residuals: Vec::new(),
        };
        let report = verify_equilibrium(&game, &eq, 1e-3);
        assert!(report.pass, "residuals {:?}", report.entries);
    }

    #[test]
    fn coalition_fill_trivial_rules() {
        let cfg = SolverConfig::default();
        let p = vec![0.25; 4];
        // unanimity: everyone includes everyone else
        let mu = vec![0.75; 4];
        let partition = vec![PricePosition::At; 4];
        let psi = coalition_fill(&p, &mu, &partition, 4, &cfg).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.0 } else { 1.0 };
                assert!((psi[i][j] - want).abs() < 1e-8);
            }
        }
        let psi1 = coalition_fill(&p, &vec![0.0; 4], &partition, 1, &cfg).unwrap();
        assert!(psi1.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn fixed_profile_recovers_biased_game_split() {
        // freezing the solved profile must reproduce the same surplus split
        let game = biased_game(0.01);
        let eq = solve_game(&game, &SolverConfig::default()).unwrap();
        let out =
            solve_fixed_profile(&game.agents, &eq.p, &eq.x, 2, &SolverConfig::default()).unwrap();
        assert!((out.v_l - eq.v_l).abs() < 1e-7, "v_l {} vs {}", out.v_l, eq.v_l);
        assert!((out.v_delta - eq.v_delta).abs() < 1e-7);
    }
}
